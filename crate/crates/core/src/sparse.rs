//! Canonical sparse maps from lattice sites to nonzero residues.
//!
//! Automata (coefficients of shifts) and characters (exponents at sites)
//! share this storage: entries sorted lexicographically by site, no zero
//! residues, one entry per site. Structural equality is therefore algebraic
//! equality.

use alloc::vec::Vec;

use crate::algebra::Modulus;
use crate::lca::ShiftVector;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct SparseTerms {
    modulus: Modulus,
    dim: usize,
    terms: Vec<(ShiftVector, u32)>,
}

impl SparseTerms {
    pub(crate) fn empty(modulus: Modulus, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self {
            modulus,
            dim,
            terms: Vec::new(),
        })
    }

    pub(crate) fn from_entries<I>(modulus: Modulus, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ShiftVector, i64)>,
    {
        let mut out = Self::empty(modulus, dim)?;
        let mut raw = Vec::new();
        for (site, value) in entries {
            if site.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: site.dim(),
                });
            }
            raw.push((site, modulus.reduce(value)));
        }
        out.terms = canonicalize(modulus, raw);
        Ok(out)
    }

    /// Builds from entries already reduced mod `m` and of the right dimension.
    pub(crate) fn from_reduced(modulus: Modulus, dim: usize, raw: Vec<(ShiftVector, u32)>) -> Self {
        Self {
            modulus,
            dim,
            terms: canonicalize(modulus, raw),
        }
    }

    /// Builds from entries known to be sorted, distinct and nonzero.
    pub(crate) fn from_canonical(modulus: Modulus, dim: usize, terms: Vec<(ShiftVector, u32)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(terms.iter().all(|(_, c)| *c != 0));
        Self {
            modulus,
            dim,
            terms,
        }
    }

    #[inline]
    pub(crate) fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub(crate) fn terms(&self) -> &[(ShiftVector, u32)] {
        &self.terms
    }

    pub(crate) fn get(&self, site: &ShiftVector) -> u32 {
        self.terms
            .binary_search_by(|(s, _)| s.cmp(site))
            .map(|i| self.terms[i].1)
            .unwrap_or(0)
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                expected: self.modulus.get(),
                found: other.modulus.get(),
            });
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// `out[k] = sum over u + v = k of self[u] * other[v]`.
    pub(crate) fn convolve(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = self.modulus;
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                let c = m.mul(*a, *b);
                if c != 0 {
                    raw.push((u.checked_add(v)?, c));
                }
            }
        }
        Ok(Self {
            modulus: m,
            dim: self.dim,
            terms: canonicalize(m, raw),
        })
    }

    /// Multiplies every site by a positive factor; order is preserved.
    pub(crate) fn scale_sites(&self, factor: i64) -> Result<Self> {
        debug_assert!(factor > 0);
        let terms = self
            .terms
            .iter()
            .map(|(s, c)| Ok((s.checked_scale(factor)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_canonical(self.modulus, self.dim, terms))
    }

    pub(crate) fn translate(&self, offset: &ShiftVector) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|(s, c)| Ok((s.checked_add(offset)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_canonical(self.modulus, self.dim, terms))
    }

    pub(crate) fn scale_values(&self, factor: u32) -> Self {
        let m = self.modulus;
        let raw = self
            .terms
            .iter()
            .filter_map(|(s, c)| {
                let v = m.mul(*c, factor);
                (v != 0).then(|| (s.clone(), v))
            })
            .collect();
        Self::from_canonical(m, self.dim, raw)
    }
}

fn canonicalize(m: Modulus, mut raw: Vec<(ShiftVector, u32)>) -> Vec<(ShiftVector, u32)> {
    raw.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(ShiftVector, u32)> = Vec::with_capacity(raw.len());
    for (site, value) in raw {
        match out.last_mut() {
            Some((last, acc)) if *last == site => *acc = m.add(*acc, value),
            _ => {
                if let Some((_, 0)) = out.last() {
                    out.pop();
                }
                out.push((site, value));
            }
        }
    }
    if let Some((_, 0)) = out.last() {
        out.pop();
    }
    out
}
