//! Characters of `(Z/m)^(Z^D)`.
//!
//! Every character has the form `a -> prod_k exp(2 pi i chi_k a_k / m)` for a
//! finitely supported coefficient system `chi`. Characters are stored by
//! their exponents, never as complex tables, so cancellation under pullback is
//! detected exactly.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::algebra::{root_of_unity, Modulus};
use crate::lca::{bounding_box, AffineCa, Automaton, Configuration, LcaPolynomial, ShiftVector};
use crate::sparse::SparseTerms;
use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CharacterSystem {
    coeffs: SparseTerms,
}

impl CharacterSystem {
    /// Builds a character from `(site, exponent)` pairs; exponents are reduced
    /// mod `m` and zero entries dropped.
    pub fn new<I>(modulus: Modulus, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ShiftVector, i64)>,
    {
        Ok(Self {
            coeffs: SparseTerms::from_entries(modulus, dim, entries)?,
        })
    }

    pub fn from_1d(modulus: Modulus, entries: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            modulus,
            1,
            entries.iter().map(|&(s, e)| (ShiftVector::d1(s), e)),
        )
    }

    pub fn trivial(modulus: Modulus, dim: usize) -> Result<Self> {
        Ok(Self {
            coeffs: SparseTerms::empty(modulus, dim)?,
        })
    }

    pub fn single_site(modulus: Modulus, site: ShiftVector, exponent: i64) -> Result<Self> {
        let dim = site.dim();
        Self::new(modulus, dim, [(site, exponent)])
    }

    pub fn modulus(&self) -> Modulus {
        self.coeffs.modulus()
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    /// `(site, exponent)` entries in lexicographic site order.
    pub fn entries(&self) -> &[(ShiftVector, u32)] {
        self.coeffs.terms()
    }

    pub fn exponent(&self, site: &ShiftVector) -> u32 {
        self.coeffs.get(site)
    }

    /// Number of sites carrying a nontrivial factor.
    pub fn rank(&self) -> usize {
        self.entries().len()
    }

    pub fn is_trivial(&self) -> bool {
        self.entries().is_empty()
    }

    /// `sum_k chi_k mod m`; the character restricted to constant
    /// configurations is `a -> exp(2 pi i (sum chi_k) a / m)`.
    pub fn exponent_sum(&self) -> u32 {
        let m = self.modulus();
        self.entries().iter().fold(0, |acc, (_, e)| m.add(acc, *e))
    }

    pub fn support_bounds(&self) -> Option<(ShiftVector, ShiftVector)> {
        bounding_box(self.entries().iter().map(|(s, _)| s))
    }

    pub fn translate(&self, offset: &ShiftVector) -> Result<Self> {
        Ok(Self {
            coeffs: self.coeffs.translate(offset)?,
        })
    }

    /// `chi(a) = prod_k exp(2 pi i chi_k a_k / m)`.
    pub fn evaluate(&self, config: &Configuration) -> Result<Complex64> {
        let m = self.modulus();
        let mut phase = 0u32;
        for (site, e) in self.entries() {
            let a = config
                .get(site)
                .ok_or_else(|| Error::MissingSite(site.clone()))?;
            phase = m.add(phase, m.mul(*e, *a));
        }
        Ok(root_of_unity(phase as u64, m.get()))
    }

    /// The coefficient system of `chi o F`:
    /// `xi_k = sum over j + u = k of chi_j f_u (mod m)`.
    pub fn pullback(&self, automaton: &LcaPolynomial) -> Result<Self> {
        Ok(Self {
            coeffs: self.coeffs.convolve(automaton.sparse())?,
        })
    }

    /// `chi o F^n`, through [`LcaPolynomial::power`].
    pub fn pullback_iterated(&self, automaton: &LcaPolynomial, n: u64) -> Result<Self> {
        if n == 0 {
            self.coeffs.check_compatible(automaton.sparse())?;
            return Ok(self.clone());
        }
        self.pullback(&automaton.power(n)?)
    }

    /// `chi o G^n = K_n (chi o F^n)` for the affine automaton `G = F + c`,
    /// with `K_n = chi(h_n)` evaluated at the constant drift configuration.
    pub fn pullback_affine(&self, automaton: &AffineCa, n: u64) -> Result<PulledCharacter> {
        let character = self.pullback_iterated(automaton.linear(), n)?;
        Ok(PulledCharacter {
            phase: self.drift_phase(automaton.affine_drift(n)),
            character,
        })
    }

    /// Pullback through either kind of automaton.
    pub fn pullback_automaton(&self, automaton: &Automaton, n: u64) -> Result<PulledCharacter> {
        match automaton {
            Automaton::Linear(f) => Ok(PulledCharacter {
                character: self.pullback_iterated(f, n)?,
                phase: Complex64::new(1.0, 0.0),
            }),
            Automaton::Affine(g) => self.pullback_affine(g, n),
        }
    }

    /// `chi` evaluated on the configuration that is `drift` at every site.
    pub fn drift_phase(&self, drift: u32) -> Complex64 {
        let m = self.modulus();
        root_of_unity(m.mul(self.exponent_sum(), drift) as u64, m.get())
    }
}

impl fmt::Debug for CharacterSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CharacterSystem[{}; ", self.modulus())?;
        for (i, (s, e)) in self.entries().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}@{s}")?;
        }
        f.write_str("]")
    }
}

/// A character multiplied by a unit phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PulledCharacter {
    pub character: CharacterSystem,
    pub phase: Complex64,
}

impl PulledCharacter {
    pub fn evaluate(&self, config: &Configuration) -> Result<Complex64> {
        Ok(self.phase * self.character.evaluate(config)?)
    }
}

/// Sites of `sites + offsets` (Minkowski sum), sorted and deduplicated.
pub(crate) fn dilate(sites: &[ShiftVector], offsets: &[ShiftVector]) -> Result<Vec<ShiftVector>> {
    let mut out = Vec::with_capacity(sites.len() * offsets.len());
    for s in sites {
        for o in offsets {
            out.push(s.checked_add(o)?);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn z(m: u32) -> Modulus {
        Modulus::new(m).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(CharacterSystem::trivial(z(2), 1).unwrap().rank(), 0);
        let chi = CharacterSystem::from_1d(z(2), &[(0, 1)]).unwrap();
        assert_eq!(chi.rank(), 1);
        let lind = LcaPolynomial::from_1d(z(2), &[(-1, 1), (1, 1)]).unwrap();
        assert_eq!(chi.pullback(&lind).unwrap().rank(), 2);
    }

    #[test]
    fn evaluate_examples() {
        let config: Configuration = [(ShiftVector::d1(0), 1), (ShiftVector::d1(1), 1)].into_iter().collect();
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(CharacterSystem::trivial(z(2), 1).unwrap().evaluate(&config).unwrap(), one);
        let chi = CharacterSystem::from_1d(z(2), &[(0, 1)]).unwrap();
        assert_eq!(chi.evaluate(&config).unwrap(), Complex64::new(-1.0, 0.0));
        let chi = CharacterSystem::from_1d(z(3), &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(chi.evaluate(&config).unwrap(), one);
        let chi = CharacterSystem::from_1d(z(3), &[(5, 1)]).unwrap();
        assert_eq!(chi.evaluate(&config), Err(Error::MissingSite(ShiftVector::d1(5))));
    }

    #[test]
    fn pullback_examples() {
        let chi = CharacterSystem::from_1d(z(2), &[(0, 1)]).unwrap();
        let id = LcaPolynomial::identity(z(2), 1).unwrap();
        assert_eq!(chi.pullback(&id).unwrap(), chi);
        let lind = LcaPolynomial::from_1d(z(2), &[(-1, 1), (1, 1)]).unwrap();
        assert_eq!(
            chi.pullback(&lind).unwrap(),
            CharacterSystem::from_1d(z(2), &[(-1, 1), (1, 1)]).unwrap()
        );
        let chi = CharacterSystem::from_1d(z(2), &[(0, 1), (2, 1)]).unwrap();
        let f = LcaPolynomial::from_1d(z(2), &[(0, 1), (1, 1)]).unwrap();
        assert_eq!(
            chi.pullback(&f).unwrap(),
            CharacterSystem::from_1d(z(2), &[(0, 1), (1, 1), (2, 1), (3, 1)]).unwrap()
        );
        let f3 = LcaPolynomial::from_1d(z(3), &[(0, 1)]).unwrap();
        assert!(matches!(chi.pullback(&f3), Err(Error::ModulusMismatch { .. })));
    }

    #[test]
    fn iterated_examples() {
        let chi = CharacterSystem::from_1d(z(2), &[(0, 1)]).unwrap();
        let f = LcaPolynomial::from_1d(z(2), &[(0, 1), (1, 1)]).unwrap();
        assert_eq!(chi.pullback_iterated(&f, 0).unwrap(), chi);
        let four = chi.pullback_iterated(&f, 4).unwrap();
        assert_eq!(four, CharacterSystem::from_1d(z(2), &[(0, 1), (4, 1)]).unwrap());
        assert_eq!(chi.pullback_iterated(&f, 3).unwrap().rank(), 4);
    }

    #[test]
    fn affine_examples() {
        let lind = LcaPolynomial::from_1d(z(2), &[(-1, 1), (1, 1)]).unwrap();
        let chi = CharacterSystem::from_1d(z(2), &[(0, 1)]).unwrap();

        let linear = AffineCa::new(lind.clone(), 0);
        let pulled = chi.pullback_affine(&linear, 5).unwrap();
        assert_eq!(pulled.phase, Complex64::new(1.0, 0.0));
        assert_eq!(pulled.character, chi.pullback_iterated(&lind, 5).unwrap());

        let g = AffineCa::new(lind.clone(), 1);
        assert_eq!(chi.pullback_affine(&g, 1).unwrap().phase, Complex64::new(-1.0, 0.0));

        let trivial = CharacterSystem::trivial(z(2), 1).unwrap();
        let pulled = trivial.pullback_affine(&g, 3).unwrap();
        assert!(pulled.character.is_trivial());
        assert_eq!(pulled.phase, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn affine_identity_on_configs() {
        // chi(G^n a) = K_n (chi o F^n)(a), iterating G site by site
        let m = z(3);
        let f = LcaPolynomial::from_1d(m, &[(-1, 2), (0, 1), (1, 1)]).unwrap();
        let g = AffineCa::new(f.clone(), 2);
        let chi = CharacterSystem::from_1d(m, &[(0, 1), (1, 2)]).unwrap();
        let mut state = 12345u64;
        for n in 0..5u64 {
            let radius = n as i64 + 2;
            let mut config = Configuration::new();
            for s in -radius..=radius + 1 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                config.insert(ShiftVector::d1(s), ((state >> 33) % 3) as u32);
            }
            let mut image = config.clone();
            let mut lo = -radius;
            let mut hi = radius + 1;
            for _ in 0..n {
                lo += 1;
                hi -= 1;
                let window: Vec<_> = (lo..=hi).map(ShiftVector::d1).collect();
                image = g.apply_window(&image, &window).unwrap();
            }
            let lhs = chi.evaluate(&image).unwrap();
            let pulled = chi.pullback_affine(&g, n).unwrap();
            let rhs = pulled.evaluate(&config).unwrap();
            assert!((lhs - rhs).norm() < 1e-12, "n = {n}");
            assert!((pulled.phase.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation() {
        let sites = vec![ShiftVector::d1(0), ShiftVector::d1(2)];
        let offsets = vec![ShiftVector::d1(-1), ShiftVector::d1(1)];
        assert_eq!(
            dilate(&sites, &offsets).unwrap(),
            vec![ShiftVector::d1(-1), ShiftVector::d1(1), ShiftVector::d1(3)]
        );
    }
}
