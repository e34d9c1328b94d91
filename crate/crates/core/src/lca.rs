//! Linear and affine cellular automata as polynomials of shifts.
//!
//! An automaton `F = sum_u f_u sigma^u` acts on a configuration `a` by
//! `F(a)_k = sum_u f_u a_{k+u} (mod m)`. Composition of automata is
//! multiplication of their polynomials, which is what every routine here
//! computes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use smallvec::SmallVec;

use crate::algebra::{p_ary_expansion, LucasTable, Modulus};
use crate::sparse::SparseTerms;
use crate::{Error, Result};

/// A point of `Z^D`, used both as a shift exponent and as a lattice site.
///
/// Ordering is lexicographic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShiftVector(SmallVec<[i64; 4]>);

impl ShiftVector {
    pub fn new(coords: &[i64]) -> Self {
        Self(SmallVec::from_slice(coords))
    }

    pub fn zero(dim: usize) -> Self {
        Self(SmallVec::from_elem(0, dim))
    }

    /// One-dimensional site.
    pub fn d1(x: i64) -> Self {
        Self::new(&[x])
    }

    /// Unit vector along `axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = Self::zero(dim);
        v.0[axis] = 1;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::ExponentOverflow))
            .collect::<Result<SmallVec<_>>>()
            .map(Self)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.checked_sub(*b).ok_or(Error::ExponentOverflow))
            .collect::<Result<SmallVec<_>>>()
            .map(Self)
    }

    pub fn checked_scale(&self, factor: i64) -> Result<Self> {
        self.0
            .iter()
            .map(|a| a.checked_mul(factor).ok_or(Error::ExponentOverflow))
            .collect::<Result<SmallVec<_>>>()
            .map(Self)
    }

    pub fn neg(&self) -> Result<Self> {
        self.checked_scale(-1)
    }
}

impl fmt::Display for ShiftVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for ShiftVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite configuration: symbols at finitely many sites.
pub type Configuration = BTreeMap<ShiftVector, u32>;

/// All sites of the box `lo ..= hi` (componentwise), in lexicographic order.
pub fn box_sites(lo: &ShiftVector, hi: &ShiftVector) -> Vec<ShiftVector> {
    debug_assert_eq!(lo.dim(), hi.dim());
    if lo.coords().iter().zip(hi.coords()).any(|(a, b)| a > b) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = lo.clone();
    loop {
        out.push(cur.clone());
        let mut axis = cur.dim();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if cur.0[axis] < hi.0[axis] {
                cur.0[axis] += 1;
                break;
            }
            cur.0[axis] = lo.0[axis];
        }
    }
}

/// A linear cellular automaton `F = sum_u f_u sigma^u` over `Z/m`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LcaPolynomial {
    terms: SparseTerms,
}

impl LcaPolynomial {
    /// Builds a polynomial from `(exponent, coefficient)` pairs. Coefficients
    /// are reduced mod `m`; repeated exponents are summed and zeros dropped.
    pub fn new<I>(modulus: Modulus, dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ShiftVector, i64)>,
    {
        Ok(Self {
            terms: SparseTerms::from_entries(modulus, dim, terms)?,
        })
    }

    /// One-dimensional polynomial from `(exponent, coefficient)` pairs.
    pub fn from_1d(modulus: Modulus, terms: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            modulus,
            1,
            terms.iter().map(|&(e, c)| (ShiftVector::d1(e), c)),
        )
    }

    pub fn identity(modulus: Modulus, dim: usize) -> Result<Self> {
        Self::new(modulus, dim, [(ShiftVector::zero(dim), 1)])
    }

    pub(crate) fn from_sparse(terms: SparseTerms) -> Self {
        Self { terms }
    }

    pub(crate) fn sparse(&self) -> &SparseTerms {
        &self.terms
    }

    pub fn modulus(&self) -> Modulus {
        self.terms.modulus()
    }

    pub fn dim(&self) -> usize {
        self.terms.dim()
    }

    /// Terms in lexicographic order of exponent, all coefficients nonzero.
    pub fn terms(&self) -> &[(ShiftVector, u32)] {
        self.terms.terms()
    }

    pub fn len(&self) -> usize {
        self.terms().len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms().is_empty()
    }

    pub fn coefficient(&self, exponent: &ShiftVector) -> u32 {
        self.terms.get(exponent)
    }

    /// True when the polynomial has at least two nonzero terms, i.e. the
    /// automaton is neither a (scaled) shift nor the identity.
    pub fn is_nontrivial(&self) -> bool {
        self.len() >= 2
    }

    /// `sum_u f_u mod m`: the factor by which `F` scales constant
    /// configurations.
    pub fn coefficient_sum(&self) -> u32 {
        let m = self.modulus();
        self.terms().iter().fold(0, |acc, (_, c)| m.add(acc, *c))
    }

    /// Smallest box containing every exponent, or `None` for the zero
    /// polynomial.
    pub fn bounding_box(&self) -> Option<(ShiftVector, ShiftVector)> {
        bounding_box(self.terms().iter().map(|(s, _)| s))
    }

    /// Local rule: `sum_u f_u patch[u] mod m`.
    pub fn apply_local(&self, patch: &Configuration) -> Result<u32> {
        let m = self.modulus();
        let mut acc = 0;
        for (u, f) in self.terms() {
            let a = patch.get(u).ok_or_else(|| Error::MissingSite(u.clone()))?;
            acc = m.add(acc, m.mul(*f, *a));
        }
        Ok(acc)
    }

    /// Image of `config` at every site of `window`.
    pub fn apply_window(&self, config: &Configuration, window: &[ShiftVector]) -> Result<Configuration> {
        let m = self.modulus();
        let mut out = Configuration::new();
        for k in window {
            let mut acc = 0;
            for (u, f) in self.terms() {
                let site = k.checked_add(u)?;
                let a = config.get(&site).ok_or(Error::MissingSite(site))?;
                acc = m.add(acc, m.mul(*f, *a));
            }
            out.insert(k.clone(), acc);
        }
        Ok(out)
    }

    /// `F o G`, the product of the two polynomials.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            terms: self.terms.convolve(&other.terms)?,
        })
    }

    /// `F^n` by binary exponentiation under [`compose`](Self::compose).
    pub fn pow_square_multiply(&self, mut n: u64) -> Result<Self> {
        let mut acc = Self::identity(self.modulus(), self.dim())?;
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.compose(&base)?;
            }
        }
        Ok(acc)
    }

    /// `F^(p^k)` over a prime modulus: same coefficients, exponents scaled by
    /// `p^k`.
    pub fn frobenius_power(&self, k: u32) -> Result<Self> {
        let p = self.modulus().require_prime()? as i64;
        let factor = p.checked_pow(k).ok_or(Error::ExponentOverflow)?;
        Ok(Self {
            terms: self.terms.scale_sites(factor)?,
        })
    }

    /// `F^n`. Over a prime modulus this multiplies the Frobenius rescalings
    /// `(F^(n_i))^(p^i)` of the base-`p` digits `n_i`; otherwise it falls
    /// back to binary exponentiation.
    pub fn power(&self, n: u64) -> Result<Self> {
        let modulus = self.modulus();
        if !modulus.is_prime() {
            return self.pow_square_multiply(n);
        }
        let p = modulus.get() as u64;
        let digits = p_ary_expansion(n, p)?;
        let mut small: Vec<Option<Self>> = alloc::vec![None; p as usize];
        let mut acc = Self::identity(modulus, self.dim())?;
        for (i, &d) in digits.digits().iter().enumerate() {
            if d == 0 {
                continue;
            }
            if small[d as usize].is_none() {
                small[d as usize] = Some(self.pow_square_multiply(d as u64)?);
            }
            let factor = small[d as usize].as_ref().unwrap().frobenius_power(i as u32)?;
            acc = acc.compose(&factor)?;
        }
        Ok(acc)
    }

    /// Rewrites `sum_j g_j sigma^(l_j)` (exponents in increasing lexicographic
    /// order) as `g_0 sigma^(l_0) (1 + f_1 sigma^(m_1) (1 + f_2 sigma^(m_2) (...)))`
    /// with `m_j = l_j - l_(j-1)` and `f_j = g_(j-1)^(-1) g_j`.
    pub fn to_nested_form(&self) -> Result<NestedForm> {
        let modulus = self.modulus();
        modulus.require_prime()?;
        let terms = self.terms();
        let (l0, g0) = terms.first().ok_or(Error::EmptyPolynomial)?;
        let mut factors = Vec::with_capacity(terms.len() - 1);
        for pair in terms.windows(2) {
            let (prev_site, prev_coeff) = &pair[0];
            let (site, coeff) = &pair[1];
            let inv = modulus
                .inverse(*prev_coeff)
                .ok_or(Error::NotPrime(modulus.get() as u64))?;
            factors.push(NestedFactor {
                coefficient: modulus.mul(inv, *coeff),
                step: site.checked_sub(prev_site)?,
            });
        }
        Ok(NestedForm {
            modulus,
            leading_coefficient: *g0,
            leading_shift: l0.clone(),
            factors,
        })
    }
}

impl fmt::Debug for LcaPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LcaPolynomial[{}; ", self.modulus())?;
        for (i, (s, c)) in self.terms().iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}@{s}")?;
        }
        f.write_str("]")
    }
}

pub(crate) fn bounding_box<'a, I>(sites: I) -> Option<(ShiftVector, ShiftVector)>
where
    I: IntoIterator<Item = &'a ShiftVector>,
{
    let mut iter = sites.into_iter();
    let first = iter.next()?;
    let (mut lo, mut hi) = (first.clone(), first.clone());
    for s in iter {
        for (axis, &c) in s.coords().iter().enumerate() {
            lo.0[axis] = lo.0[axis].min(c);
            hi.0[axis] = hi.0[axis].max(c);
        }
    }
    Some((lo, hi))
}

/// One level `f_j sigma^(m_j)` of a nested form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NestedFactor {
    pub coefficient: u32,
    pub step: ShiftVector,
}

/// `g_0 sigma^(l_0) (1 + f_1 sigma^(m_1) (1 + ... (1 + f_J sigma^(m_J))))`
/// over a prime field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NestedForm {
    modulus: Modulus,
    leading_coefficient: u32,
    leading_shift: ShiftVector,
    factors: Vec<NestedFactor>,
}

impl NestedForm {
    pub fn new(
        modulus: Modulus,
        leading_coefficient: u32,
        leading_shift: ShiftVector,
        factors: Vec<NestedFactor>,
    ) -> Result<Self> {
        let p = modulus.require_prime()?;
        if leading_shift.dim() == 0 {
            return Err(Error::ZeroDimension);
        }
        let dim = leading_shift.dim();
        let leading_coefficient = leading_coefficient % p;
        if leading_coefficient == 0 {
            return Err(Error::EmptyPolynomial);
        }
        let mut reduced = Vec::with_capacity(factors.len());
        for f in factors {
            if f.step.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: f.step.dim(),
                });
            }
            let coefficient = f.coefficient % p;
            if coefficient == 0 {
                // a zero factor truncates the nesting
                break;
            }
            reduced.push(NestedFactor {
                coefficient,
                step: f.step,
            });
        }
        Ok(Self {
            modulus,
            leading_coefficient,
            leading_shift,
            factors: reduced,
        })
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.leading_shift.dim()
    }

    pub fn leading_coefficient(&self) -> u32 {
        self.leading_coefficient
    }

    pub fn leading_shift(&self) -> &ShiftVector {
        &self.leading_shift
    }

    pub fn factors(&self) -> &[NestedFactor] {
        &self.factors
    }

    /// Nesting depth `J`.
    pub fn depth(&self) -> usize {
        self.factors.len()
    }

    /// The normalized part `1 + f_1 sigma^(m_1) (1 + ...)` as a flat polynomial.
    pub fn unit_part(&self) -> Result<LcaPolynomial> {
        let m = self.modulus;
        let dim = self.dim();
        let mut raw = Vec::with_capacity(self.factors.len() + 1);
        let mut site = ShiftVector::zero(dim);
        let mut coeff = 1u32;
        raw.push((site.clone(), 1u32));
        for f in &self.factors {
            site = site.checked_add(&f.step)?;
            coeff = m.mul(coeff, f.coefficient);
            raw.push((site.clone(), coeff));
        }
        Ok(LcaPolynomial::from_sparse(SparseTerms::from_reduced(m, dim, raw)))
    }

    /// The flat polynomial `g_0 sigma^(l_0) * unit_part`.
    pub fn to_polynomial(&self) -> Result<LcaPolynomial> {
        let unit = self.unit_part()?;
        let terms = unit
            .sparse()
            .translate(&self.leading_shift)?
            .scale_values(self.leading_coefficient);
        Ok(LcaPolynomial::from_sparse(terms))
    }

    /// `G^n` from the Lucas expansion of the nested form:
    /// `g_0^n sigma^(n l_0) sum_{k in L^J(n)} f_(k) sigma^(<k, m>)`, where
    /// `k_J << ... << k_1 << n` and
    /// `f_(k) = C(n,k_1) C(k_1,k_2) ... C(k_(J-1),k_J) f_1^(k_1) ... f_J^(k_J)`.
    pub fn pow_nested_lucas(&self, n: u64) -> Result<LcaPolynomial> {
        let m = self.modulus;
        let p = m.require_prime()?;
        let table = LucasTable::new(p)?;
        let dim = self.dim();
        let mut raw = Vec::new();
        let mut walker = LucasWalker {
            form: self,
            table: &table,
            out: &mut raw,
        };
        walker.descend(0, n, 1, ShiftVector::zero(dim))?;

        let scalar = m.pow(self.leading_coefficient, n);
        let shift = self.leading_shift.checked_scale(i64::try_from(n).map_err(|_| Error::ExponentOverflow)?)?;
        let flat = SparseTerms::from_reduced(m, dim, raw);
        Ok(LcaPolynomial::from_sparse(flat.translate(&shift)?.scale_values(scalar)))
    }
}

struct LucasWalker<'a> {
    form: &'a NestedForm,
    table: &'a LucasTable,
    out: &'a mut Vec<(ShiftVector, u32)>,
}

impl LucasWalker<'_> {
    fn descend(&mut self, level: usize, parent: u64, coeff: u32, exponent: ShiftVector) -> Result<()> {
        let Some(factor) = self.form.factors.get(level) else {
            self.out.push((exponent, coeff));
            return Ok(());
        };
        let m = self.form.modulus;
        let p = m.get() as u64;
        let digits = p_ary_expansion(parent, p)?;
        // odometer over k with k[i] <= parent[i] at every digit
        let mut choice = alloc::vec![0u32; digits.len()];
        loop {
            let mut k = 0u64;
            let mut place = 1u64;
            for &c in &choice {
                k += c as u64 * place;
                place = place.saturating_mul(p);
            }
            let c = m.mul(
                m.mul(coeff, self.table.binomial(parent, k)),
                m.pow(factor.coefficient, k),
            );
            let k_signed = i64::try_from(k).map_err(|_| Error::ExponentOverflow)?;
            let e = exponent.checked_add(&factor.step.checked_scale(k_signed)?)?;
            self.descend(level + 1, k, c, e)?;

            let mut i = 0;
            loop {
                if i == choice.len() {
                    return Ok(());
                }
                if choice[i] < digits.digit(i) {
                    choice[i] += 1;
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }
}

/// An affine automaton `G(a) = F(a) + c`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineCa {
    linear: LcaPolynomial,
    constant: u32,
}

impl AffineCa {
    pub fn new(linear: LcaPolynomial, constant: i64) -> Self {
        let constant = linear.modulus().reduce(constant);
        Self { linear, constant }
    }

    pub fn linear(&self) -> &LcaPolynomial {
        &self.linear
    }

    pub fn constant(&self) -> u32 {
        self.constant
    }

    pub fn modulus(&self) -> Modulus {
        self.linear.modulus()
    }

    pub fn apply_local(&self, patch: &Configuration) -> Result<u32> {
        Ok(self.modulus().add(self.linear.apply_local(patch)?, self.constant))
    }

    pub fn apply_window(&self, config: &Configuration, window: &[ShiftVector]) -> Result<Configuration> {
        let m = self.modulus();
        let mut out = self.linear.apply_window(config, window)?;
        for v in out.values_mut() {
            *v = m.add(*v, self.constant);
        }
        Ok(out)
    }

    /// The constant value of the drift `h_n` in `G^n(a) = F^n(a) + h_n`:
    /// `h_n = c (1 + s + ... + s^(n-1))` where `s = sum_u f_u`.
    pub fn affine_drift(&self, n: u64) -> u32 {
        let m = self.modulus();
        let s = self.linear.coefficient_sum();
        // (geometric sum of length len, s^len), built from the top bit down
        let (mut sum, mut power) = (0u32, 1u32);
        for bit in (0..64).rev() {
            sum = m.add(sum, m.mul(power, sum));
            power = m.mul(power, power);
            if (n >> bit) & 1 == 1 {
                sum = m.add(1, m.mul(s, sum));
                power = m.mul(power, s);
            }
        }
        m.mul(self.constant, sum)
    }
}

/// Either kind of automaton.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Automaton {
    Linear(LcaPolynomial),
    Affine(AffineCa),
}

impl Automaton {
    pub fn linear(&self) -> &LcaPolynomial {
        match self {
            Automaton::Linear(f) => f,
            Automaton::Affine(g) => g.linear(),
        }
    }

    pub fn constant(&self) -> u32 {
        match self {
            Automaton::Linear(_) => 0,
            Automaton::Affine(g) => g.constant(),
        }
    }

    pub fn modulus(&self) -> Modulus {
        self.linear().modulus()
    }

    pub fn dim(&self) -> usize {
        self.linear().dim()
    }

    pub fn drift(&self, n: u64) -> u32 {
        match self {
            Automaton::Linear(_) => 0,
            Automaton::Affine(g) => g.affine_drift(n),
        }
    }

    pub fn apply_window(&self, config: &Configuration, window: &[ShiftVector]) -> Result<Configuration> {
        match self {
            Automaton::Linear(f) => f.apply_window(config, window),
            Automaton::Affine(g) => g.apply_window(config, window),
        }
    }
}

impl From<LcaPolynomial> for Automaton {
    fn from(f: LcaPolynomial) -> Self {
        Automaton::Linear(f)
    }
}

impl From<AffineCa> for Automaton {
    fn from(g: AffineCa) -> Self {
        Automaton::Affine(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn z(m: u32) -> Modulus {
        Modulus::new(m).unwrap()
    }

    fn poly(m: u32, terms: &[(i64, i64)]) -> LcaPolynomial {
        LcaPolynomial::from_1d(z(m), terms).unwrap()
    }

    fn patch(entries: &[(i64, u32)]) -> Configuration {
        entries.iter().map(|&(s, a)| (ShiftVector::d1(s), a)).collect()
    }

    #[test]
    fn canonical_storage_drops_zeros() {
        let f = poly(3, &[(1, 1), (0, 2), (1, 2), (4, 3)]);
        assert_eq!(f.terms(), &[(ShiftVector::d1(0), 2)]);
        assert!(LcaPolynomial::new(z(2), 1, [(ShiftVector::new(&[0, 1]), 1)]).is_err());
        assert_eq!(LcaPolynomial::identity(z(2), 0), Err(Error::ZeroDimension));
    }

    #[test]
    fn apply_local_examples() {
        assert_eq!(poly(2, &[(0, 1), (1, 1)]).apply_local(&patch(&[(0, 1), (1, 1)])).unwrap(), 0);
        let id = poly(5, &[(0, 1)]);
        for a in 0..5 {
            assert_eq!(id.apply_local(&patch(&[(0, a)])).unwrap(), a);
        }
        let f = poly(3, &[(-1, 2), (1, 1)]);
        assert_eq!(f.apply_local(&patch(&[(-1, 2), (1, 1)])).unwrap(), 2);
        assert_eq!(
            f.apply_local(&patch(&[(-1, 2)])),
            Err(Error::MissingSite(ShiftVector::d1(1)))
        );
    }

    #[test]
    fn apply_window_examples() {
        let config = patch(&[(-1, 0), (0, 1), (1, 0), (2, 1)]);
        let id = poly(2, &[(0, 1)]);
        let window = [ShiftVector::d1(0), ShiftVector::d1(1)];
        let out = id.apply_window(&config, &window).unwrap();
        assert_eq!(out, patch(&[(0, 1), (1, 0)]));

        let lind = poly(2, &[(-1, 1), (1, 1)]);
        let out = lind.apply_window(&config, &[ShiftVector::d1(0)]).unwrap();
        assert_eq!(out[&ShiftVector::d1(0)], 0);
        assert!(matches!(
            lind.apply_window(&config, &[ShiftVector::d1(2)]),
            Err(Error::MissingSite(_))
        ));

        let zeros = patch(&[(-2, 0), (-1, 0), (0, 0), (1, 0), (2, 0)]);
        let f = poly(3, &[(-1, 2), (0, 1), (1, 1)]);
        let w: Vec<_> = (-1..=1).map(ShiftVector::d1).collect();
        assert!(f.apply_window(&zeros, &w).unwrap().values().all(|&v| v == 0));
    }

    #[test]
    fn compose_examples() {
        let f2 = poly(2, &[(0, 1), (1, 1)]);
        assert_eq!(f2.compose(&f2).unwrap(), poly(2, &[(0, 1), (2, 1)]));
        let f3 = poly(3, &[(0, 1), (1, 1)]);
        assert_eq!(f3.compose(&f3).unwrap(), poly(3, &[(0, 1), (1, 2), (2, 1)]));
        let id = LcaPolynomial::identity(z(3), 1).unwrap();
        assert_eq!(f3.compose(&id).unwrap(), f3);
        assert!(matches!(f2.compose(&f3), Err(Error::ModulusMismatch { .. })));
    }

    #[test]
    fn power_examples() {
        let f = poly(2, &[(0, 1), (1, 1)]);
        assert_eq!(f.pow_square_multiply(0).unwrap(), LcaPolynomial::identity(z(2), 1).unwrap());
        assert_eq!(f.pow_square_multiply(1).unwrap(), f);
        assert_eq!(f.pow_square_multiply(3).unwrap(), poly(2, &[(0, 1), (1, 1), (2, 1), (3, 1)]));
        assert_eq!(f.power(3).unwrap(), f.pow_square_multiply(3).unwrap());
        let g = poly(6, &[(0, 1), (1, 5), (3, 2)]);
        assert_eq!(g.power(7).unwrap(), g.pow_square_multiply(7).unwrap());
    }

    #[test]
    fn frobenius_examples() {
        let f = poly(2, &[(0, 1), (1, 1)]);
        assert_eq!(f.frobenius_power(1).unwrap(), poly(2, &[(0, 1), (2, 1)]));
        assert_eq!(f.frobenius_power(0).unwrap(), f);
        let g = poly(3, &[(-1, 2), (1, 1)]);
        assert_eq!(g.frobenius_power(1).unwrap(), poly(3, &[(-3, 2), (3, 1)]));
        assert_eq!(g.frobenius_power(1).unwrap(), g.pow_square_multiply(3).unwrap());
        assert_eq!(poly(4, &[(0, 1)]).frobenius_power(1), Err(Error::NotPrime(4)));
        assert_eq!(poly(2, &[(1, 1)]).frobenius_power(70), Err(Error::ExponentOverflow));
    }

    #[test]
    fn nested_form_examples() {
        let nf = poly(2, &[(0, 1), (1, 1)]).to_nested_form().unwrap();
        assert_eq!(nf.leading_coefficient(), 1);
        assert_eq!(nf.leading_shift(), &ShiftVector::d1(0));
        assert_eq!(
            nf.factors(),
            &[NestedFactor {
                coefficient: 1,
                step: ShiftVector::d1(1)
            }]
        );

        let nf = poly(3, &[(0, 2), (1, 1)]).to_nested_form().unwrap();
        assert_eq!(nf.leading_coefficient(), 2);
        assert_eq!(nf.factors()[0].coefficient, 2);

        // three terms: m_j are successive differences, f_j ratios of coefficients
        let g = poly(5, &[(-2, 3), (1, 4), (7, 2)]);
        let nf = g.to_nested_form().unwrap();
        let m = z(5);
        assert_eq!(nf.leading_shift(), &ShiftVector::d1(-2));
        assert_eq!(nf.factors()[0].step, ShiftVector::d1(3));
        assert_eq!(nf.factors()[1].step, ShiftVector::d1(6));
        assert_eq!(nf.factors()[0].coefficient, m.mul(m.inverse(3).unwrap(), 4));
        assert_eq!(nf.factors()[1].coefficient, m.mul(m.inverse(4).unwrap(), 2));
        assert_eq!(nf.to_polynomial().unwrap(), g);

        assert_eq!(poly(4, &[(0, 1), (1, 1)]).to_nested_form(), Err(Error::NotPrime(4)));
        assert_eq!(
            LcaPolynomial::from_1d(z(3), &[]).unwrap().to_nested_form(),
            Err(Error::EmptyPolynomial)
        );
    }

    #[test]
    fn nested_lucas_examples() {
        let nf = poly(2, &[(0, 1), (1, 1)]).to_nested_form().unwrap();
        assert_eq!(nf.pow_nested_lucas(3).unwrap(), poly(2, &[(0, 1), (1, 1), (2, 1), (3, 1)]));
        let g = poly(3, &[(2, 2), (3, 1)]);
        assert_eq!(
            g.to_nested_form().unwrap().pow_nested_lucas(0).unwrap(),
            LcaPolynomial::identity(z(3), 1).unwrap()
        );
        // 1 + sigma (1 + sigma) over Z/2
        let nested = NestedForm::new(
            z(2),
            1,
            ShiftVector::d1(0),
            vec![
                NestedFactor { coefficient: 1, step: ShiftVector::d1(1) },
                NestedFactor { coefficient: 1, step: ShiftVector::d1(1) },
            ],
        )
        .unwrap();
        let flat = nested.to_polynomial().unwrap();
        assert_eq!(flat, poly(2, &[(0, 1), (1, 1), (2, 1)]));
        assert_eq!(nested.pow_nested_lucas(2).unwrap(), flat.pow_square_multiply(2).unwrap());
    }

    #[test]
    fn affine_drift_examples() {
        let lind = poly(2, &[(-1, 1), (1, 1)]);
        let linear = AffineCa::new(lind.clone(), 0);
        assert!((0..20).all(|n| linear.affine_drift(n) == 0));

        let g = AffineCa::new(lind, 1);
        assert_eq!(g.affine_drift(0), 0);
        assert!((1..20).all(|n| g.affine_drift(n) == 1));

        let g = AffineCa::new(poly(2, &[(0, 1), (1, 1), (2, 1)]), 1);
        for n in 0..20 {
            assert_eq!(g.affine_drift(n), (n % 2) as u32);
        }
    }

    #[test]
    fn affine_drift_matches_iteration() {
        // iterate constants: c_0 = c, c_(k+1) = F(c_k); h_n = c_0 + ... + c_(n-1)
        for (m, terms, c) in [(5u32, vec![(0i64, 2i64), (1, 4)], 3i64), (6, vec![(-1, 1), (2, 3)], 5), (7, vec![(0, 3)], 1)] {
            let f = poly(m, &terms);
            let g = AffineCa::new(f.clone(), c);
            let modulus = z(m);
            let s = f.coefficient_sum();
            let mut ck = modulus.reduce(c);
            let mut h = 0;
            for n in 0..200u64 {
                assert_eq!(g.affine_drift(n), h, "m={m} n={n}");
                h = modulus.add(h, ck);
                ck = modulus.mul(ck, s);
            }
        }
    }

    #[test]
    fn box_enumeration() {
        let sites = box_sites(&ShiftVector::new(&[0, -1]), &ShiftVector::new(&[1, 0]));
        assert_eq!(
            sites,
            vec![
                ShiftVector::new(&[0, -1]),
                ShiftVector::new(&[0, 0]),
                ShiftVector::new(&[1, -1]),
                ShiftVector::new(&[1, 0]),
            ]
        );
        assert!(box_sites(&ShiftVector::d1(1), &ShiftVector::d1(0)).is_empty());
    }
}
