//! Measures on `(Z/m)^(Z^D)` and their Fourier coefficients.
//!
//! The Fourier coefficient of a measure `mu` at a character `chi` is
//! `<chi, mu> = integral of chi d mu`. Bernoulli measures factor sitewise.
//! Stationary Markov measures on `Z` are evaluated with the transfer
//! operators `Q[xi](a) = sum_b q^a_b xi(b)` and `M_chi[xi](a) = chi(a) xi(a)`:
//!
//! ```text
//! <chi, mu> = < M_chi0 Q M_chi1 Q ... M_chi(N-1) Q [chi_N], nu >
//! ```
//!
//! `N`-step chains are reduced to one-step chains on blocks of `N` letters.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::algebra::{character_table, cyclic_char_value, root_of_unity, Modulus};
use crate::characters::CharacterSystem;
use crate::numeric::{ComplexSum, NeumaierSum};
use crate::{Error, Result};

/// Tolerance on row sums and total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Tolerance on `nu Q = nu` for a supplied stationary vector.
pub const STATIONARITY_TOLERANCE: f64 = 1e-10;
/// Residual target of the power iteration.
pub const POWER_ITERATION_RESIDUAL: f64 = 1e-14;
const POWER_ITERATION_CAP: usize = 1_000_000;

fn validate_probability(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidWeights("non-finite weight"));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidWeights("negative weight"));
    }
    let total = crate::numeric::sum(weights);
    if libm::fabs(total - 1.0) > MASS_TOLERANCE {
        return Err(Error::InvalidWeights("weights do not sum to 1"));
    }
    Ok(())
}

fn check_modulus(expected: Modulus, found: Modulus) -> Result<()> {
    if expected != found {
        return Err(Error::ModulusMismatch {
            expected: expected.get(),
            found: found.get(),
        });
    }
    Ok(())
}

fn require_dim_one(chi: &CharacterSystem) -> Result<()> {
    if chi.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            required: 1,
            found: chi.dim(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Bernoulli

/// A one-site law `beta` on `Z/m`; the measure is the product `beta^(x Z^D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliSpec {
    modulus: Modulus,
    weights: Vec<f64>,
}

impl BernoulliSpec {
    pub fn new(modulus: Modulus, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != modulus.get() as usize {
            return Err(Error::TableShape {
                expected: modulus.get() as usize,
                found: weights.len(),
            });
        }
        validate_probability(&weights)?;
        Ok(Self { modulus, weights })
    }

    pub fn uniform(modulus: Modulus) -> Self {
        let m = modulus.get() as usize;
        Self {
            modulus,
            weights: vec![1.0 / m as f64; m],
        }
    }

    pub fn point_mass(modulus: Modulus, symbol: u32) -> Self {
        let mut weights = vec![0.0; modulus.get() as usize];
        weights[(symbol % modulus.get()) as usize] = 1.0;
        Self { modulus, weights }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `c_k = sum_a beta_a exp(2 pi i k a / m)`.
    pub fn coefficient(&self, k: u32) -> Complex64 {
        let mut acc = ComplexSum::new();
        for (a, &w) in self.weights.iter().enumerate() {
            acc.add(cyclic_char_value(k, a as u32, self.modulus) * w);
        }
        acc.value()
    }

    /// `c_k` for every `k` in `0..m`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        (0..self.modulus.get()).map(|k| self.coefficient(k)).collect()
    }

    /// `(beta * beta')(a) = sum_b beta(b) beta'(a - b)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        check_modulus(self.modulus, other.modulus)?;
        let m = self.modulus;
        let weights = (0..m.get())
            .map(|a| {
                (0..m.get())
                    .map(|b| self.weights[b as usize] * other.weights[m.sub(a, b) as usize])
                    .collect::<NeumaierSum>()
                    .value()
            })
            .collect();
        Ok(Self { modulus: m, weights })
    }
}

/// `<chi, beta^(x Z^D)> = prod over sites of c_(chi_k)`.
pub fn fourier_bernoulli(chi: &CharacterSystem, beta: &BernoulliSpec) -> Result<Complex64> {
    check_modulus(beta.modulus, chi.modulus())?;
    let coefficients = beta.coefficients();
    Ok(chi
        .entries()
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, (_, e)| {
            acc * coefficients[*e as usize]
        }))
}

/// `convolve` as a free function.
pub fn convolve(a: &BernoulliSpec, b: &BernoulliSpec) -> Result<BernoulliSpec> {
    a.convolve(b)
}

// ---------------------------------------------------------------------------
// Certificates

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// `|<chi, mu>| <= c^rank`.
    Bernoulli,
    /// `|<chi, mu>| <= C^floor((rank - 1) / 2)`.
    Markov,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateKind::Bernoulli => f.write_str("bernoulli-c"),
            CertificateKind::Markov => f.write_str("markov-C"),
        }
    }
}

/// A numeric witness of harmonic mixing: a decay base and the rule that turns
/// a character rank into an exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingCertificate {
    pub kind: CertificateKind,
    pub base: f64,
    /// Whether the measure meets the theorem's hypotheses (prime modulus and
    /// a non-degenerate law for Bernoulli; strictly positive transitions for
    /// Markov).
    pub hypotheses_hold: bool,
}

impl MixingCertificate {
    pub fn is_mixing(&self) -> bool {
        self.base < 1.0 - MASS_TOLERANCE
    }

    /// Exponent applied to the base for a character of the given rank.
    pub fn exponent(&self, rank: usize) -> u32 {
        match self.kind {
            CertificateKind::Bernoulli => rank as u32,
            CertificateKind::Markov => (rank.saturating_sub(1) / 2) as u32,
        }
    }

    /// Upper bound on `|<chi, mu>|` for a character of the given rank.
    pub fn bound(&self, rank: usize) -> f64 {
        libm::pow(self.base, self.exponent(rank) as f64)
    }

    pub fn rule(&self) -> &'static str {
        match self.kind {
            CertificateKind::Bernoulli => "base^rank",
            CertificateKind::Markov => "base^floor((rank-1)/2)",
        }
    }
}

/// `c = max_{0 < k < m} |c_k|`.
pub fn bernoulli_certificate(beta: &BernoulliSpec) -> MixingCertificate {
    let base = (1..beta.modulus.get())
        .map(|k| beta.coefficient(k).norm())
        .fold(0.0, f64::max)
        .min(1.0);
    let degenerate = beta.weights.iter().any(|&w| w >= 1.0 - MASS_TOLERANCE);
    MixingCertificate {
        kind: CertificateKind::Bernoulli,
        base,
        hypotheses_hold: beta.modulus.is_prime() && !degenerate,
    }
}

// ---------------------------------------------------------------------------
// Markov

/// A row-stochastic matrix `q^a_b`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(size: usize, entries: Vec<f64>) -> Result<Self> {
        if size == 0 || entries.len() != size * size {
            return Err(Error::TableShape {
                expected: size * size,
                found: entries.len(),
            });
        }
        for (row, chunk) in entries.chunks(size).enumerate() {
            if chunk.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidWeights("transition entries must be finite and nonnegative"));
            }
            let sum = crate::numeric::sum(chunk);
            if libm::fabs(sum - 1.0) > MASS_TOLERANCE {
                return Err(Error::NotStochastic { row, sum });
            }
        }
        Ok(Self { size, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::TableShape {
                    expected: size,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(size, entries)
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            size,
            entries: vec![1.0 / size as f64; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.size + to]
    }

    pub(crate) fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.size..(from + 1) * self.size]
    }

    /// First entry that is not strictly positive, if any.
    pub fn first_nonpositive(&self) -> Option<(usize, usize)> {
        self.entries
            .iter()
            .position(|&w| w <= 0.0)
            .map(|i| (i / self.size, i % self.size))
    }

    /// `Q[xi](a) = sum_b q^a_b xi(b)`.
    pub fn apply(&self, xi: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(xi.len(), self.size);
        (0..self.size)
            .map(|a| {
                let mut acc = ComplexSum::new();
                for (b, &q) in self.row(a).iter().enumerate() {
                    acc.add(xi[b] * q);
                }
                acc.value()
            })
            .collect()
    }

    /// `nu Q`, the law one step after `nu`.
    pub fn push_forward(&self, nu: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|b| {
                (0..self.size)
                    .map(|a| nu[a] * self.get(a, b))
                    .collect::<NeumaierSum>()
                    .value()
            })
            .collect()
    }

    /// `max_b |(nu Q)_b - nu_b|`.
    pub fn stationarity_residual(&self, nu: &[f64]) -> f64 {
        self.push_forward(nu)
            .iter()
            .zip(nu)
            .map(|(x, y)| libm::fabs(x - y))
            .fold(0.0, f64::max)
    }

    /// Time reversal with respect to `nu`: `r^b_a = nu_a q^a_b / nu_b`, the
    /// probability of the previous letter `a` given the current letter `b`.
    pub fn reversed(&self, nu: &[f64]) -> Self {
        let n = self.size;
        let mut entries = vec![0.0; n * n];
        for b in 0..n {
            if nu[b] <= 0.0 {
                continue;
            }
            for a in 0..n {
                entries[b * n + a] = nu[a] * self.get(a, b) / nu[b];
            }
        }
        Self { size: n, entries }
    }
}

/// `markov_operator_apply(Q, xi)`.
pub fn markov_operator_apply(q: &TransitionMatrix, xi: &[Complex64]) -> Vec<Complex64> {
    q.apply(xi)
}

/// Whether every state reaches every other through positive entries.
fn is_irreducible(q: &TransitionMatrix) -> bool {
    let n = q.size;
    let reaches_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..n {
                let w = if forward { q.get(a, b) } else { q.get(b, a) };
                if w > 0.0 && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.iter().all(|&x| x)
    };
    reaches_all(true) && reaches_all(false)
}

/// Stationary vector `nu Q = nu` by power iteration from the uniform vector.
///
/// The vector is unique when `Q` is irreducible. Chains with zero entries are
/// iterated through the lazy chain `(Q + I) / 2`, which has the same
/// stationary vector and no periodicity. A reducible chain is rejected with
/// its first non-positive entry.
pub fn stationary_vector(q: &TransitionMatrix) -> Result<Vec<f64>> {
    let lazy = match q.first_nonpositive() {
        None => false,
        Some((row, col)) if !is_irreducible(q) => return Err(Error::NonUniqueStationary { row, col }),
        Some(_) => true,
    };
    let n = q.size;
    let mut nu = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITERATION_CAP {
        let mut next = q.push_forward(&nu);
        if lazy {
            for (x, y) in next.iter_mut().zip(&nu) {
                *x = 0.5 * (*x + y);
            }
        }
        let total = crate::numeric::sum(&next);
        for x in &mut next {
            *x /= total;
        }
        residual = next
            .iter()
            .zip(&nu)
            .map(|(x, y)| libm::fabs(x - y))
            .fold(0.0, f64::max);
        nu = next;
        if residual <= POWER_ITERATION_RESIDUAL {
            return Ok(nu);
        }
    }
    if residual <= 1e-12 {
        return Ok(nu);
    }
    Err(Error::NoConvergence { residual })
}

/// A stationary Markov chain on `size` states.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    transition: TransitionMatrix,
    stationary: Vec<f64>,
}

impl MarkovChain {
    /// Validates a supplied stationary vector, or computes one.
    pub fn new(transition: TransitionMatrix, stationary: Option<Vec<f64>>) -> Result<Self> {
        let stationary = match stationary {
            Some(nu) => {
                if nu.len() != transition.size {
                    return Err(Error::TableShape {
                        expected: transition.size,
                        found: nu.len(),
                    });
                }
                validate_probability(&nu)?;
                let residual = transition.stationarity_residual(&nu);
                if residual > STATIONARITY_TOLERANCE {
                    return Err(Error::NotStationary { residual });
                }
                nu
            }
            None => stationary_vector(&transition)?,
        };
        Ok(Self {
            transition,
            stationary,
        })
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn size(&self) -> usize {
        self.transition.size
    }
}

/// `sum over paths x_0..x_L of init(x_0) f_0(x_0) prod_t q(x_(t-1), x_t) f_t(x_t)`,
/// evaluated right to left with the transfer operator. `None` entries are
/// constant one.
pub fn chain_expectation(
    q: &TransitionMatrix,
    initial: &[f64],
    site_functions: &[Option<Vec<Complex64>>],
) -> Complex64 {
    let v = backward_pass(q, site_functions);
    let mut acc = ComplexSum::new();
    for (a, &w) in initial.iter().enumerate() {
        acc.add(v[a] * w);
    }
    acc.value()
}

/// `f_0 . Q (f_1 . Q (... Q f_L))` as a function of the first state.
fn backward_pass(q: &TransitionMatrix, site_functions: &[Option<Vec<Complex64>>]) -> Vec<Complex64> {
    let n = q.size;
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    for (i, f) in site_functions.iter().enumerate().rev() {
        if i + 1 < site_functions.len() {
            v = q.apply(&v);
        }
        if let Some(f) = f {
            for (x, y) in v.iter_mut().zip(f) {
                *x *= y;
            }
        }
    }
    v
}

/// Expectation of `prod_t f_t(X_t)` over the chain started at `anchor` and
/// run for `site_functions.len()` steps (the first function sits one step
/// after the anchor).
fn anchored_expectation(q: &TransitionMatrix, anchor: usize, site_functions: &[Option<Vec<Complex64>>]) -> Complex64 {
    if site_functions.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let v = backward_pass(q, site_functions);
    let mut acc = ComplexSum::new();
    for (b, &w) in q.row(anchor).iter().enumerate() {
        acc.add(v[b] * w);
    }
    acc.value()
}

/// A stationary Markov measure on `(Z/m)^Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSpec {
    modulus: Modulus,
    chain: MarkovChain,
}

impl MarkovSpec {
    pub fn new(modulus: Modulus, transition: TransitionMatrix, stationary: Option<Vec<f64>>) -> Result<Self> {
        if transition.size != modulus.get() as usize {
            return Err(Error::TableShape {
                expected: modulus.get() as usize,
                found: transition.size,
            });
        }
        Ok(Self {
            modulus,
            chain: MarkovChain::new(transition, stationary)?,
        })
    }

    pub fn from_rows(modulus: Modulus, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(modulus, TransitionMatrix::from_rows(rows)?, None)
    }

    /// The memoryless chain whose every row is `beta`.
    pub fn from_bernoulli(beta: &BernoulliSpec) -> Result<Self> {
        let m = beta.modulus.get() as usize;
        let mut entries = Vec::with_capacity(m * m);
        for _ in 0..m {
            entries.extend_from_slice(&beta.weights);
        }
        Self::new(
            beta.modulus,
            TransitionMatrix::new(m, entries)?,
            Some(beta.weights.clone()),
        )
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.chain.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.chain.stationary
    }
}

/// Per-site character tables for the sites `lo ..= hi` of a 1-D character.
/// Trivial sites are `None`.
fn site_tables(chi: &CharacterSystem, lo: i64, hi: i64, reverse: bool) -> Vec<Option<Vec<Complex64>>> {
    let modulus = chi.modulus();
    let m = modulus.get() as usize;
    let mut tables: Vec<Option<Vec<Complex64>>> = vec![None; m];
    let len = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
    let mut out: Vec<Option<Vec<Complex64>>> = vec![None; len];
    for (site, e) in chi.entries() {
        let x = site.coords()[0];
        if x < lo || x > hi {
            continue;
        }
        let table = tables[*e as usize].get_or_insert_with(|| character_table(*e, modulus));
        let idx = if reverse { (hi - x) as usize } else { (x - lo) as usize };
        out[idx] = Some(table.clone());
    }
    out
}

/// `<chi, mu>` for a stationary Markov measure on `Z`. The support is
/// translated to start at 0, which stationarity allows.
pub fn fourier_markov(chi: &CharacterSystem, spec: &MarkovSpec) -> Result<Complex64> {
    require_dim_one(chi)?;
    check_modulus(spec.modulus, chi.modulus())?;
    let Some((lo, hi)) = chi.support_bounds() else {
        return Ok(Complex64::new(1.0, 0.0));
    };
    let fns = site_tables(chi, lo.coords()[0], hi.coords()[0], false);
    Ok(chain_expectation(spec.transition(), spec.stationary(), &fns))
}

/// `C = max over xi, zeta (zeta nontrivial) of ||M_xi Q M_zeta Q||_inf`, the
/// operator norm being the maximum absolute row sum.
pub fn markov_certificate(q: &TransitionMatrix, modulus: Modulus) -> Result<MixingCertificate> {
    let m = modulus.get() as usize;
    if q.size != m {
        return Err(Error::TableShape {
            expected: m,
            found: q.size,
        });
    }
    if let Some((row, col)) = q.first_nonpositive() {
        return Err(Error::HypothesisViolation { row, col });
    }
    let mut base = 0.0f64;
    for zeta_exp in 1..m as u32 {
        let zeta = character_table(zeta_exp, modulus);
        // Q M_zeta Q as an explicit matrix
        let mut inner = vec![Complex64::new(0.0, 0.0); m * m];
        for a in 0..m {
            for c in 0..m {
                let mut acc = ComplexSum::new();
                for b in 0..m {
                    acc.add(zeta[b] * (q.get(a, b) * q.get(b, c)));
                }
                inner[a * m + c] = acc.value();
            }
        }
        for xi_exp in 0..m as u32 {
            let xi = character_table(xi_exp, modulus);
            for a in 0..m {
                let row: NeumaierSum = (0..m).map(|c| (xi[a] * inner[a * m + c]).norm()).collect();
                base = base.max(row.value());
            }
        }
    }
    Ok(MixingCertificate {
        kind: CertificateKind::Markov,
        base,
        hypotheses_hold: true,
    })
}

/// A Markov measure conditioned on the cylinder `[word]` placed at
/// `window_start ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedMarkov {
    spec: MarkovSpec,
    window_start: i64,
    word: Vec<u32>,
    reversed: TransitionMatrix,
    word_probability: f64,
}

impl ConditionedMarkov {
    pub fn new(spec: MarkovSpec, window_start: i64, word: Vec<u32>) -> Result<Self> {
        let m = spec.modulus.get();
        if let Some(&value) = word.iter().find(|&&a| a >= m) {
            return Err(Error::InvalidSymbol { value, modulus: m });
        }
        let word_probability = cylinder_probability(&spec, &word);
        if !word.is_empty() && word_probability <= 0.0 {
            return Err(Error::ZeroProbabilityWord);
        }
        let reversed = spec.transition().reversed(spec.stationary());
        Ok(Self {
            spec,
            window_start,
            word,
            reversed,
            word_probability,
        })
    }

    pub fn spec(&self) -> &MarkovSpec {
        &self.spec
    }

    pub fn window_start(&self) -> i64 {
        self.window_start
    }

    pub fn word(&self) -> &[u32] {
        &self.word
    }

    /// `mu([word])` under the unconditioned measure.
    pub fn word_probability(&self) -> f64 {
        self.word_probability
    }

    pub fn modulus(&self) -> Modulus {
        self.spec.modulus
    }
}

/// `nu_(a_0) q^(a_0)_(a_1) ... q^(a_(L-2))_(a_(L-1))`; 1 for the empty word.
pub fn cylinder_probability(spec: &MarkovSpec, word: &[u32]) -> f64 {
    let Some(&first) = word.first() else {
        return 1.0;
    };
    let q = spec.transition();
    word.windows(2)
        .fold(spec.stationary()[first as usize], |acc, w| {
            acc * q.get(w[0] as usize, w[1] as usize)
        })
}

/// `<chi, mu_[a]>` for the measure conditioned on a cylinder: the product of
/// a left tail (reversed chain anchored at the first letter of the word), the
/// character on the word itself, and a right tail (forward chain anchored at
/// the last letter). An empty word gives the unconditioned coefficient.
pub fn fourier_markov_conditioned(
    chi: &CharacterSystem,
    spec: &MarkovSpec,
    window_start: i64,
    word: &[u32],
) -> Result<Complex64> {
    let conditioned = ConditionedMarkov::new(spec.clone(), window_start, word.to_vec())?;
    fourier_conditioned(chi, &conditioned)
}

pub fn fourier_conditioned(chi: &CharacterSystem, measure: &ConditionedMarkov) -> Result<Complex64> {
    require_dim_one(chi)?;
    check_modulus(measure.modulus(), chi.modulus())?;
    if measure.word.is_empty() {
        return fourier_markov(chi, &measure.spec);
    }
    let Some((lo_site, hi_site)) = chi.support_bounds() else {
        return Ok(Complex64::new(1.0, 0.0));
    };
    let (chi_lo, chi_hi) = (lo_site.coords()[0], hi_site.coords()[0]);
    let m = measure.modulus();
    let lo = measure.window_start;
    let hi = lo + measure.word.len() as i64 - 1;

    let mut middle = 0u32;
    for (site, e) in chi.entries() {
        let x = site.coords()[0];
        if (lo..=hi).contains(&x) {
            let a = measure.word[(x - lo) as usize];
            middle = m.add(middle, m.mul(*e, a));
        }
    }
    let middle = root_of_unity(middle as u64, m.get());

    let right = if chi_hi > hi {
        let fns = site_tables(chi, hi + 1, chi_hi, false);
        anchored_expectation(measure.spec.transition(), *measure.word.last().unwrap() as usize, &fns)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let left = if chi_lo < lo {
        let fns = site_tables(chi, chi_lo, lo - 1, true);
        anchored_expectation(&measure.reversed, measure.word[0] as usize, &fns)
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(left * middle * right)
}

// ---------------------------------------------------------------------------
// N-step Markov

/// Index of a word `(a_0, ..., a_(L-1))` over `Z/m`: `sum_j a_j m^j`.
pub fn word_index(word: &[u32], m: u32) -> usize {
    word.iter().rev().fold(0usize, |acc, &a| acc * m as usize + a as usize)
}

/// Inverse of [`word_index`].
pub fn word_from_index(mut index: usize, m: u32, len: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((index % m as usize) as u32);
        index /= m as usize;
    }
    out
}

/// An `N`-step Markov process on `Z/m`: the law of each letter given the
/// previous `N` letters.
///
/// Row `word_index(history)` of the table holds `q^(history)_b`, with the
/// oldest letter of the history first.
#[derive(Debug, Clone, PartialEq)]
pub struct NStepMarkovSpec {
    modulus: Modulus,
    order: usize,
    table: Vec<f64>,
    blocks: MarkovChain,
}

impl NStepMarkovSpec {
    pub fn new(modulus: Modulus, order: usize, rows: &[Vec<f64>], stationary: Option<Vec<f64>>) -> Result<Self> {
        if order == 0 {
            return Err(Error::TableShape { expected: 1, found: 0 });
        }
        let m = modulus.get() as usize;
        let states = m
            .checked_pow(order as u32)
            .ok_or(Error::TableShape { expected: usize::MAX, found: 0 })?;
        if rows.len() != states {
            return Err(Error::TableShape {
                expected: states,
                found: rows.len(),
            });
        }
        let mut table = Vec::with_capacity(states * m);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::TableShape {
                    expected: m,
                    found: r.len(),
                });
            }
            if r.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidWeights("transition entries must be finite and nonnegative"));
            }
            let sum = crate::numeric::sum(r);
            if libm::fabs(sum - 1.0) > MASS_TOLERANCE {
                return Err(Error::NotStochastic { row, sum });
            }
            table.extend_from_slice(r);
        }
        let block_transition = block_transition(modulus, order, &table)?;
        let blocks = MarkovChain::new(block_transition, stationary)?;
        Ok(Self {
            modulus,
            order,
            table,
            blocks,
        })
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `q^(history)_next`.
    pub fn conditional(&self, history: &[u32], next: u32) -> f64 {
        let m = self.modulus.get();
        self.table[word_index(history, m) * m as usize + next as usize]
    }

    /// Rows of `q^(history)_next`, row-major.
    pub(crate) fn table(&self) -> &[f64] {
        &self.table
    }

    /// Stationary law of `N` consecutive letters.
    pub fn block_stationary(&self) -> &[f64] {
        self.blocks.stationary()
    }

    pub fn block_chain(&self) -> &MarkovChain {
        &self.blocks
    }
}

/// `p^(a_1..a_N)_(b_1..b_N) = prod_j q^(a_j..a_N, b_1..b_(j-1))_(b_j)`.
fn block_transition(modulus: Modulus, order: usize, table: &[f64]) -> Result<TransitionMatrix> {
    let m = modulus.get();
    let states = (m as usize).pow(order as u32);
    let mut entries = vec![0.0; states * states];
    let mut history = Vec::with_capacity(2 * order);
    for from in 0..states {
        let a = word_from_index(from, m, order);
        for to in 0..states {
            let b = word_from_index(to, m, order);
            let mut p = 1.0;
            for j in 0..order {
                history.clear();
                history.extend_from_slice(&a[j..]);
                history.extend_from_slice(&b[..j]);
                p *= table[word_index(&history, m) * m as usize + b[j] as usize];
            }
            entries[from * states + to] = p;
        }
    }
    TransitionMatrix::new(states, entries)
}

/// The one-step chain on blocks of `N` letters that the block coding
/// `A^Z -> (A^N)^Z` carries the `N`-step process to. Block states are
/// numbered by [`word_index`].
pub fn nstep_block_code(spec: &NStepMarkovSpec) -> MarkovChain {
    spec.blocks.clone()
}

/// `<chi, alpha>` for an `N`-step process: the support is translated to start
/// at 0, padded to whole blocks, and each block of exponents becomes one
/// character of `(Z/m)^N` on the block chain.
pub fn fourier_nstep(chi: &CharacterSystem, spec: &NStepMarkovSpec) -> Result<Complex64> {
    require_dim_one(chi)?;
    check_modulus(spec.modulus, chi.modulus())?;
    let Some((lo, hi)) = chi.support_bounds() else {
        return Ok(Complex64::new(1.0, 0.0));
    };
    let (lo, hi) = (lo.coords()[0], hi.coords()[0]);
    let n = spec.order;
    let width = (hi - lo + 1) as usize;
    let blocks = width.div_ceil(n);
    let m = spec.modulus;
    let states = spec.blocks.size();

    let mut exponents = vec![0u32; blocks * n];
    for (site, e) in chi.entries() {
        exponents[(site.coords()[0] - lo) as usize] = *e;
    }
    let fns: Vec<Option<Vec<Complex64>>> = exponents
        .chunks(n)
        .map(|block| {
            if block.iter().all(|&e| e == 0) {
                return None;
            }
            Some(
                (0..states)
                    .map(|s| {
                        let letters = word_from_index(s, m.get(), n);
                        let phase = block
                            .iter()
                            .zip(&letters)
                            .fold(0u32, |acc, (e, a)| m.add(acc, m.mul(*e, *a)));
                        root_of_unity(phase as u64, m.get())
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(chain_expectation(
        spec.blocks.transition(),
        spec.blocks.stationary(),
        &fns,
    ))
}

// ---------------------------------------------------------------------------
// Haar and the measure enum

/// `<chi, Haar>`: 1 at the trivial character, 0 elsewhere.
pub fn haar_fourier(chi: &CharacterSystem) -> Complex64 {
    if chi.is_trivial() {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Any supported measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Bernoulli(BernoulliSpec),
    Markov(MarkovSpec),
    ConditionedMarkov(ConditionedMarkov),
    NStep(NStepMarkovSpec),
}

impl Measure {
    pub fn modulus(&self) -> Modulus {
        match self {
            Measure::Bernoulli(b) => b.modulus(),
            Measure::Markov(s) => s.modulus(),
            Measure::ConditionedMarkov(c) => c.modulus(),
            Measure::NStep(s) => s.modulus(),
        }
    }

    /// Lattice dimension the measure requires, if restricted.
    pub fn required_dim(&self) -> Option<usize> {
        match self {
            Measure::Bernoulli(_) => None,
            _ => Some(1),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Measure::Bernoulli(_) => "bernoulli",
            Measure::Markov(_) => "markov",
            Measure::ConditionedMarkov(_) => "conditioned-markov",
            Measure::NStep(_) => "nstep-markov",
        }
    }

    pub fn fourier(&self, chi: &CharacterSystem) -> Result<Complex64> {
        match self {
            Measure::Bernoulli(b) => fourier_bernoulli(chi, b),
            Measure::Markov(s) => fourier_markov(chi, s),
            Measure::ConditionedMarkov(c) => fourier_conditioned(chi, c),
            Measure::NStep(s) => fourier_nstep(chi, s),
        }
    }

    /// Whether the measure is invariant under shifts (all but the
    /// conditioned one).
    pub fn is_stationary(&self) -> bool {
        !matches!(self, Measure::ConditionedMarkov(_))
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.required_dim() {
            Some(required) if required != dim => Err(Error::UnsupportedDimension { required, found: dim }),
            _ => Ok(()),
        }
    }
}

/// Sites of a 1-D character, for callers that need them as integers.
pub fn sites_1d(chi: &CharacterSystem) -> Vec<i64> {
    chi.entries().iter().map(|(s, _)| s.coords()[0]).collect()
}
