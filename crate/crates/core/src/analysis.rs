//! Diffusion and convergence diagnostics.
//!
//! * rank traces `n -> rank(chi o F^n)` and their density above a threshold;
//! * decay traces `n -> <chi o F^n, mu>` with running Cesaro averages;
//! * exact cylinder laws of `F^n mu` on a finite window, by Fourier inversion
//!   and by brute-force enumeration;
//! * the gap constant and `0^G 1` word statistics on `p`-ary digit strings.
//!
//! Long sweeps are split into segments and blocks whose boundaries depend only
//! on the problem, never on the number of workers, so a parallel caller that
//! merges pieces in index order reproduces the serial result bit for bit.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::algebra::{ceil_log, index_set, p_ary_expansion, root_of_unity, Modulus};
use crate::characters::{dilate, CharacterSystem};
use crate::lca::{Automaton, LcaPolynomial, NestedForm, ShiftVector};
use crate::measures::{word_from_index, word_index, Measure};
use crate::numeric::{ComplexSum, NeumaierSum};
use crate::{Error, Result};

/// Tolerance for the total mass and the most negative entry of an inverted
/// distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;
/// Steps between checks of the incremental pullback against a direct power.
pub const CHECKPOINT_INTERVAL: u64 = 64;

/// Resource guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest rank a pulled-back character may reach.
    pub max_support: usize,
    /// Largest number of configurations the brute-force oracle may visit.
    pub max_enum: u128,
    /// Largest character group `m^|W|` of an inversion window.
    pub max_window: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_support: 1 << 20,
            max_enum: 1 << 24,
            max_window: 4096,
        }
    }
}

fn check_support(chi: &CharacterSystem, limits: &Limits) -> Result<()> {
    if chi.rank() > limits.max_support {
        return Err(Error::SupportLimit {
            size: chi.rank(),
            limit: limits.max_support,
        });
    }
    Ok(())
}

fn check_pair(chi: &CharacterSystem, f: &LcaPolynomial) -> Result<()> {
    if chi.modulus() != f.modulus() {
        return Err(Error::ModulusMismatch {
            expected: f.modulus().get(),
            found: chi.modulus().get(),
        });
    }
    if chi.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: chi.dim(),
        });
    }
    Ok(())
}

/// Walks `chi o F^n` forward in `n` by one pullback per step, cross-checking
/// against the direct power every [`CHECKPOINT_INTERVAL`] steps.
struct PullbackWalk<'a> {
    chi: &'a CharacterSystem,
    f: &'a LcaPolynomial,
    limits: &'a Limits,
    n: u64,
    current: CharacterSystem,
}

impl<'a> PullbackWalk<'a> {
    fn new(chi: &'a CharacterSystem, f: &'a LcaPolynomial, start: u64, limits: &'a Limits) -> Result<Self> {
        check_pair(chi, f)?;
        let current = chi.pullback_iterated(f, start)?;
        check_support(&current, limits)?;
        Ok(Self {
            chi,
            f,
            limits,
            n: start,
            current,
        })
    }

    fn advance(&mut self) -> Result<()> {
        self.current = self.current.pullback(self.f)?;
        self.n += 1;
        check_support(&self.current, self.limits)?;
        if self.n.is_multiple_of(CHECKPOINT_INTERVAL) && self.chi.pullback_iterated(self.f, self.n)? != self.current {
            return Err(Error::CheckpointMismatch { n: self.n });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Rank traces

/// `rank(chi o F^n)` for `n = 0 ..= N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTrace {
    character: CharacterSystem,
    automaton: LcaPolynomial,
    ranks: Vec<usize>,
}

impl RankTrace {
    /// Joins consecutive segments, the first starting at `n = 0`.
    pub fn from_segments<I>(character: CharacterSystem, automaton: LcaPolynomial, segments: I) -> Self
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        let ranks = segments.into_iter().flatten().collect();
        Self {
            character,
            automaton,
            ranks,
        }
    }

    pub fn character(&self) -> &CharacterSystem {
        &self.character
    }

    pub fn automaton(&self) -> &LcaPolynomial {
        &self.automaton
    }

    pub fn horizon(&self) -> u64 {
        self.ranks.len().saturating_sub(1) as u64
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank(&self, n: u64) -> Option<usize> {
        self.ranks.get(n as usize).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.ranks.iter().enumerate().map(|(n, &r)| (n as u64, r))
    }

    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(0)
    }
}

/// Ranks for `n` in `start .. end`.
pub fn rank_trace_segment(
    chi: &CharacterSystem,
    f: &LcaPolynomial,
    start: u64,
    end: u64,
    limits: &Limits,
) -> Result<Vec<usize>> {
    if end <= start {
        return Ok(Vec::new());
    }
    let mut walk = PullbackWalk::new(chi, f, start, limits)?;
    let mut out = Vec::with_capacity((end - start) as usize);
    out.push(walk.current.rank());
    while walk.n + 1 < end {
        walk.advance()?;
        out.push(walk.current.rank());
    }
    Ok(out)
}

pub fn rank_trace(chi: &CharacterSystem, f: &LcaPolynomial, horizon: u64, limits: &Limits) -> Result<RankTrace> {
    let ranks = rank_trace_segment(chi, f, 0, horizon + 1, limits)?;
    Ok(RankTrace::from_segments(chi.clone(), f.clone(), [ranks]))
}

/// `#{1 <= n <= N : rank > R} / N`; zero for an empty horizon.
pub fn density_above(trace: &RankTrace, threshold: i64) -> f64 {
    let horizon = trace.horizon();
    if horizon == 0 {
        return 0.0;
    }
    let count = trace.ranks[1..]
        .iter()
        .filter(|&&r| (r as i128) > threshold as i128)
        .count();
    count as f64 / horizon as f64
}

// ---------------------------------------------------------------------------
// Decay traces

/// `<chi o F^n, mu>` (times the drift phase for affine automata) for
/// `n = 0 ..= N`, with `cesaro[n] = (1/n) sum_(k=1..n) |c_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrace {
    coefficients: Vec<Complex64>,
    cesaro: Vec<f64>,
}

impl DecayTrace {
    pub fn from_coefficients(coefficients: Vec<Complex64>) -> Self {
        let mut cesaro = Vec::with_capacity(coefficients.len());
        let mut acc = NeumaierSum::new();
        cesaro.push(0.0);
        for (n, c) in coefficients.iter().enumerate().skip(1) {
            acc.add(c.norm());
            cesaro.push(acc.value() / n as f64);
        }
        cesaro.truncate(coefficients.len());
        Self { coefficients, cesaro }
    }

    pub fn horizon(&self) -> u64 {
        self.coefficients.len().saturating_sub(1) as u64
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, n: u64) -> Option<Complex64> {
        self.coefficients.get(n as usize).copied()
    }

    pub fn magnitude(&self, n: u64) -> Option<f64> {
        self.coefficient(n).map(|c| c.norm())
    }

    /// Running Cesaro averages; entry 0 is 0.
    pub fn cesaro(&self) -> &[f64] {
        &self.cesaro
    }

    /// `#{1 <= n <= N : |c_n| < eps} / N`.
    pub fn fraction_below(&self, epsilon: f64) -> f64 {
        let horizon = self.horizon();
        if horizon == 0 {
            return 0.0;
        }
        let count = self.coefficients[1..].iter().filter(|c| c.norm() < epsilon).count();
        count as f64 / horizon as f64
    }
}

/// Coefficients for `n` in `start .. end`.
pub fn fourier_decay_segment(
    chi: &CharacterSystem,
    automaton: &Automaton,
    measure: &Measure,
    start: u64,
    end: u64,
    limits: &Limits,
) -> Result<Vec<Complex64>> {
    measure.check_dim(chi.dim())?;
    if measure.modulus() != chi.modulus() {
        return Err(Error::ModulusMismatch {
            expected: measure.modulus().get(),
            found: chi.modulus().get(),
        });
    }
    if end <= start {
        return Ok(Vec::new());
    }
    let mut walk = PullbackWalk::new(chi, automaton.linear(), start, limits)?;
    let mut out = Vec::with_capacity((end - start) as usize);
    loop {
        let phase = chi.drift_phase(automaton.drift(walk.n));
        out.push(phase * measure.fourier(&walk.current)?);
        if walk.n + 1 >= end {
            return Ok(out);
        }
        walk.advance()?;
    }
}

pub fn fourier_decay(
    chi: &CharacterSystem,
    automaton: &Automaton,
    measure: &Measure,
    horizon: u64,
    limits: &Limits,
) -> Result<DecayTrace> {
    Ok(DecayTrace::from_coefficients(fourier_decay_segment(
        chi,
        automaton,
        measure,
        0,
        horizon + 1,
        limits,
    )?))
}

/// `(1/N) sum_(n=1..N) |c_n|`, with `N` clipped to the horizon.
pub fn cesaro_average(trace: &DecayTrace, n: u64) -> f64 {
    let n = n.min(trace.horizon());
    if n == 0 {
        return 0.0;
    }
    trace.cesaro[n as usize]
}

// ---------------------------------------------------------------------------
// Cylinder distributions

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionMethod {
    Inversion,
    BruteForce,
    Translated,
}

impl DistributionMethod {
    pub fn name(self) -> &'static str {
        match self {
            DistributionMethod::Inversion => "inversion",
            DistributionMethod::BruteForce => "brute-force",
            DistributionMethod::Translated => "translated",
        }
    }
}

/// A probability law on `(Z/m)^W` for a finite window `W`. Words are numbered
/// by [`word_index`] with the first window site as the lowest digit.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderDistribution {
    window: Vec<ShiftVector>,
    modulus: Modulus,
    probabilities: Vec<f64>,
    method: DistributionMethod,
}

impl CylinderDistribution {
    /// Validates total mass and positivity within the tolerance, then clamps
    /// small negative entries to zero.
    pub fn new(
        window: Vec<ShiftVector>,
        modulus: Modulus,
        mut probabilities: Vec<f64>,
        method: DistributionMethod,
    ) -> Result<Self> {
        let expected = (modulus.get() as usize)
            .checked_pow(window.len() as u32)
            .ok_or(Error::WindowLimit {
                size: u128::MAX,
                limit: usize::MAX as u128,
            })?;
        if probabilities.len() != expected {
            return Err(Error::WindowMismatch {
                expected,
                found: probabilities.len(),
            });
        }
        let total = crate::numeric::sum(&probabilities);
        let minimum = probabilities.iter().copied().fold(f64::INFINITY, f64::min);
        if !total.is_finite()
            || libm::fabs(total - 1.0) > DISTRIBUTION_TOLERANCE
            || minimum < -DISTRIBUTION_TOLERANCE
        {
            return Err(Error::InvalidInversion { total, minimum });
        }
        for p in &mut probabilities {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        Ok(Self {
            window,
            modulus,
            probabilities,
            method,
        })
    }

    pub fn window(&self) -> &[ShiftVector] {
        &self.window
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn method(&self) -> DistributionMethod {
        self.method
    }

    pub fn probability(&self, word: &[u32]) -> f64 {
        self.probabilities[word_index(word, self.modulus.get())]
    }

    pub fn word(&self, index: usize) -> Vec<u32> {
        word_from_index(index, self.modulus.get(), self.window.len())
    }

    pub fn entries(&self) -> impl Iterator<Item = (Vec<u32>, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.word(i), p))
    }

    pub fn total(&self) -> f64 {
        crate::numeric::sum(&self.probabilities)
    }
}

fn validate_window(window: &[ShiftVector], dim: usize) -> Result<()> {
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut seen = alloc::collections::BTreeSet::new();
    for s in window {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
        if !seen.insert(s.clone()) {
            return Err(Error::DuplicateSite(s.clone()));
        }
    }
    Ok(())
}

fn window_order(m: Modulus, len: usize) -> u128 {
    (m.get() as u128).checked_pow(len as u32).unwrap_or(u128::MAX)
}

/// Fourier inversion of the law of `F^n mu` on a window: one coefficient per
/// character of `(Z/m)^W`, then an inverse transform.
#[derive(Debug, Clone)]
pub struct InversionPlan {
    window: Vec<ShiftVector>,
    modulus: Modulus,
    power: LcaPolynomial,
    drift: u32,
    limits: Limits,
}

impl InversionPlan {
    pub fn new(automaton: &Automaton, n: u64, window: &[ShiftVector], limits: &Limits) -> Result<Self> {
        let modulus = automaton.modulus();
        validate_window(window, automaton.dim())?;
        let size = window_order(modulus, window.len());
        if size > limits.max_window {
            return Err(Error::WindowLimit {
                size,
                limit: limits.max_window,
            });
        }
        Ok(Self {
            window: window.to_vec(),
            modulus,
            power: automaton.linear().power(n)?,
            drift: automaton.drift(n),
            limits: *limits,
        })
    }

    /// Number of characters, `m^|W|`.
    pub fn len(&self) -> usize {
        window_order(self.modulus, self.window.len()) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Character number `index`: exponent `word_from_index(index)[i]` at the
    /// `i`-th window site.
    pub fn character(&self, index: usize) -> Result<CharacterSystem> {
        let exps = word_from_index(index, self.modulus.get(), self.window.len());
        CharacterSystem::new(
            self.modulus,
            self.power.dim(),
            self.window.iter().cloned().zip(exps.into_iter().map(i64::from)),
        )
    }

    /// `<chi o G^n, mu>` for character number `index`.
    pub fn coefficient(&self, index: usize, measure: &Measure) -> Result<Complex64> {
        let chi = self.character(index)?;
        let pulled = chi.pullback(&self.power)?;
        check_support(&pulled, &self.limits)?;
        Ok(chi.drift_phase(self.drift) * measure.fourier(&pulled)?)
    }

    /// `P[b] = m^(-|W|) sum_chi conj(chi(b)) c_chi`, computed axis by axis.
    pub fn assemble(&self, coefficients: &[Complex64]) -> Result<CylinderDistribution> {
        let len = self.len();
        if coefficients.len() != len {
            return Err(Error::WindowMismatch {
                expected: len,
                found: coefficients.len(),
            });
        }
        let m = self.modulus.get() as usize;
        let roots: Vec<Complex64> = (0..m).map(|j| root_of_unity(((m - j) % m) as u64, m as u32)).collect();
        let mut data = coefficients.to_vec();
        let mut scratch = vec![Complex64::new(0.0, 0.0); m];
        let mut stride = 1;
        for _ in 0..self.window.len() {
            for base in 0..len {
                if (base / stride) % m != 0 {
                    continue;
                }
                for (b, slot) in scratch.iter_mut().enumerate() {
                    let mut acc = ComplexSum::new();
                    for e in 0..m {
                        acc.add(roots[(e * b) % m] * data[base + e * stride]);
                    }
                    *slot = acc.value();
                }
                for (b, v) in scratch.iter().enumerate() {
                    data[base + b * stride] = *v;
                }
            }
            stride *= m;
        }
        let scale = 1.0 / len as f64;
        let probabilities = data.iter().map(|c| c.re * scale).collect();
        CylinderDistribution::new(
            self.window.clone(),
            self.modulus,
            probabilities,
            DistributionMethod::Inversion,
        )
    }
}

/// Cylinder law of `G^n mu` on `window` by Fourier inversion.
pub fn cylinder_distribution(
    automaton: &Automaton,
    n: u64,
    measure: &Measure,
    window: &[ShiftVector],
    limits: &Limits,
) -> Result<CylinderDistribution> {
    check_measure(automaton, measure)?;
    let plan = InversionPlan::new(automaton, n, window, limits)?;
    let coefficients = (0..plan.len())
        .map(|i| plan.coefficient(i, measure))
        .collect::<Result<Vec<_>>>()?;
    plan.assemble(&coefficients)
}

fn check_measure(automaton: &Automaton, measure: &Measure) -> Result<()> {
    if automaton.modulus() != measure.modulus() {
        return Err(Error::ModulusMismatch {
            expected: automaton.modulus().get(),
            found: measure.modulus().get(),
        });
    }
    measure.check_dim(automaton.dim())
}

/// One application of a local rule on a finite set of sites: each output is
/// `sum (coefficient * input[index]) + constant`.
#[derive(Debug, Clone)]
struct Stage {
    rows: Vec<Vec<(usize, u32)>>,
    constant: u32,
}

#[derive(Debug, Clone)]
enum SiteWeights {
    /// Independent sites with this one-site law.
    Product(Vec<f64>),
    /// A chain of the given order over consecutive sites: `initial` is the law
    /// of the first `order` letters, `table` the conditional law of the next.
    Chain {
        order: usize,
        initial: Vec<f64>,
        table: Vec<f64>,
    },
}

/// Brute-force cylinder law: enumerate every configuration of the dependence
/// region, weight it by the measure, and push it through the automaton.
///
/// The work is split into [`block_count`](Self::block_count) blocks by the
/// letters of the first few region sites; [`merge`](Self::merge) combines
/// block results in block order.
#[derive(Debug, Clone)]
pub struct BruteForce {
    window: Vec<ShiftVector>,
    modulus: Modulus,
    choices: Vec<Vec<u32>>,
    weights: SiteWeights,
    stages: Vec<Stage>,
    block_depth: usize,
    normalize: bool,
}

const BLOCK_TARGET: usize = 64;

impl BruteForce {
    pub fn new(
        automaton: &Automaton,
        n: u64,
        measure: &Measure,
        window: &[ShiftVector],
        limits: &Limits,
    ) -> Result<Self> {
        check_measure(automaton, measure)?;
        validate_window(window, automaton.dim())?;
        let modulus = automaton.modulus();
        let size = window_order(modulus, window.len());
        if size > limits.max_window {
            return Err(Error::WindowLimit {
                size,
                limit: limits.max_window,
            });
        }

        // sites each level depends on, from the window outwards
        let linear = automaton.linear();
        let (levels, powers): (Vec<Vec<ShiftVector>>, Vec<(LcaPolynomial, u32)>) = match automaton {
            Automaton::Linear(f) => {
                let power = f.power(n)?;
                let offsets: Vec<ShiftVector> = power.terms().iter().map(|(u, _)| u.clone()).collect();
                let outer = dilate(window, &offsets)?;
                (vec![window.to_vec(), outer], vec![(power, 0)])
            }
            Automaton::Affine(g) => {
                let offsets: Vec<ShiftVector> = linear.terms().iter().map(|(u, _)| u.clone()).collect();
                let mut levels = vec![window.to_vec()];
                for _ in 0..n {
                    let next = dilate(levels.last().unwrap(), &offsets)?;
                    levels.push(next);
                }
                if n == 0 {
                    levels.push(window.to_vec());
                    (levels, vec![(LcaPolynomial::identity(modulus, linear.dim())?, 0)])
                } else {
                    let stages = (0..n).map(|_| (linear.clone(), g.constant())).collect();
                    (levels, stages)
                }
            }
        };
        let dependence = levels.last().unwrap();

        let (region, weights, fixed, normalize) = region_and_weights(measure, dependence)?;
        let positions: BTreeMap<&ShiftVector, usize> = region.iter().enumerate().map(|(i, s)| (s, i)).collect();

        // stages run from the outermost level inwards
        let mut stages = Vec::with_capacity(powers.len());
        let depth = levels.len() - 1;
        for (step, (poly, constant)) in powers.iter().enumerate() {
            let outputs = &levels[depth - step - 1];
            let inputs: BTreeMap<&ShiftVector, usize> = if step == 0 {
                positions.clone()
            } else {
                levels[depth - step].iter().enumerate().map(|(i, s)| (s, i)).collect()
            };
            let mut rows = Vec::with_capacity(outputs.len());
            for k in outputs {
                let mut row = Vec::with_capacity(poly.len());
                for (u, f) in poly.terms() {
                    let site = k.checked_add(u)?;
                    let idx = *inputs.get(&site).ok_or(Error::MissingSite(site.clone()))?;
                    row.push((idx, *f));
                }
                rows.push(row);
            }
            stages.push(Stage {
                rows,
                constant: *constant,
            });
        }

        let m = modulus.get();
        let choices: Vec<Vec<u32>> = (0..region.len())
            .map(|i| match fixed.get(&i) {
                Some(&a) => vec![a],
                None => (0..m).collect(),
            })
            .collect();
        let total = choices
            .iter()
            .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
            .unwrap_or(u128::MAX);
        if total > limits.max_enum {
            return Err(Error::EnumerationLimit {
                size: total,
                limit: limits.max_enum,
            });
        }
        let mut block_depth = 0;
        let mut blocks = 1usize;
        while block_depth < choices.len() && blocks * choices[block_depth].len() <= BLOCK_TARGET {
            blocks *= choices[block_depth].len();
            block_depth += 1;
        }
        Ok(Self {
            window: window.to_vec(),
            modulus,
            choices,
            weights,
            stages,
            block_depth,
            normalize,
        })
    }

    /// Number of sites enumerated.
    pub fn region_len(&self) -> usize {
        self.choices.len()
    }

    pub fn block_count(&self) -> usize {
        self.choices[..self.block_depth].iter().map(Vec::len).product()
    }

    /// Unnormalised mass of every window word over the configurations in one
    /// block.
    pub fn run_block(&self, block: usize) -> Vec<f64> {
        let words = window_order(self.modulus, self.window.len()) as usize;
        let mut acc: Vec<NeumaierSum> = vec![NeumaierSum::new(); words];
        let mut letters = vec![0u32; self.choices.len()];
        let mut rest = block;
        for d in 0..self.block_depth {
            let c = &self.choices[d];
            letters[d] = c[rest % c.len()];
            rest /= c.len();
        }
        let mut prefix = 1.0;
        for d in 0..self.block_depth {
            prefix *= self.site_weight(d, &letters);
            if prefix == 0.0 {
                return acc.iter().map(NeumaierSum::value).collect();
            }
        }
        let mut buffers: Vec<Vec<u32>> = self.stages.iter().map(|s| vec![0; s.rows.len()]).collect();
        self.descend(self.block_depth, prefix, &mut letters, &mut buffers, &mut acc);
        acc.iter().map(NeumaierSum::value).collect()
    }

    fn descend(
        &self,
        depth: usize,
        weight: f64,
        letters: &mut [u32],
        buffers: &mut [Vec<u32>],
        acc: &mut [NeumaierSum],
    ) {
        if depth == letters.len() {
            let word = self.image(letters, buffers);
            acc[word].add(weight);
            return;
        }
        for &a in &self.choices[depth] {
            letters[depth] = a;
            let w = weight * self.site_weight(depth, letters);
            if w != 0.0 {
                self.descend(depth + 1, w, letters, buffers, acc);
            }
        }
    }

    fn site_weight(&self, depth: usize, letters: &[u32]) -> f64 {
        let m = self.modulus.get();
        match &self.weights {
            SiteWeights::Product(beta) => beta[letters[depth] as usize],
            SiteWeights::Chain { order, initial, table } => {
                let order = *order;
                if depth + 1 < order {
                    1.0
                } else if depth + 1 == order {
                    initial[word_index(&letters[..order], m)]
                } else {
                    let history = word_index(&letters[depth - order..depth], m);
                    table[history * m as usize + letters[depth] as usize]
                }
            }
        }
    }

    fn image(&self, letters: &[u32], buffers: &mut [Vec<u32>]) -> usize {
        let m = self.modulus;
        for (i, stage) in self.stages.iter().enumerate() {
            let (before, after) = buffers.split_at_mut(i);
            let input: &[u32] = if i == 0 { letters } else { &before[i - 1] };
            for (out, row) in after[0].iter_mut().zip(&stage.rows) {
                let mut v = stage.constant;
                for &(idx, f) in row {
                    v = m.add(v, m.mul(f, input[idx]));
                }
                *out = v;
            }
        }
        word_index(buffers.last().unwrap(), m.get())
    }

    /// Sums block results in block order and builds the distribution.
    pub fn merge(&self, blocks: &[Vec<f64>]) -> Result<CylinderDistribution> {
        let words = window_order(self.modulus, self.window.len()) as usize;
        let mut acc: Vec<NeumaierSum> = vec![NeumaierSum::new(); words];
        for block in blocks {
            for (a, v) in acc.iter_mut().zip(block) {
                a.add(*v);
            }
        }
        let mut probabilities: Vec<f64> = acc.iter().map(NeumaierSum::value).collect();
        if self.normalize {
            let total = crate::numeric::sum(&probabilities);
            if total <= 0.0 {
                return Err(Error::ZeroProbabilityWord);
            }
            for p in &mut probabilities {
                *p /= total;
            }
        }
        CylinderDistribution::new(
            self.window.clone(),
            self.modulus,
            probabilities,
            DistributionMethod::BruteForce,
        )
    }

    pub fn run(&self) -> Result<CylinderDistribution> {
        let blocks: Vec<Vec<f64>> = (0..self.block_count()).map(|b| self.run_block(b)).collect();
        self.merge(&blocks)
    }
}

type Region = (Vec<ShiftVector>, SiteWeights, BTreeMap<usize, u32>, bool);

fn region_and_weights(measure: &Measure, dependence: &[ShiftVector]) -> Result<Region> {
    let contiguous = |lo: i64, hi: i64| -> Vec<ShiftVector> { (lo..=hi).map(ShiftVector::d1).collect() };
    let hull = |extra: Option<(i64, i64)>| -> (i64, i64) {
        let mut lo = dependence.iter().map(|s| s.coords()[0]).min().unwrap();
        let mut hi = dependence.iter().map(|s| s.coords()[0]).max().unwrap();
        if let Some((a, b)) = extra {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    };
    match measure {
        Measure::Bernoulli(beta) => Ok((
            dependence.to_vec(),
            SiteWeights::Product(beta.weights().to_vec()),
            BTreeMap::new(),
            false,
        )),
        Measure::Markov(spec) => {
            let (lo, hi) = hull(None);
            Ok((
                contiguous(lo, hi),
                SiteWeights::Chain {
                    order: 1,
                    initial: spec.stationary().to_vec(),
                    table: spec.transition().entries().to_vec(),
                },
                BTreeMap::new(),
                false,
            ))
        }
        Measure::ConditionedMarkov(c) => {
            let spec = c.spec();
            let weights = SiteWeights::Chain {
                order: 1,
                initial: spec.stationary().to_vec(),
                table: spec.transition().entries().to_vec(),
            };
            if c.word().is_empty() {
                let (lo, hi) = hull(None);
                return Ok((contiguous(lo, hi), weights, BTreeMap::new(), false));
            }
            let start = c.window_start();
            let end = start + c.word().len() as i64 - 1;
            let (lo, hi) = hull(Some((start, end)));
            let fixed = c
                .word()
                .iter()
                .enumerate()
                .map(|(i, &a)| ((start - lo) as usize + i, a))
                .collect();
            Ok((contiguous(lo, hi), weights, fixed, true))
        }
        Measure::NStep(spec) => {
            let (lo, mut hi) = hull(None);
            let order = spec.order();
            if ((hi - lo + 1) as usize) < order {
                hi = lo + order as i64 - 1;
            }
            Ok((
                contiguous(lo, hi),
                SiteWeights::Chain {
                    order,
                    initial: spec.block_stationary().to_vec(),
                    table: spec.table().to_vec(),
                },
                BTreeMap::new(),
                false,
            ))
        }
    }
}

/// Cylinder law of `G^n mu` on `window` by enumeration.
pub fn cylinder_distribution_bruteforce(
    automaton: &Automaton,
    n: u64,
    measure: &Measure,
    window: &[ShiftVector],
    limits: &Limits,
) -> Result<CylinderDistribution> {
    BruteForce::new(automaton, n, measure, window, limits)?.run()
}

/// `(1/2) sum_b |P[b] - m^(-|W|)|`.
pub fn tv_to_haar(dist: &CylinderDistribution) -> f64 {
    let uniform = 1.0 / dist.probabilities.len() as f64;
    let acc: NeumaierSum = dist.probabilities.iter().map(|p| libm::fabs(p - uniform)).collect();
    0.5 * acc.value()
}

/// `(1/2) sum_b |P[b] - P'[b]|` for two laws on the same window.
pub fn tv_distance(a: &CylinderDistribution, b: &CylinderDistribution) -> Result<f64> {
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch {
            expected: a.modulus.get(),
            found: b.modulus.get(),
        });
    }
    if a.window != b.window {
        return Err(Error::WindowMismatch {
            expected: a.window.len(),
            found: b.window.len(),
        });
    }
    let acc: NeumaierSum = a
        .probabilities
        .iter()
        .zip(&b.probabilities)
        .map(|(x, y)| libm::fabs(x - y))
        .collect();
    Ok(0.5 * acc.value())
}

/// Law of `X + h` when `X` has law `dist`: `P'[b] = P[b - h]`.
pub fn translate_distribution(dist: &CylinderDistribution, shift: &[u32]) -> Result<CylinderDistribution> {
    if shift.len() != dist.window.len() {
        return Err(Error::WindowMismatch {
            expected: dist.window.len(),
            found: shift.len(),
        });
    }
    let m = dist.modulus;
    let mut probabilities = vec![0.0; dist.probabilities.len()];
    for (i, p) in dist.probabilities.iter().enumerate() {
        let word: Vec<u32> = dist.word(i).iter().zip(shift).map(|(a, h)| m.add(*a, m.reduce(*h as i64))).collect();
        probabilities[word_index(&word, m.get())] = *p;
    }
    Ok(CylinderDistribution {
        window: dist.window.clone(),
        modulus: m,
        probabilities,
        method: DistributionMethod::Translated,
    })
}

// ---------------------------------------------------------------------------
// Gap diagnostics

/// Coordinate used to project a nested form to one dimension: the first axis
/// on which some step is nonzero.
pub fn default_gap_coordinate(nf: &NestedForm) -> usize {
    (0..nf.dim())
        .find(|&axis| nf.factors().iter().any(|f| f.step.coords()[axis] != 0))
        .unwrap_or(0)
}

/// Projected steps `m_j` of a nested form along `coordinate`.
pub fn projected_steps(nf: &NestedForm, coordinate: Option<usize>) -> Result<Vec<u64>> {
    if nf.factors().is_empty() {
        return Err(Error::MonomialAutomaton);
    }
    let axis = coordinate.unwrap_or_else(|| default_gap_coordinate(nf));
    if axis >= nf.dim() {
        return Err(Error::DimensionMismatch {
            expected: nf.dim(),
            found: axis + 1,
        });
    }
    nf.factors()
        .iter()
        .enumerate()
        .map(|(index, f)| {
            let value = f.step.coords()[axis];
            if value <= 0 {
                Err(Error::NonpositiveStep { index, value })
            } else {
                Ok(value as u64)
            }
        })
        .collect()
}

/// `G = max(union of S(m_j)) + ceil(log_p(sum_j |S(m_j)|) + log_p(J)) + 2`,
/// where `S(m)` is the set of nonzero digit positions of `m` in base `p`.
pub fn gamma_constant(nf: &NestedForm, coordinate: Option<usize>) -> Result<u32> {
    let p = nf.modulus().require_prime()? as u64;
    let steps = projected_steps(nf, coordinate)?;
    let mut top = 0usize;
    let mut count = 0u128;
    for &step in &steps {
        let digits = index_set(step, p)?;
        top = top.max(*digits.last().unwrap_or(&0));
        count += digits.len() as u128;
    }
    Ok(top as u32 + ceil_log(count * steps.len() as u128, p) + 2)
}

/// `0^G 1`.
pub fn gap_word(gamma: u32) -> Vec<u32> {
    let mut w = vec![0; gamma as usize];
    w.push(1);
    w
}

/// Start positions of the (possibly overlapping) occurrences of `w` in `s`.
pub fn occurrences(w: &[u32], s: &[u32]) -> Vec<usize> {
    if w.is_empty() || w.len() > s.len() {
        return Vec::new();
    }
    s.windows(w.len())
        .enumerate()
        .filter(|(_, x)| *x == w)
        .map(|(i, _)| i)
        .collect()
}

/// `#occurrences(w, s) / |s|`.
pub fn word_frequency(w: &[u32], s: &[u32]) -> Result<f64> {
    if s.is_empty() || w.is_empty() {
        return Err(Error::EmptyString);
    }
    Ok(occurrences(w, s).len() as f64 / s.len() as f64)
}

/// Occurrences of `0^G 1` in the base-`p` digits of `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub n: u64,
    pub gamma: u32,
    pub word: Vec<u32>,
    /// Digits of `N`, least significant first, without leading zeros.
    pub digits: Vec<u32>,
    pub positions: Vec<usize>,
    /// `positions.len() / digits.len()`, or 0 for `N = 0`.
    pub frequency: f64,
}

pub fn gap_scan(n: u64, p: u64, gamma: u32) -> Result<GapReport> {
    let digits = p_ary_expansion(n, p)?.digits().to_vec();
    let word = gap_word(gamma);
    let positions = occurrences(&word, &digits);
    let frequency = if digits.is_empty() {
        0.0
    } else {
        positions.len() as f64 / digits.len() as f64
    };
    Ok(GapReport {
        n,
        gamma,
        word,
        digits,
        positions,
        frequency,
    })
}

/// Mean of the gap frequency over `N` in `lo .. hi`.
pub fn mean_gap_frequency(lo: u64, hi: u64, p: u64, gamma: u32) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let mut acc = NeumaierSum::new();
    for n in lo..hi {
        acc.add(gap_scan(n, p, gamma)?.frequency);
    }
    Ok(acc.value() / (hi - lo) as f64)
}

/// `p^(-G-1)`, the frequency of `0^G 1` in a Haar-random digit string.
pub fn haar_word_frequency(p: u64, gamma: u32) -> f64 {
    libm::pow(p as f64, -(gamma as f64) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lca::AffineCa;
    use crate::measures::{BernoulliSpec, MarkovSpec};

    fn z(m: u32) -> Modulus {
        Modulus::new(m).unwrap()
    }

    fn lind(m: u32) -> LcaPolynomial {
        LcaPolynomial::from_1d(z(m), &[(-1, 1), (1, 1)]).unwrap()
    }

    fn sites(xs: &[i64]) -> Vec<ShiftVector> {
        xs.iter().map(|&x| ShiftVector::d1(x)).collect()
    }

    #[test]
    fn rank_trace_examples() {
        let limits = Limits::default();
        let f = LcaPolynomial::from_1d(z(2), &[(0, 1), (1, 1)]).unwrap();
        let trivial = CharacterSystem::trivial(z(2), 1).unwrap();
        assert!(rank_trace(&trivial, &f, 20, &limits).unwrap().ranks().iter().all(|&r| r == 0));

        let chi = CharacterSystem::from_1d(z(2), &[(0, 1)]).unwrap();
        let trace = rank_trace(&chi, &f, 300, &limits).unwrap();
        assert_eq!(trace.ranks().len(), 301);
        for (n, r) in trace.entries() {
            assert_eq!(r, 1usize << n.count_ones());
        }
        for k in 0..8 {
            assert_eq!(trace.rank(1 << k), trace.rank(1));
        }
        assert_eq!(density_above(&trace, -1), 1.0);
        assert_eq!(density_above(&trace, trace.max_rank() as i64), 0.0);

        let seg: Vec<usize> = [0..100u64, 100..200, 200..301]
            .into_iter()
            .flat_map(|r| rank_trace_segment(&chi, &f, r.start, r.end, &limits).unwrap())
            .collect();
        assert_eq!(seg, trace.ranks());
    }

    #[test]
    fn support_guard() {
        let f = LcaPolynomial::from_1d(z(2), &[(0, 1), (1, 1)]).unwrap();
        let chi = CharacterSystem::from_1d(z(2), &[(0, 1)]).unwrap();
        let limits = Limits {
            max_support: 8,
            ..Limits::default()
        };
        assert!(matches!(
            rank_trace(&chi, &f, 64, &limits),
            Err(Error::SupportLimit { .. })
        ));
    }

    #[test]
    fn decay_examples() {
        let limits = Limits::default();
        let chi = CharacterSystem::from_1d(z(2), &[(0, 1)]).unwrap();
        let auto = Automaton::from(lind(2));
        let uniform = Measure::Bernoulli(BernoulliSpec::uniform(z(2)));
        let trace = fourier_decay(&chi, &auto, &uniform, 40, &limits).unwrap();
        assert!(trace.coefficients()[1..].iter().all(|c| c.norm() < 1e-12));

        let beta = Measure::Bernoulli(BernoulliSpec::new(z(2), vec![0.9, 0.1]).unwrap());
        let trace = fourier_decay(&chi, &auto, &beta, 64, &limits).unwrap();
        for k in 0..7 {
            assert!((trace.magnitude(1 << k).unwrap() - 0.64).abs() < 1e-12);
        }
        assert!((trace.magnitude(31).unwrap() - 0.8f64.powi(32)).abs() < 1e-15);

        let affine = Automaton::from(AffineCa::new(lind(2), 1));
        let shifted = fourier_decay(&chi, &affine, &beta, 64, &limits).unwrap();
        for n in 0..=64 {
            assert!((shifted.magnitude(n).unwrap() - trace.magnitude(n).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn cesaro_examples() {
        let zeros = DecayTrace::from_coefficients(vec![Complex64::new(0.0, 0.0); 10]);
        assert_eq!(cesaro_average(&zeros, 9), 0.0);
        let ones = DecayTrace::from_coefficients(
            (0..10).map(|n| Complex64::from_polar(1.0, n as f64)).collect(),
        );
        assert!((cesaro_average(&ones, 9) - 1.0).abs() < 1e-15);
        assert_eq!(ones.fraction_below(0.5), 0.0);
        assert_eq!(zeros.fraction_below(0.5), 1.0);
    }

    #[test]
    fn cylinder_examples() {
        let limits = Limits::default();
        let beta = Measure::Bernoulli(BernoulliSpec::new(z(2), vec![0.9, 0.1]).unwrap());
        let auto = Automaton::from(lind(2));
        let w0 = sites(&[0]);
        let inv = cylinder_distribution(&auto, 1, &beta, &w0, &limits).unwrap();
        assert!((inv.probability(&[1]) - 0.18).abs() < 1e-12);
        assert!((tv_to_haar(&inv) - 0.32).abs() < 1e-12);
        let brute = cylinder_distribution_bruteforce(&auto, 1, &beta, &w0, &limits).unwrap();
        assert!((brute.probability(&[1]) - 0.18).abs() < 1e-12);

        let uniform = Measure::Bernoulli(BernoulliSpec::uniform(z(3)));
        let w = sites(&[0, 1, 3]);
        let d = cylinder_distribution(&Automaton::from(lind(3)), 4, &uniform, &w, &limits).unwrap();
        assert!(d.probabilities().iter().all(|p| (p - 1.0 / 27.0).abs() < 1e-12));
        assert!(tv_to_haar(&d) < 1e-12);

        let b3 = BernoulliSpec::new(z(3), vec![0.5, 0.3, 0.2]).unwrap();
        let d = cylinder_distribution(&Automaton::from(lind(3)), 0, &Measure::Bernoulli(b3.clone()), &sites(&[0, 2]), &limits)
            .unwrap();
        for (word, p) in d.entries() {
            let expected = b3.weights()[word[0] as usize] * b3.weights()[word[1] as usize];
            assert!((p - expected).abs() < 1e-12);
        }

        let point = Measure::Bernoulli(BernoulliSpec::point_mass(z(2), 1));
        let d = cylinder_distribution_bruteforce(&auto, 3, &point, &sites(&[0, 1]), &limits).unwrap();
        // every neighbour sum of the all-ones configuration is 0
        assert_eq!(d.probability(&[0, 0]), 1.0);
    }

    #[test]
    fn inversion_matches_bruteforce_markov() {
        let limits = Limits::default();
        let spec = MarkovSpec::from_rows(z(2), &[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let mu = Measure::Markov(spec);
        for f in [lind(2), LcaPolynomial::from_1d(z(2), &[(0, 1), (1, 1)]).unwrap()] {
            let auto = Automaton::from(f);
            for n in 0..=4 {
                let w = sites(&[0, 1, 2]);
                let a = cylinder_distribution(&auto, n, &mu, &w, &limits).unwrap();
                let b = cylinder_distribution_bruteforce(&auto, n, &mu, &w, &limits).unwrap();
                assert!(tv_distance(&a, &b).unwrap() < 1e-12, "n = {n}");
            }
        }
    }

    #[test]
    fn limits_are_enforced() {
        let limits = Limits::default();
        let beta = Measure::Bernoulli(BernoulliSpec::uniform(z(2)));
        let auto = Automaton::from(lind(2));
        let w: Vec<ShiftVector> = (0..13).map(ShiftVector::d1).collect();
        assert!(matches!(
            cylinder_distribution(&auto, 1, &beta, &w, &limits),
            Err(Error::WindowLimit { .. })
        ));
        let tight = Limits {
            max_enum: 8,
            ..limits
        };
        assert!(matches!(
            cylinder_distribution_bruteforce(&auto, 4, &beta, &sites(&[0, 1]), &tight),
            Err(Error::EnumerationLimit { .. })
        ));
        assert_eq!(
            cylinder_distribution(&auto, 1, &beta, &[], &limits),
            Err(Error::EmptyWindow)
        );
    }

    #[test]
    fn translation_examples() {
        let limits = Limits::default();
        let beta = Measure::Bernoulli(BernoulliSpec::new(z(2), vec![0.7, 0.3]).unwrap());
        let w = sites(&[0, 1]);
        let d = cylinder_distribution(&Automaton::from(lind(2)), 1, &beta, &w, &limits).unwrap();
        assert_eq!(translate_distribution(&d, &[0, 0]).unwrap().probabilities(), d.probabilities());
        let twice = translate_distribution(&translate_distribution(&d, &[1, 0]).unwrap(), &[1, 0]).unwrap();
        assert_eq!(twice.probabilities(), d.probabilities());
        assert!(translate_distribution(&d, &[1]).is_err());

        let g = Automaton::from(AffineCa::new(lind(2), 1));
        let lhs = cylinder_distribution_bruteforce(&g, 1, &beta, &w, &limits).unwrap();
        let rhs = translate_distribution(&d, &[1, 1]).unwrap();
        assert!(tv_distance(&lhs, &rhs).unwrap() < 1e-12);
    }

    #[test]
    fn gamma_examples() {
        let f = LcaPolynomial::from_1d(z(2), &[(0, 1), (1, 1)]).unwrap();
        assert_eq!(gamma_constant(&f.to_nested_form().unwrap(), None).unwrap(), 2);
        let f = LcaPolynomial::from_1d(z(2), &[(0, 1), (2, 1)]).unwrap();
        assert_eq!(gamma_constant(&f.to_nested_form().unwrap(), None).unwrap(), 3);
        let f = LcaPolynomial::from_1d(z(2), &[(0, 1), (1, 1), (2, 1)]).unwrap();
        assert_eq!(gamma_constant(&f.to_nested_form().unwrap(), None).unwrap(), 4);
        let shift = LcaPolynomial::from_1d(z(2), &[(3, 1)]).unwrap();
        assert_eq!(
            gamma_constant(&shift.to_nested_form().unwrap(), None),
            Err(Error::MonomialAutomaton)
        );
    }

    #[test]
    fn word_frequency_examples() {
        assert_eq!(word_frequency(&[0, 1, 1], &[0, 1, 1]).unwrap(), 1.0 / 3.0);
        assert_eq!(word_frequency(&[0, 0, 1], &[0, 0, 1, 0, 0, 1, 0]).unwrap(), 2.0 / 7.0);
        assert_eq!(word_frequency(&[1, 1], &[0, 0, 0]).unwrap(), 0.0);
        assert_eq!(word_frequency(&[1], &[]), Err(Error::EmptyString));
    }

    #[test]
    fn gap_scan_examples() {
        let r = gap_scan(4, 2, 2).unwrap();
        assert_eq!(r.positions, vec![0]);
        let r = gap_scan(0, 2, 2).unwrap();
        assert!(r.positions.is_empty());
        assert_eq!(r.frequency, 0.0);
        let r = gap_scan(9, 3, 2).unwrap();
        assert_eq!(r.positions, vec![0]);
        assert_eq!(haar_word_frequency(2, 2), 0.125);
    }
}
