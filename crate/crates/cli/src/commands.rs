//! Subcommand bodies.
//!
//! Tables go to `--out` (or standard output); summary lines go to standard
//! output when a file is written and to standard error otherwise, so a piped
//! table stays clean. Work is cut into pieces whose boundaries depend only on
//! the problem size, and pieces are merged in order, so the output does not
//! depend on `--jobs`.

use lca_haar_core::analysis::{
    cylinder_distribution, fourier_decay_segment, gamma_constant, gap_scan, haar_word_frequency,
    rank_trace_segment, translate_distribution, tv_distance, tv_to_haar, BruteForce, CylinderDistribution,
    DecayTrace, InversionPlan, RankTrace,
};
use lca_haar_core::lca::Automaton;
use lca_haar_core::measures::{bernoulli_certificate, markov_certificate, Measure};
use lca_haar_core::numeric::NeumaierSum;
use lca_haar_core::Error as CoreError;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::format::{format_terms, format_word};
use crate::output::{sibling_path, Cell, Table};

/// Steps of `n` per parallel piece of a trace.
pub const TRACE_SEGMENT: u64 = 256;
/// Values of `N` per parallel piece of a gap scan.
pub const GAP_SEGMENT: u64 = 4096;
/// Largest disagreement tolerated between inversion and enumeration.
pub const DISCREPANCY_LIMIT: f64 = 1e-6;

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))
}

/// `[lo, hi)` cut into consecutive pieces of length `step`.
pub fn pieces(lo: u64, hi: u64, step: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut a = lo;
    while a < hi {
        let b = (a + step).min(hi);
        out.push((a, b));
        a = b;
    }
    out
}

struct Summary {
    to_stdout: bool,
}

impl Summary {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            to_stdout: cfg.out.is_some(),
        }
    }

    fn line(&self, text: impl AsRef<str>) {
        if self.to_stdout {
            println!("{}", text.as_ref());
        } else {
            eprintln!("{}", text.as_ref());
        }
    }
}

fn warn_if_trivial(automaton: &Automaton) {
    if automaton.linear().len() <= 1 {
        eprintln!(
            "warning: trivial LCA: `{}` is a single term (a shift or the identity, possibly scaled) and cannot diffuse",
            format_terms(automaton.linear().terms())
        );
    }
}

pub fn rank_trace(cfg: &RunConfig) -> CliResult<()> {
    let automaton = cfg.require_automaton()?;
    let chi = cfg.require_character()?;
    if chi.is_trivial() {
        return Err(CliError::config(
            "character is trivial; rank traces are defined for nontrivial characters",
        ));
    }
    warn_if_trivial(automaton);
    let f = automaton.linear();
    let ranges = pieces(0, cfg.horizon + 1, TRACE_SEGMENT);
    let parts = pool(cfg.jobs)?.install(|| {
        ranges
            .par_iter()
            .map(|&(a, b)| rank_trace_segment(chi, f, a, b, &cfg.limits))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let trace = RankTrace::from_segments(chi.clone(), f.clone(), parts);

    let mut table = Table::new(&["n", "rank"]);
    for (n, r) in trace.entries() {
        table.push(vec![Cell::from(n), Cell::from(r)]);
    }
    table.emit(cfg.format, cfg.out.as_deref())?;

    let s = Summary::new(cfg);
    s.line(format!("horizon: {}", trace.horizon()));
    s.line(format!("max rank: {}", trace.max_rank()));
    s.line(format!(
        "density above R={}: {:?}",
        cfg.threshold_r,
        lca_haar_core::analysis::density_above(&trace, cfg.threshold_r)
    ));
    Ok(())
}

pub fn decay(cfg: &RunConfig) -> CliResult<()> {
    let automaton = cfg.require_automaton()?;
    let chi = cfg.require_character()?;
    let measure = cfg.require_measure()?;
    warn_if_trivial(automaton);
    let ranges = pieces(0, cfg.horizon + 1, TRACE_SEGMENT);
    let parts = pool(cfg.jobs)?.install(|| {
        ranges
            .par_iter()
            .map(|&(a, b)| fourier_decay_segment(chi, automaton, measure, a, b, &cfg.limits))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let trace = DecayTrace::from_coefficients(parts.into_iter().flatten().collect());

    let mut table = Table::new(&["n", "re", "im", "abs", "cesaro"]);
    for (n, c) in trace.coefficients().iter().enumerate() {
        table.push(vec![
            Cell::from(n as u64),
            Cell::from(c.re),
            Cell::from(c.im),
            Cell::from(c.norm()),
            Cell::from(trace.cesaro()[n]),
        ]);
    }
    table.emit(cfg.format, cfg.out.as_deref())?;

    let s = Summary::new(cfg);
    s.line(format!("horizon: {}", trace.horizon()));
    s.line(format!(
        "cesaro average: {:?}",
        lca_haar_core::analysis::cesaro_average(&trace, trace.horizon())
    ));
    s.line(format!(
        "fraction below epsilon={:?}: {:?}",
        cfg.epsilon,
        trace.fraction_below(cfg.epsilon)
    ));
    Ok(())
}

fn distribution_table(dist: &CylinderDistribution) -> Table {
    let m = dist.modulus().get();
    let mut table = Table::new(&["word", "probability"]);
    for (word, p) in dist.entries() {
        table.push(vec![Cell::from(format_word(&word, m)), Cell::from(p)]);
    }
    table
}

fn inversion(cfg: &RunConfig, automaton: &Automaton, measure: &Measure, pool: &rayon::ThreadPool) -> CliResult<CylinderDistribution> {
    let window = cfg.require_window()?;
    let plan = InversionPlan::new(automaton, cfg.n, window, &cfg.limits)?;
    let coefficients = pool.install(|| {
        (0..plan.len())
            .into_par_iter()
            .map(|i| plan.coefficient(i, measure))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(plan.assemble(&coefficients)?)
}

pub fn cylinder(cfg: &RunConfig) -> CliResult<()> {
    let automaton = cfg.require_automaton()?;
    let measure = cfg.require_measure()?;
    let window = cfg.require_window()?;
    if automaton.modulus() != measure.modulus() {
        return Err(CliError::config("automaton and measure use different moduli"));
    }
    let workers = pool(cfg.jobs)?;
    let inverted = inversion(cfg, automaton, measure, &workers)?;
    distribution_table(&inverted).emit(cfg.format, cfg.out.as_deref())?;

    let s = Summary::new(cfg);
    s.line(format!("n: {}", cfg.n));
    s.line(format!("tv to haar: {:?}", tv_to_haar(&inverted)));

    let mut failure = None;
    match BruteForce::new(automaton, cfg.n, measure, window, &cfg.limits) {
        Ok(brute) => {
            let blocks: Vec<Vec<f64>> =
                workers.install(|| (0..brute.block_count()).into_par_iter().map(|b| brute.run_block(b)).collect());
            let enumerated = brute.merge(&blocks)?;
            if let Some(out) = &cfg.out {
                distribution_table(&enumerated).emit(cfg.format, Some(&sibling_path(out, "bruteforce")))?;
            }
            let gap = tv_distance(&inverted, &enumerated)?;
            s.line(format!("bruteforce: computed over {} sites", brute.region_len()));
            s.line(format!("discrepancy tv: {gap:?}"));
            if gap > DISCREPANCY_LIMIT {
                failure = Some(format!("inversion and enumeration differ by {gap:e} in total variation"));
            }
        }
        Err(CoreError::EnumerationLimit { size, limit }) => {
            s.line(format!(
                "bruteforce: skipped (enumeration of {size} configurations exceeds the limit {limit})"
            ));
        }
        Err(e) => return Err(e.into()),
    }

    if let Automaton::Affine(g) = automaton {
        let linear = Automaton::from(g.linear().clone());
        let base = cylinder_distribution(&linear, cfg.n, measure, window, &cfg.limits)?;
        let h = g.affine_drift(cfg.n);
        let shifted = translate_distribution(&base, &vec![h; window.len()])?;
        let gap = tv_distance(&inverted, &shifted)?;
        s.line(format!("affine drift h_n: {h}"));
        s.line(format!("affine translation tv: {gap:?}"));
        if gap > DISCREPANCY_LIMIT && failure.is_none() {
            failure = Some(format!("affine law differs from the translated linear law by {gap:e}"));
        }
    }
    match failure {
        Some(msg) => Err(CliError::SelfCheck(msg)),
        None => Ok(()),
    }
}

pub fn certify(cfg: &RunConfig) -> CliResult<()> {
    let measure = cfg.require_measure()?;
    println!("measure: {}", measure.kind_name());
    match measure {
        Measure::Bernoulli(beta) => {
            let cert = bernoulli_certificate(beta);
            println!("kind: {}", cert.kind);
            println!("base: {:?}", cert.base);
            println!("rule: {}", cert.rule());
            let prime = beta.modulus().is_prime();
            let spread = beta.weights().iter().all(|&w| w < 1.0);
            let verdict = if cert.hypotheses_hold { "PASS" } else { "FAIL" };
            let mut reasons = Vec::new();
            if !prime {
                reasons.push(format!("modulus {} is not prime", beta.modulus().get()));
            }
            if !spread {
                reasons.push("law is a point mass".to_string());
            }
            if reasons.is_empty() {
                reasons.push(format!("prime modulus {}, law not a point mass", beta.modulus().get()));
            }
            println!("hypotheses: {verdict} ({})", reasons.join("; "));
            println!("mixing: {}", if cert.is_mixing() { "PASS" } else { "FAIL" });
        }
        Measure::Markov(spec) => {
            println!("kind: markov-C");
            match markov_certificate(spec.transition(), spec.modulus()) {
                Ok(cert) => {
                    println!("base: {:?}", cert.base);
                    println!("rule: {}", cert.rule());
                    println!("hypotheses: PASS (all transition entries positive)");
                    println!("mixing: {}", if cert.is_mixing() { "PASS" } else { "FAIL" });
                }
                Err(CoreError::HypothesisViolation { row, col }) => {
                    println!("base: n/a");
                    println!("hypotheses: FAIL (transition entry q[{row}][{col}] is zero)");
                    println!("mixing: FAIL (no certificate)");
                }
                Err(e) => return Err(e.into()),
            }
        }
        other => {
            return Err(CliError::config(format!(
                "certificates cover bernoulli and markov measures, not {}",
                other.kind_name()
            )))
        }
    }
    Ok(())
}

pub fn gap_scan_cmd(cfg: &RunConfig) -> CliResult<()> {
    let automaton = cfg.require_automaton()?;
    warn_if_trivial(automaton);
    let nf = automaton.linear().to_nested_form()?;
    let gamma = gamma_constant(&nf, cfg.gap_coordinate)?;
    let p = cfg.modulus.get() as u64;
    let (lo, hi) = cfg.gap_range;
    let ranges = pieces(lo, hi, GAP_SEGMENT);
    let parts = pool(cfg.jobs)?.install(|| {
        ranges
            .par_iter()
            .map(|&(a, b)| {
                let mut rows = Vec::new();
                let mut acc = NeumaierSum::new();
                for n in a..b {
                    let report = gap_scan(n, p, gamma)?;
                    acc.add(report.frequency);
                    rows.extend(report.positions.iter().map(|&pos| (n, pos)));
                }
                Ok((rows, acc))
            })
            .collect::<Result<Vec<_>, CoreError>>()
    })?;

    let mut table = Table::new(&["n", "position"]);
    let mut total = NeumaierSum::new();
    for (rows, acc) in &parts {
        total.merge(acc);
        for &(n, pos) in rows {
            table.push(vec![Cell::from(n), Cell::from(pos)]);
        }
    }
    table.emit(cfg.format, cfg.out.as_deref())?;

    let count = hi - lo;
    let mean = if count == 0 { 0.0 } else { total.value() / count as f64 };
    let target = haar_word_frequency(p, gamma);
    let s = Summary::new(cfg);
    s.line(format!("gamma: {gamma}"));
    s.line(format!("word: {}", format_word(&lca_haar_core::analysis::gap_word(gamma), cfg.modulus.get())));
    s.line(format!("range: [{lo}, {hi})"));
    s.line(format!("target frequency: {target:?}"));
    s.line(format!("mean frequency: {mean:?}"));
    s.line(format!("difference: {:?}", (mean - target).abs()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pieces_cover_range() {
        assert_eq!(pieces(0, 5, 2), vec![(0, 2), (2, 4), (4, 5)]);
        assert!(pieces(3, 3, 2).is_empty());
        assert_eq!(pieces(0, 513, 256).len(), 3);
    }
}
