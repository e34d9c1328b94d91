//! Run configuration: a TOML file with `[automaton]`, `[character]`,
//! `[measure]` and `[run]` sections, overridden field by field by command-line
//! flags.
//!
//! ```toml
//! [automaton]
//! modulus = 2
//! dim = 1
//! terms = "1@(-1) + 1@(1)"
//! constant = 1            # optional; makes the automaton affine
//!
//! [character]
//! terms = "1@(0)"
//!
//! [measure]
//! kind = "bernoulli"      # uniform | bernoulli | markov | conditioned-markov | nstep-markov
//! weights = [0.9, 0.1]
//!
//! [run]
//! horizon = 1024
//! epsilon = 0.01
//! ```

use std::path::{Path, PathBuf};

use lca_haar_core::algebra::Modulus;
use lca_haar_core::analysis::Limits;
use lca_haar_core::characters::CharacterSystem;
use lca_haar_core::lca::{AffineCa, Automaton, LcaPolynomial, ShiftVector};
use lca_haar_core::measures::{
    BernoulliSpec, ConditionedMarkov, MarkovSpec, Measure, NStepMarkovSpec, TransitionMatrix,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::format::{parse_terms, parse_window};

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "LCA_HAAR_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub automaton: AutomatonSection,
    #[serde(default)]
    pub character: CharacterSection,
    pub measure: Option<MeasureSection>,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonSection {
    pub modulus: Option<u32>,
    pub dim: Option<usize>,
    pub terms: Option<String>,
    pub constant: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterSection {
    pub terms: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub kind: String,
    pub weights: Option<Vec<f64>>,
    pub transition: Option<Vec<Vec<f64>>>,
    pub stationary: Option<Vec<f64>>,
    pub order: Option<usize>,
    pub table: Option<Vec<Vec<f64>>>,
    pub window_start: Option<i64>,
    pub word: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: Option<u64>,
    pub n: Option<u64>,
    pub window: Option<String>,
    pub threshold_r: Option<i64>,
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub jobs: Option<usize>,
    pub max_support: Option<usize>,
    pub max_enum: Option<u64>,
    pub max_window: Option<u64>,
    pub gap_lo: Option<u64>,
    pub gap_hi: Option<u64>,
    pub gap_coordinate: Option<usize>,
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub modulus: Option<u32>,
    pub dim: Option<usize>,
    pub automaton: Option<String>,
    pub constant: Option<i64>,
    pub character: Option<String>,
    pub horizon: Option<u64>,
    pub n: Option<u64>,
    pub window: Option<String>,
    pub threshold_r: Option<i64>,
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub jobs: Option<usize>,
    pub max_support: Option<usize>,
    pub max_enum: Option<u64>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub modulus: Modulus,
    pub dim: usize,
    pub automaton: Option<Automaton>,
    pub character: Option<CharacterSystem>,
    pub measure: Option<Measure>,
    pub horizon: u64,
    pub n: u64,
    pub window: Option<Vec<ShiftVector>>,
    pub threshold_r: i64,
    pub epsilon: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub jobs: usize,
    pub limits: Limits,
    pub gap_range: (u64, u64),
    pub gap_coordinate: Option<usize>,
}

pub const DEFAULT_HORIZON: u64 = 256;
pub const DEFAULT_THRESHOLD_R: i64 = 8;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_GAP_RANGE: (u64, u64) = (0, 1 << 16);

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The file named by `--config`, else by the environment, else nothing.
    pub fn locate(explicit: Option<&Path>) -> CliResult<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl RunConfig {
    pub fn resolve(file: FileConfig, o: &Overrides) -> CliResult<Self> {
        let m = o
            .modulus
            .or(file.automaton.modulus)
            .ok_or_else(|| CliError::config("modulus is required ([automaton] modulus or --modulus)"))?;
        let modulus = Modulus::new(m)?;
        let dim = o.dim.or(file.automaton.dim).unwrap_or(1);
        if dim == 0 {
            return Err(CliError::config("dimension must be at least 1"));
        }

        let automaton_terms = o.automaton.clone().or(file.automaton.terms);
        let constant = o.constant.or(file.automaton.constant);
        let automaton = match automaton_terms {
            Some(t) => {
                let terms = parse_terms(&t, dim)?;
                if terms.is_empty() {
                    return Err(CliError::config("automaton has no terms"));
                }
                let f = LcaPolynomial::new(modulus, dim, terms)?;
                if f.is_empty() {
                    return Err(CliError::config("automaton reduces to zero"));
                }
                Some(match constant {
                    Some(c) => Automaton::from(AffineCa::new(f, c)),
                    None => Automaton::from(f),
                })
            }
            None if constant.is_some() => {
                return Err(CliError::config("affine constant given without automaton terms"));
            }
            None => None,
        };

        let character = match o.character.clone().or(file.character.terms) {
            Some(t) => Some(CharacterSystem::new(modulus, dim, parse_terms(&t, dim)?)?),
            None => None,
        };

        let measure = match &file.measure {
            Some(section) => {
                let measure = build_measure(modulus, section)?;
                measure.check_dim(dim)?;
                Some(measure)
            }
            None => None,
        };

        let run = file.run;
        let window = match o.window.clone().or(run.window) {
            Some(w) => Some(parse_window(&w, dim)?),
            None => None,
        };
        let defaults = Limits::default();
        let limits = Limits {
            max_support: o.max_support.or(run.max_support).unwrap_or(defaults.max_support),
            max_enum: o.max_enum.or(run.max_enum).map(u128::from).unwrap_or(defaults.max_enum),
            max_window: run.max_window.map(u128::from).unwrap_or(defaults.max_window),
        };
        if let Some(w) = &window {
            let size = (m as u128).checked_pow(w.len() as u32).unwrap_or(u128::MAX);
            if size > limits.max_window {
                return Err(CliError::Resource(format!(
                    "window character group of order {size} exceeds the limit {}",
                    limits.max_window
                )));
            }
        }
        let epsilon = o.epsilon.or(run.epsilon).unwrap_or(DEFAULT_EPSILON);
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(CliError::config("epsilon must be positive"));
        }
        let jobs = o.jobs.or(run.jobs).unwrap_or_else(default_jobs);
        if jobs == 0 {
            return Err(CliError::config("jobs must be at least 1"));
        }
        let gap_range = (
            run.gap_lo.unwrap_or(DEFAULT_GAP_RANGE.0),
            run.gap_hi.unwrap_or(DEFAULT_GAP_RANGE.1),
        );
        if gap_range.1 < gap_range.0 {
            return Err(CliError::config("gap_hi must not be below gap_lo"));
        }
        Ok(Self {
            modulus,
            dim,
            automaton,
            character,
            measure,
            horizon: o.horizon.or(run.horizon).unwrap_or(DEFAULT_HORIZON),
            n: o.n.or(run.n).unwrap_or(1),
            window,
            threshold_r: o.threshold_r.or(run.threshold_r).unwrap_or(DEFAULT_THRESHOLD_R),
            epsilon,
            out: o.out.clone().or(run.out),
            format: o.format.or(run.format).unwrap_or_default(),
            jobs,
            limits,
            gap_range,
            gap_coordinate: run.gap_coordinate,
        })
    }

    pub fn require_automaton(&self) -> CliResult<&Automaton> {
        self.automaton
            .as_ref()
            .ok_or_else(|| CliError::config("automaton is required ([automaton] terms or --automaton)"))
    }

    pub fn require_character(&self) -> CliResult<&CharacterSystem> {
        self.character
            .as_ref()
            .ok_or_else(|| CliError::config("character is required ([character] terms or --character)"))
    }

    pub fn require_measure(&self) -> CliResult<&Measure> {
        self.measure
            .as_ref()
            .ok_or_else(|| CliError::config("a [measure] section is required"))
    }

    pub fn require_window(&self) -> CliResult<&[ShiftVector]> {
        self.window
            .as_deref()
            .ok_or_else(|| CliError::config("window is required ([run] window or --window)"))
    }
}

fn required<T: Clone>(value: &Option<T>, kind: &str, field: &str) -> CliResult<T> {
    value
        .clone()
        .ok_or_else(|| CliError::config(format!("measure kind `{kind}` needs `{field}`")))
}

pub fn build_measure(modulus: Modulus, s: &MeasureSection) -> CliResult<Measure> {
    let kind = s.kind.as_str();
    let markov = |s: &MeasureSection| -> CliResult<MarkovSpec> {
        let rows = required(&s.transition, kind, "transition")?;
        Ok(MarkovSpec::new(
            modulus,
            TransitionMatrix::from_rows(&rows)?,
            s.stationary.clone(),
        )?)
    };
    Ok(match kind {
        "uniform" | "haar" => Measure::Bernoulli(BernoulliSpec::uniform(modulus)),
        "bernoulli" => Measure::Bernoulli(BernoulliSpec::new(modulus, required(&s.weights, kind, "weights")?)?),
        "markov" => Measure::Markov(markov(s)?),
        "conditioned-markov" => {
            let word = required(&s.word, kind, "word")?;
            Measure::ConditionedMarkov(ConditionedMarkov::new(markov(s)?, s.window_start.unwrap_or(0), word)?)
        }
        "nstep-markov" => {
            let order = required(&s.order, kind, "order")?;
            let table = required(&s.table, kind, "table")?;
            Measure::NStep(NStepMarkovSpec::new(modulus, order, &table, s.stationary.clone())?)
        }
        other => {
            return Err(CliError::config(format!(
                "unknown measure kind `{other}` (expected uniform, bernoulli, markov, conditioned-markov or nstep-markov)"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIND: &str = r#"
[automaton]
modulus = 2
terms = "1@(-1) + 1@(1)"

[character]
terms = "1@(0)"

[measure]
kind = "bernoulli"
weights = [0.9, 0.1]

[run]
horizon = 64
window = "0"
"#;

    #[test]
    fn resolves_file_values() {
        let cfg = RunConfig::resolve(FileConfig::parse(LIND).unwrap(), &Overrides::default()).unwrap();
        assert_eq!(cfg.modulus.get(), 2);
        assert_eq!(cfg.dim, 1);
        assert_eq!(cfg.horizon, 64);
        assert_eq!(cfg.require_automaton().unwrap().linear().len(), 2);
        assert_eq!(cfg.require_character().unwrap().rank(), 1);
        assert_eq!(cfg.require_window().unwrap().len(), 1);
        assert_eq!(cfg.threshold_r, DEFAULT_THRESHOLD_R);
    }

    #[test]
    fn flags_override_file() {
        let o = Overrides {
            horizon: Some(10),
            constant: Some(1),
            jobs: Some(3),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(FileConfig::parse(LIND).unwrap(), &o).unwrap();
        assert_eq!(cfg.horizon, 10);
        assert_eq!(cfg.jobs, 3);
        assert_eq!(cfg.require_automaton().unwrap().constant(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FileConfig::parse("[automaton]\nmodulos = 2\n").is_err());
        let missing = RunConfig::resolve(FileConfig::default(), &Overrides::default());
        assert!(matches!(missing, Err(CliError::Config(_))));
        let bad = FileConfig::parse("[automaton]\nmodulus = 2\n[measure]\nkind = \"bernoulli\"\nweights = [0.5, 0.6]\n")
            .unwrap();
        assert!(matches!(RunConfig::resolve(bad, &Overrides::default()), Err(CliError::Config(_))));
        let markov_2d = FileConfig::parse(
            "[automaton]\nmodulus = 2\ndim = 2\n[measure]\nkind = \"markov\"\ntransition = [[0.9, 0.1], [0.2, 0.8]]\n",
        )
        .unwrap();
        assert!(matches!(RunConfig::resolve(markov_2d, &Overrides::default()), Err(CliError::Config(_))));
        let wide = Overrides {
            window: Some("0,1,2,3,4,5,6,7,8,9,10,11,12".into()),
            ..Overrides::default()
        };
        assert!(matches!(
            RunConfig::resolve(FileConfig::parse(LIND).unwrap(), &wide),
            Err(CliError::Resource(_))
        ));
    }

    #[test]
    fn measure_kinds() {
        let z2 = Modulus::new(2).unwrap();
        let section = |kind: &str| MeasureSection {
            kind: kind.into(),
            transition: Some(vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
            word: Some(vec![1]),
            order: Some(2),
            table: Some(vec![vec![0.5, 0.5]; 4]),
            weights: Some(vec![0.5, 0.5]),
            ..MeasureSection::default()
        };
        for kind in ["uniform", "bernoulli", "markov", "conditioned-markov", "nstep-markov"] {
            assert!(build_measure(z2, &section(kind)).is_ok(), "{kind}");
        }
        assert!(build_measure(z2, &section("gibbs")).is_err());
    }
}
