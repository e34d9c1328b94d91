use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use lca_haar::config::{FileConfig, OutputFormat, Overrides, RunConfig, CONFIG_ENV};
use lca_haar::error::{CliResult, EXIT_BUDGET, EXIT_OK, EXIT_SELF_CHECK};
use lca_haar::selftest::{run_criterion, SelftestOptions, CRITERIA};
use lca_haar::commands;

/// Diagnostics for linear cellular automata over Z/m: rank traces, Fourier
/// decay of pushed-forward measures, cylinder laws, mixing certificates and
/// gap scans.
#[derive(Debug, Parser)]
#[command(name = "lca-haar", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Experiment file with [automaton], [character], [measure] and [run] sections.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    modulus: Option<u32>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Automaton term list, e.g. "1@(-1) + 1@(1)".
    #[arg(long, global = true, allow_hyphen_values = true)]
    automaton: Option<String>,
    /// Affine constant added after each step.
    #[arg(long, global = true, allow_hyphen_values = true)]
    constant: Option<i64>,
    /// Character term list, e.g. "1@(0)".
    #[arg(long, global = true, allow_hyphen_values = true)]
    character: Option<String>,
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Iteration count for the cylinder law.
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Window sites, e.g. "0,1,2" or "(0,0),(1,0)".
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long = "threshold-R", global = true)]
    threshold_r: Option<i64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    max_support: Option<usize>,
    #[arg(long, global = true)]
    max_enum: Option<u64>,
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            modulus: self.modulus,
            dim: self.dim,
            automaton: self.automaton.clone(),
            constant: self.constant,
            character: self.character.clone(),
            horizon: self.horizon,
            n: self.n,
            window: self.window.clone(),
            threshold_r: self.threshold_r,
            epsilon: self.epsilon,
            out: self.out.clone(),
            format: self.format,
            jobs: self.jobs,
            max_support: self.max_support,
            max_enum: self.max_enum,
        }
    }

    fn resolve(&self) -> CliResult<RunConfig> {
        let file = FileConfig::locate(self.config.as_deref())?;
        RunConfig::resolve(file, &self.overrides())
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Rank of the pulled-back character for n = 0..=horizon.
    RankTrace,
    /// Fourier coefficient of the pushed-forward measure for n = 0..=horizon.
    Decay,
    /// Law of the configuration on a window after n steps.
    Cylinder,
    /// Mixing certificate of the measure.
    Certify,
    /// Gap-word occurrences in the base-p digits of N.
    GapScan,
    /// Runs the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u32>,
    /// Wall-clock budget in seconds for the whole suite.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, hide = true)]
    inject_lucas_fault: bool,
}

fn selftest(args: &SelftestArgs) -> CliResult<i32> {
    let opts = SelftestOptions {
        lucas_fault: args.inject_lucas_fault,
        binary: std::env::current_exe().ok(),
    };
    let ids: Vec<u32> = if args.only.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        args.only.clone()
    };
    let budget = args.budget.map(Duration::from_secs_f64);
    let start = Instant::now();
    let mut first_failure = None;
    for id in ids {
        let outcome = run_criterion(id, &opts);
        println!("{}", outcome.line());
        if !outcome.passed && first_failure.is_none() {
            first_failure = Some(format!("criterion {} [{}]", outcome.id, outcome.name));
        }
        if let Some(b) = budget {
            if start.elapsed() > b {
                eprintln!(
                    "error: runtime budget of {:.1}s exceeded after criterion {id} ({:.1}s)",
                    b.as_secs_f64(),
                    start.elapsed().as_secs_f64()
                );
                return Ok(EXIT_BUDGET);
            }
        }
    }
    match first_failure {
        Some(name) => {
            eprintln!("error: first failing {name}");
            Ok(EXIT_SELF_CHECK)
        }
        None => {
            println!("all criteria passed in {:.2}s", start.elapsed().as_secs_f64());
            Ok(EXIT_OK)
        }
    }
}

fn run(cli: &Cli) -> CliResult<i32> {
    if let Cmd::Selftest(args) = &cli.command {
        return selftest(args);
    }
    let cfg = cli.global.resolve()?;
    match cli.command {
        Cmd::RankTrace => commands::rank_trace(&cfg)?,
        Cmd::Decay => commands::decay(&cfg)?,
        Cmd::Cylinder => commands::cylinder(&cfg)?,
        Cmd::Certify => commands::certify(&cfg)?,
        Cmd::GapScan => commands::gap_scan_cmd(&cfg)?,
        Cmd::Selftest(_) => unreachable!(),
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
