//! Runs every acceptance criterion, printing one line each, and fails if any
//! criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;

use lca_haar::selftest::{run_criterion, SelftestOptions, CRITERIA};

fn main() -> ExitCode {
    let opts = SelftestOptions {
        lucas_fault: false,
        binary: Some(PathBuf::from(env!("CARGO_BIN_EXE_lca-haar"))),
    };
    let mut failed = Vec::new();
    println!("\nrunning {} acceptance criteria", CRITERIA.len());
    for (id, _, _) in CRITERIA {
        let outcome = run_criterion(id, &opts);
        println!("{}", outcome.line());
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed\n", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}\n");
        ExitCode::FAILURE
    }
}
