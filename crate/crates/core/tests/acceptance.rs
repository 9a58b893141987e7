//! Acceptance suite: every criterion at full scale, one verdict line each.
//!
//! Runs for several minutes in the optimized test profile. Exits nonzero if
//! any criterion fails; the failing rows follow the summary.

use std::process::ExitCode;
use std::time::Instant;

use gbm_integrals::cli::write_csv;
use gbm_integrals::grid::{self, GridConfig};

/// Paths per run for the thread-count comparison.
const DETERMINISM_N: usize = 1 << 16;

fn main() -> ExitCode {
    let started = Instant::now();
    let config = GridConfig::default();
    let mut criteria = match grid::run(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("acceptance grid failed to run: {e}");
            return ExitCode::FAILURE;
        }
    };
    match grid::determinism(&GridConfig {
        n: DETERMINISM_N,
        ..config
    }) {
        Ok(c) => criteria.insert(8, c),
        Err(e) => {
            eprintln!("determinism run failed: {e}");
            return ExitCode::FAILURE;
        }
    }

    println!(
        "acceptance: n = {}, steps = {}, seed = {}",
        config.n, config.steps, config.seed
    );
    print!("{}", grid::summary_table(&criteria));
    let failing: Vec<_> = criteria
        .iter()
        .flat_map(|c| c.records.iter().filter(|r| r.pass == Some(false)).cloned())
        .collect();
    if !failing.is_empty() {
        println!("failing rows:");
        print!("{}", write_csv(&failing));
    }
    println!("elapsed {:.0} s", started.elapsed().as_secs_f64());

    if criteria.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
