//! Runs every acceptance criterion and prints one PASS/FAIL line for each.
//! Set `ACCEPTANCE_VERBOSE=1` for the measurements behind each line.

use lyapunov_lab_cli::verify::run_suite;
use std::process::ExitCode;

fn main() -> ExitCode {
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    let report = run_suite("all", None, |c| {
        println!("{}", c.line());
        if verbose || !c.pass {
            for d in &c.details {
                println!("    {d}");
            }
        }
    })
    .expect("suite exists");
    let passed = report.criteria.iter().filter(|c| c.pass).count();
    println!("acceptance: {passed}/{} criteria pass", report.criteria.len());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
