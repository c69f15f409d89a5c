//! One line per acceptance criterion, followed by its individual checks.
//!
//! Criteria listed in `UNATTAINABLE` are still run and reported with their real
//! status; the decisions ledger explains why they cannot pass as stated. Any other
//! failure, or one of those criteria starting to pass, fails this target.

use std::process::ExitCode;
use weyl_core::verify::{run_criterion, CRITERIA};

const UNATTAINABLE: &[u32] = &[3];

fn main() -> ExitCode {
    let mut unexpected = Vec::new();
    for (id, _) in CRITERIA {
        let rep = match run_criterion(id) {
            Ok(r) => r,
            Err(e) => {
                println!("criterion {id:>2} ERROR {e}");
                unexpected.push(id);
                continue;
            }
        };
        let known = UNATTAINABLE.contains(&id);
        let status = if rep.pass() { "PASS" } else { "FAIL" };
        let tag = if known { " (documented as unattainable)" } else { "" };
        println!("criterion {id:>2} {status} {}{tag} [{:.1}s]", rep.title, rep.seconds);
        for c in &rep.checks {
            println!("    {c}");
        }
        if rep.pass() == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
