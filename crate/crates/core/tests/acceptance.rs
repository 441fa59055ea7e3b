//! Runs every reproduction check at its stated budget and tolerance and
//! prints one line per check. Exits non-zero if any check fails.

use cfdim::repro::{run_check, CHECK_IDS};

fn main() {
    let seed = 42;
    let mut failed = 0;
    for id in CHECK_IDS {
        let r = run_check(id, seed);
        println!("{}", r.line());
        if !r.passed {
            failed += 1;
        }
    }
    println!("{} of {} checks passed", CHECK_IDS.len() - failed, CHECK_IDS.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
