//! Checks every closed form of a small instance against Monte Carlo.
//!
//! Usage: monte_carlo_check [trials]

use ris_cellfree::cli::validation_report;
use ris_cellfree::oracle::{reference_instance, ReferenceCase};

fn main() {
    let trials = std::env::args().nth(1).and_then(|t| t.parse().ok()).unwrap_or(200_000);
    for case in [ReferenceCase::Orthogonal, ReferenceCase::SharedPilot, ReferenceCase::Passive] {
        let (net, ris, plan) = reference_instance(case);
        let report = validation_report(&net, &ris, &plan, trials, 1);
        let failed = report.failures().count();
        println!("{case:?}: {} identities, {failed} outside tolerance", report.rows.len());
        for k in 0..net.num_users() {
            if let Some(r) = report.row(&format!("sinr[k={k}]")) {
                println!("  SINR k={k}: closed form {:.5}, Monte Carlo {:.5}", r.analytic, r.empirical);
            }
        }
    }
}
