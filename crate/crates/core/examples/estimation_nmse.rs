//! LMMSE channel estimation quality versus pilot power, with and without
//! pilot reuse.

use ris_cellfree::channel::compute_stats;
use ris_cellfree::estimation::{estimation_stats, PilotPlan};
use ris_cellfree::ris::{amplitude_gain, RisState};
use ris_cellfree::scenario::{dbm_to_watts, NetworkRealization, Scenario};

fn main() {
    for tau_p in [15, 5] {
        let mut s = Scenario::default();
        s.tau_p = tau_p;
        let net = NetworkRealization::sample(&s, 7).expect("valid scenario");
        let a = amplitude_gain(&s, &net.alpha_bar).value;
        let stats = compute_stats(&net, &RisState::equal(s.num_elements(), a));
        println!("tau_p = {tau_p} (K = {})", s.num_users);
        for rho_dbm in [-20.0, 0.0, 20.0, 40.0, 60.0] {
            let mut sc = s.clone();
            sc.pilot_power = dbm_to_watts(rho_dbm);
            let plan = PilotPlan::for_scenario(&sc);
            let est = estimation_stats(&sc, &stats, &plan);
            println!("  rho = {rho_dbm:>5.0} dBm: mean NMSE {:.4}", est.nmse.mean());
        }
    }
}
