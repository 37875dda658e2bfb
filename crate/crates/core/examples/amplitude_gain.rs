//! Active RIS amplification factor versus surface size and power budget.

use ris_cellfree::ris::{amplitude_gain, aris_total_power};
use ris_cellfree::scenario::{dbm_to_watts, NetworkRealization, Scenario};

fn main() {
    let base = Scenario::default();
    let net = NetworkRealization::sample(&base, 1).expect("valid scenario");
    println!("{:>6} {:>10} {:>12} {:>10} {:>12}", "N", "P_aris dBm", "a", "branch", "P used (W)");
    for budget_dbm in [20.0, 30.0, 40.0] {
        for side in [4, 8, 16, 32] {
            let mut s = base.clone();
            s.n_h = side;
            s.n_v = side;
            s.ris_power_budget = dbm_to_watts(budget_dbm);
            let g = amplitude_gain(&s, &net.alpha_bar);
            let used = aris_total_power(&s, &net.alpha_bar, g.value);
            println!(
                "{:>6} {budget_dbm:>10.0} {:>12.4} {:>10} {used:>12.4e}",
                side * side,
                g.value,
                format!("{:?}", g.branch)
            );
        }
    }
}
