//! Sum SE and amplitude gain as the surface grows.
//!
//! With the default drop the cascaded path is several orders below the
//! direct path and the curve is flat, so this uses a cascade-dominated drop
//! with a small RIS budget. The gain sits at `a_max` for small surfaces and
//! then falls as the budget binds.

use nalgebra::DMatrix;
use ris_cellfree::estimation::PilotPlan;
use ris_cellfree::perf::{evaluate, PerfOptions};
use ris_cellfree::ris::{amplitude_gain, RisState};
use ris_cellfree::scenario::{NetworkRealization, Scenario};

fn main() {
    println!("{:>6} {:>10} {:>10} {:>12}", "N", "a", "branch", "sum SE");
    for side in 2..=13 {
        let mut s = Scenario::default();
        s.num_aps = 2;
        s.num_users = 2;
        s.tau_p = 2;
        s.n_h = side;
        s.n_v = side;
        s.d_h = s.wavelength / 2.0;
        s.d_v = s.wavelength / 2.0;
        s.pilot_power = 1.0;
        s.data_power = 1.0;
        s.ap_noise = 0.01;
        s.ris_noise = 1e-7;
        s.a_max = 4.0;
        s.ris_power_budget = 0.08;
        let area = s.element_area();
        let beta = DMatrix::from_row_slice(2, 2, &[0.03, 0.0125, 0.02, 0.045]);
        let net = NetworkRealization::from_gains(&s, beta, vec![0.5 / area, 0.35 / area], vec![3e-5 / area, 1.8e-5 / area])
            .expect("valid gains");
        let g = amplitude_gain(&s, &net.alpha_bar);
        let plan = PilotPlan::for_scenario(&s);
        let se = evaluate(&net, &RisState::equal(side * side, g.value), &plan, PerfOptions::default()).sum_se;
        println!("{:>6} {:>10.4} {:>10} {se:>12.6}", side * side, g.value, format!("{:?}", g.branch));
    }
}
