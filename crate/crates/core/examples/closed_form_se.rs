//! Closed-form SINR, spectral and energy efficiency for one network drop.

use ris_cellfree::estimation::PilotPlan;
use ris_cellfree::perf::{energy_efficiency, evaluate, power_budget, sinr_closed_form_with, PerfOptions, SinrModel};
use ris_cellfree::ris::{amplitude_gain, RisState};
use ris_cellfree::scenario::{NetworkRealization, Scenario};

fn main() {
    let s = Scenario::default();
    let net = NetworkRealization::sample(&s, 3).expect("valid scenario");
    let plan = PilotPlan::for_scenario(&s);
    let a = amplitude_gain(&s, &net.alpha_bar).value;
    let ris = RisState::equal(s.num_elements(), a);
    let eval = evaluate(&net, &ris, &plan, PerfOptions::default());
    println!("M = {}, K = {}, N = {}, a = {a:.3}", s.num_aps, s.num_users, s.num_elements());
    for k in 0..s.num_users {
        let printed = sinr_closed_form_with(SinrModel::Printed, &s, &eval.stats, &eval.est, &plan, k).gamma_k;
        println!("  user {k:>2}: SINR {:.4e} (printed-term model {printed:.4e}), SE {:.4}", eval.sinr[k], eval.se[k]);
    }
    let p = power_budget(&s, eval.sum_se, &net.alpha_bar, a);
    println!("sum SE {:.4} bit/s/Hz", eval.sum_se);
    println!("power: users {:.3} W, backhaul {:.3} W, RIS {:.3} W", p.users, p.backhaul, p.ris);
    println!("EE {:.4e} bit/J", energy_efficiency(&s, eval.sum_se, &net.alpha_bar, a));
}
