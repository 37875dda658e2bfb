//! Trains the SAC phase optimizer on a 16-element instance and compares the
//! result with equal and random phases.
//!
//! Usage: train_phases [episodes] [seed]

use ris_cellfree::oracle::{reference_instance, ReferenceCase};
use ris_cellfree::perf::{evaluate, PerfOptions};
use ris_cellfree::ris::RisState;
use ris_cellfree::rng::{substream, PHASE_STREAM};
use ris_cellfree::sac::{train_with_progress, RisEnv, SacConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let episodes = args.next().and_then(|v| v.parse().ok()).unwrap_or(100);
    let seed = args.next().and_then(|v| v.parse().ok()).unwrap_or(1);
    let (net, ris, plan) = reference_instance(ReferenceCase::Surface16);
    let mut env = RisEnv::with_gain(net.clone(), ris.a(), PerfOptions::default()).expect("valid instance");
    let cfg = SacConfig {
        episodes,
        episode_len: 100,
        ..SacConfig::default()
    };
    let out = train_with_progress(&mut env, &cfg, seed, |ep, r| {
        if ep % 10 == 0 {
            println!("episode {ep:>4}: mean reward {:.5}", r / cfg.episode_len as f64);
        }
    })
    .expect("training stays finite");
    let mut rng = substream(seed, PHASE_STREAM);
    let random = (0..100)
        .map(|_| evaluate(&net, &RisState::random(16, ris.a(), &mut rng), &plan, PerfOptions::default()).sum_se)
        .fold(f64::NEG_INFINITY, f64::max);
    println!("equal phases     {:.5}", out.baseline_sum_se);
    println!("best of 100 rand {random:.5}");
    println!("trained best     {:.5}", out.best_sum_se);
}
