//! Small instances with strong cascaded paths and RIS noise, sized for
//! Monte Carlo checks.

use nalgebra::DMatrix;

use crate::estimation::PilotPlan;
use crate::ris::RisState;
use crate::scenario::{NetworkRealization, Scenario};

/// Which regime a reference instance exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceCase {
    /// M = 2, K = 2, N = 4, one pilot per user.
    Orthogonal,
    /// M = 2, K = 2, N = 4, both users on one pilot.
    SharedPilot,
    /// As `SharedPilot` but with the RIS switched off (a = 0).
    Passive,
    /// M = 3, K = 3, N = 4, tau_p = 2, used for the moment suite.
    Moments,
    /// M = 4, K = 3, N = 16 (4 x 4), tau_p = 2, weak direct links and low
    /// noise so that the sum SE depends visibly on the phases.
    Surface16,
    /// M = 1, K = 1, N = 1.
    Toy,
}

/// Scenario, realization, RIS state and pilot plan for `case`.
///
/// Gains are given per unit element area so that every cascaded term is of
/// the same order as the direct path; phases are fixed and non-uniform.
pub fn reference_instance(case: ReferenceCase) -> (NetworkRealization, RisState, PilotPlan) {
    let (m_count, k_count, tau_p, side) = match case {
        ReferenceCase::Orthogonal => (2, 2, 2, 2),
        ReferenceCase::SharedPilot | ReferenceCase::Passive => (2, 2, 1, 2),
        ReferenceCase::Moments => (3, 3, 2, 2),
        ReferenceCase::Surface16 => (4, 3, 2, 4),
        ReferenceCase::Toy => (1, 1, 1, 1),
    };
    let mut s = Scenario::default();
    s.num_aps = m_count;
    s.num_users = k_count;
    s.n_h = side;
    s.n_v = side;
    s.tau_p = tau_p;
    s.d_h = s.wavelength / 4.0;
    s.d_v = s.wavelength / 4.0;
    s.pilot_power = 1.0;
    s.data_power = 1.0;
    s.ap_noise = 0.5;
    s.ris_noise = 0.2;
    let (direct, cascade) = if case == ReferenceCase::Surface16 {
        s.ap_noise = 0.05;
        s.ris_noise = 0.02;
        (0.05, 2.0)
    } else {
        (1.0, 1.0)
    };
    let area = s.element_area();
    let beta = DMatrix::from_fn(m_count, k_count, |m, k| {
        direct * [0.6, 0.25, 0.9, 0.4, 0.15, 0.7, 0.3, 0.5, 1.0, 0.2, 0.8, 0.35][3 * m + k]
    });
    let alpha = [0.35, 0.2, 0.5, 0.15][..m_count].iter().map(|x| cascade * x / area).collect();
    let alpha_bar = [0.3, 0.45, 0.2][..k_count].iter().map(|x| cascade * x / area).collect();
    let net = NetworkRealization::from_gains(&s, beta, alpha, alpha_bar).expect("reference gains are valid");
    let a = if case == ReferenceCase::Passive { 0.0 } else { 1.0 };
    let n = side * side;
    let ris = RisState::new((0..n).map(|i| [0.0, 0.9, 2.3, 4.0][i % 4] + 0.37 * (i / 4) as f64).collect(), a);
    let plan = PilotPlan::for_scenario(&s);
    (net, ris, plan)
}
