//! Fading realizations and the analytic moments of the aggregated channel.

mod factor;
mod stats;

pub use factor::{complex_normal, sample_correlated_vector, standard_complex_normal, CovarianceFactor};
pub use stats::{
    compute_stats, cross_moments, dense_q, dense_xi, fourth_moment, CrossMoments, SecondOrderStats,
    SpatialTraces,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::ris::RisState;
use crate::scenario::NetworkRealization;

/// One fading draw plus the RIS thermal noise of the pilot and data phases.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    /// AP-RIS channels `h_m`.
    pub h: Vec<DVector<Complex64>>,
    /// RIS-user channels `z_k`.
    pub z: Vec<DVector<Complex64>>,
    /// Direct channels, `g[(m, k)]`.
    pub g: DMatrix<Complex64>,
    /// Aggregated channels `q = g + h^H Theta z`.
    pub q: DMatrix<Complex64>,
    /// RIS noise during the pilot phase, `N x tau_p`.
    pub v_pilot: DMatrix<Complex64>,
    /// RIS noise during one data symbol.
    pub v_data: DVector<Complex64>,
}

/// Draws `h`, `z`, `g` and the RIS noise in that order from `rng`.
pub fn sample_channels<R: Rng + ?Sized>(
    net: &NetworkRealization,
    ris: &RisState,
    rng: &mut R,
) -> ChannelSample {
    let (m_count, k_count, n) = (net.num_aps(), net.num_users(), net.num_elements());
    assert_eq!(ris.num_elements(), n, "RIS state does not match the realization");
    let factor = net.correlation_factor();
    let area = net.element_area();
    let h: Vec<_> = (0..m_count)
        .map(|m| factor.sample_scaled(net.alpha[m] * area, rng))
        .collect();
    let z: Vec<_> = (0..k_count)
        .map(|k| factor.sample_scaled(net.alpha_bar[k] * area, rng))
        .collect();
    let g = DMatrix::from_fn(m_count, k_count, |m, k| complex_normal(net.beta[(m, k)], rng));
    let sigma_bar = net.scenario.ris_noise;
    let v_pilot = DMatrix::from_fn(n, net.scenario.tau_p, |_, _| complex_normal(sigma_bar, rng));
    let v_data = DVector::from_fn(n, |_, _| complex_normal(sigma_bar, rng));
    let q = aggregate(&h, &z, &g, &ris.theta_diagonal());
    ChannelSample {
        h,
        z,
        g,
        q,
        v_pilot,
        v_data,
    }
}

/// `q_mk = g_mk + h_m^H Theta z_k` for diagonal `Theta`.
pub fn aggregate(
    h: &[DVector<Complex64>],
    z: &[DVector<Complex64>],
    g: &DMatrix<Complex64>,
    theta: &[Complex64],
) -> DMatrix<Complex64> {
    // Theta^H h_m, so that h_m^H Theta z = (Theta^H h_m)^H z.
    let reflected: Vec<DVector<Complex64>> = h
        .iter()
        .map(|hm| DVector::from_fn(hm.len(), |n, _| theta[n].conj() * hm[n]))
        .collect();
    DMatrix::from_fn(g.nrows(), g.ncols(), |m, k| g[(m, k)] + reflected[m].dotc(&z[k]))
}

/// `h_m^H Theta x` for a length-`N` vector `x`.
pub fn reflect(h_m: &DVector<Complex64>, theta: &[Complex64], x: &DVector<Complex64>) -> Complex64 {
    h_m.iter()
        .zip(theta)
        .zip(x.iter())
        .map(|((h, t), v)| h.conj() * t * v)
        .sum()
}
