use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;

use super::{PositionIndexing, Scenario};
use crate::channel::CovarianceFactor;
use crate::rng::{substream, LAYOUT_STREAM};
use crate::{Error, Result};

/// `10^-3 * d^-exponent`, with `d` clamped to at least 1 m.
pub fn large_scale_gain(distance_m: f64, exponent: f64) -> f64 {
    1e-3 * distance_m.max(1.0).powf(-exponent)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// 3-D element positions `u_1..u_N` on an `n_h x n_v` grid.
pub fn element_positions(
    n_h: usize,
    n_v: usize,
    d_h: f64,
    d_v: f64,
    indexing: PositionIndexing,
) -> Vec<[f64; 3]> {
    let divisor = match indexing {
        PositionIndexing::Verbatim => n_v,
        PositionIndexing::RowMajor => n_h,
    };
    (0..n_h * n_v)
        .map(|x| [0.0, (x % n_h) as f64 * d_h, (x / divisor) as f64 * d_v])
        .collect()
}

/// Sinc spatial correlation `[R]_(n1,n2) = sinc(2 |u_n1 - u_n2| / lambda)`.
pub fn build_correlation_matrix(
    n_h: usize,
    n_v: usize,
    d_h: f64,
    d_v: f64,
    lambda: f64,
) -> DMatrix<f64> {
    correlation_from_positions(
        &element_positions(n_h, n_v, d_h, d_v, PositionIndexing::Verbatim),
        lambda,
    )
}

pub(crate) fn correlation_from_positions(positions: &[[f64; 3]], lambda: f64) -> DMatrix<f64> {
    let n = positions.len();
    DMatrix::from_fn(n, n, |i, j| {
        let (u, w) = (positions[i], positions[j]);
        let dist = ((u[0] - w[0]).powi(2) + (u[1] - w[1]).powi(2) + (u[2] - w[2]).powi(2)).sqrt();
        sinc(2.0 * dist / lambda)
    })
}

/// One network drop: positions, large-scale gains and the base correlation.
///
/// The per-link covariances are scalar multiples of `r`
/// (`R_m = alpha_m d_H d_V R`, `R_bar_k = alpha_bar_k d_H d_V R`), so only
/// the scale factors are stored; [`NetworkRealization::r_m`] and
/// [`NetworkRealization::r_bar`] materialize them on demand.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub scenario: Scenario,
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    pub ris_position: [f64; 2],
    /// `beta[(m, k)]`, AP-user gains.
    pub beta: DMatrix<f64>,
    /// AP-RIS gains.
    pub alpha: Vec<f64>,
    /// RIS-user gains.
    pub alpha_bar: Vec<f64>,
    /// Base correlation matrix `R`.
    pub r: DMatrix<f64>,
    r_squared: OnceLock<DMatrix<f64>>,
    factor: OnceLock<CovarianceFactor>,
}

/// Convenience alias for [`NetworkRealization::sample`].
pub fn sample_layout(scenario: &Scenario, seed: u64) -> Result<NetworkRealization> {
    NetworkRealization::sample(scenario, seed)
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl NetworkRealization {
    /// APs equispaced on the horizontal diameter, RIS at its left endpoint,
    /// users uniform in the disc.
    pub fn sample(scenario: &Scenario, seed: u64) -> Result<NetworkRealization> {
        scenario.validate()?;
        let (m_count, k_count) = (scenario.num_aps, scenario.num_users);
        let radius = scenario.radius;
        let ap_positions: Vec<[f64; 2]> = (0..m_count)
            .map(|i| [-radius + 2.0 * radius * (i + 1) as f64 / (m_count + 1) as f64, 0.0])
            .collect();
        let ris_position = [-radius, 0.0];
        let mut rng = substream(seed, LAYOUT_STREAM);
        let user_positions: Vec<[f64; 2]> = (0..k_count)
            .map(|_| {
                let rad = radius * rng.random::<f64>().sqrt();
                let ang = 2.0 * PI * rng.random::<f64>();
                [rad * ang.cos(), rad * ang.sin()]
            })
            .collect();
        let beta = DMatrix::from_fn(m_count, k_count, |m, k| {
            large_scale_gain(distance(ap_positions[m], user_positions[k]), scenario.beta_exp)
        });
        let alpha = ap_positions
            .iter()
            .map(|&p| large_scale_gain(distance(p, ris_position), scenario.alpha1_exp))
            .collect();
        let alpha_bar = user_positions
            .iter()
            .map(|&p| large_scale_gain(distance(p, ris_position), scenario.alpha2_exp))
            .collect();
        let mut out = NetworkRealization::from_gains(scenario, beta, alpha, alpha_bar)?;
        out.ap_positions = ap_positions;
        out.user_positions = user_positions;
        out.ris_position = ris_position;
        Ok(out)
    }

    /// Realization with explicitly chosen large-scale gains; the correlation
    /// matrix follows the scenario geometry. Positions are left empty.
    pub fn from_gains(
        scenario: &Scenario,
        beta: DMatrix<f64>,
        alpha: Vec<f64>,
        alpha_bar: Vec<f64>,
    ) -> Result<NetworkRealization> {
        scenario.validate()?;
        let (m_count, k_count) = (scenario.num_aps, scenario.num_users);
        if beta.shape() != (m_count, k_count) || alpha.len() != m_count || alpha_bar.len() != k_count {
            return Err(Error::InvalidScenario("gain dimensions do not match M x K".into()));
        }
        let all_positive = beta.iter().chain(&alpha).chain(&alpha_bar).all(|&g| g > 0.0 && g.is_finite());
        if !all_positive {
            return Err(Error::InvalidScenario("large-scale gains must be positive".into()));
        }
        let positions = element_positions(
            scenario.n_h,
            scenario.n_v,
            scenario.d_h,
            scenario.d_v,
            scenario.position_indexing,
        );
        Ok(NetworkRealization {
            scenario: scenario.clone(),
            ap_positions: Vec::new(),
            user_positions: Vec::new(),
            ris_position: [0.0, 0.0],
            beta,
            alpha,
            alpha_bar,
            r: correlation_from_positions(&positions, scenario.wavelength),
            r_squared: OnceLock::new(),
            factor: OnceLock::new(),
        })
    }

    /// Replaces the base correlation matrix (must be symmetric, unit diagonal).
    pub fn with_correlation(mut self, r: DMatrix<f64>) -> Result<NetworkRealization> {
        let n = self.num_elements();
        if r.shape() != (n, n) {
            return Err(Error::InvalidScenario(format!("correlation must be {n} x {n}")));
        }
        if (0..n).any(|i| (r[(i, i)] - 1.0).abs() > 1e-12) || (&r - r.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidScenario("correlation must be symmetric with unit diagonal".into()));
        }
        self.r = r;
        self.r_squared = OnceLock::new();
        self.factor = OnceLock::new();
        Ok(self)
    }

    pub fn num_aps(&self) -> usize {
        self.alpha.len()
    }

    pub fn num_users(&self) -> usize {
        self.alpha_bar.len()
    }

    pub fn num_elements(&self) -> usize {
        self.r.nrows()
    }

    pub fn element_area(&self) -> f64 {
        self.scenario.element_area()
    }

    /// `R_m = alpha_m d_H d_V R`.
    pub fn r_m(&self, m: usize) -> DMatrix<f64> {
        &self.r * (self.alpha[m] * self.element_area())
    }

    /// `R_bar_k = alpha_bar_k d_H d_V R`.
    pub fn r_bar(&self, k: usize) -> DMatrix<f64> {
        &self.r * (self.alpha_bar[k] * self.element_area())
    }

    /// `R^2`, computed once.
    pub fn r_squared(&self) -> &DMatrix<f64> {
        self.r_squared.get_or_init(|| &self.r * &self.r)
    }

    /// Factor of `R` (after eigenvalue clipping), computed once.
    pub fn correlation_factor(&self) -> &CovarianceFactor {
        self.factor.get_or_init(|| CovarianceFactor::from_real_symmetric(&self.r))
    }
}
