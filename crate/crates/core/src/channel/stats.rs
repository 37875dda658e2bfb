//! Closed-form second- and fourth-order statistics of the aggregated channel.
//!
//! Every covariance is a scalar multiple of the real base correlation `R`,
//! and `Theta = a Psi`, so all traces reduce to five phase-dependent scalars
//! of `R` and `P = Psi R Psi^H`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ris::RisState;
use crate::scenario::NetworkRealization;
use crate::{Error, Result};

/// Phase-dependent traces of the base correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialTraces {
    /// `N = tr R`.
    pub n: f64,
    /// `tr(P R)`.
    pub pr: f64,
    /// `tr(P R P R)`.
    pub prpr: f64,
    /// `tr(P R^2)`.
    pub pr2: f64,
    /// `tr(R^2)`.
    pub r2: f64,
    /// Largest imaginary part met while forming the complex traces,
    /// relative to the corresponding real part.
    pub imag_residual: f64,
}

impl SpatialTraces {
    pub fn compute(r: &DMatrix<f64>, r_squared: &DMatrix<f64>, phases: &[f64]) -> SpatialTraces {
        let n = r.nrows();
        assert_eq!(phases.len(), n);
        let cos: Vec<f64> = phases.iter().map(|p| p.cos()).collect();
        let sin: Vec<f64> = phases.iter().map(|p| p.sin()).collect();

        let mut pr = 0.0;
        let mut pr2 = 0.0;
        let mut r2 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let rij = r[(i, j)];
                let cdiff = cos[i] * cos[j] + sin[i] * sin[j];
                pr += rij * rij * cdiff;
                pr2 += rij * r_squared[(i, j)] * cdiff;
                r2 += rij * rij;
            }
        }

        // tr(P R P R) = sum_ij e^{-j(psi_i + psi_j)} B_ij^2 with B = R diag(e^{j psi}) R.
        let scale_cols = |w: &[f64]| {
            let mut m = r.clone();
            for (j, mut col) in m.column_iter_mut().enumerate() {
                col *= w[j];
            }
            m
        };
        let b_re = scale_cols(&cos) * r;
        let b_im = scale_cols(&sin) * r;
        let mut prpr = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let b = Complex64::new(b_re[(i, j)], b_im[(i, j)]);
                let e = Complex64::new(cos[i], -sin[i]) * Complex64::new(cos[j], -sin[j]);
                prpr += e * b * b;
            }
        }
        let imag_residual = if prpr.re != 0.0 { (prpr.im / prpr.re).abs() } else { prpr.im.abs() };

        SpatialTraces {
            n: n as f64,
            pr,
            prpr: prpr.re,
            pr2,
            r2,
            imag_residual,
        }
    }
}

/// Per-link statistics for one RIS configuration.
#[derive(Debug, Clone)]
pub struct SecondOrderStats {
    pub a: f64,
    pub element_area: f64,
    /// RIS noise `sigma_bar^2`.
    pub ris_noise: f64,
    pub traces: SpatialTraces,
    pub beta: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    /// `kappa[(m, k)] = beta + tr Xi`.
    pub kappa: DMatrix<f64>,
    /// Active-noise moment `E|p_bar^* q|^2` for each link.
    pub alpha_an: DMatrix<f64>,
}

impl SecondOrderStats {
    pub fn num_aps(&self) -> usize {
        self.alpha.len()
    }

    pub fn num_users(&self) -> usize {
        self.alpha_bar.len()
    }

    /// `a^2 (d_H d_V)^2`, the common factor of every `Xi`.
    fn cascade(&self) -> f64 {
        self.a * self.a * self.element_area * self.element_area
    }

    /// `tr Xi_{m,k}`.
    pub fn tr_xi(&self, m: usize, k: usize) -> f64 {
        self.alpha[m] * self.alpha_bar[k] * self.cascade() * self.traces.pr
    }

    /// `tr(Xi_{m,k} Xi_{m2,k2})`, equal to `tr(R_bar_k Q_m R_bar_k2 Q_m2)`.
    pub fn tr_xi_xi(&self, m: usize, k: usize, m2: usize, k2: usize) -> f64 {
        let c = self.cascade();
        self.alpha[m] * self.alpha[m2] * self.alpha_bar[k] * self.alpha_bar[k2] * c * c * self.traces.prpr
    }

    /// `tr Q_m` with `Q_m = Theta^H R_m Theta`.
    pub fn tr_q(&self, m: usize) -> f64 {
        self.a * self.a * self.alpha[m] * self.element_area * self.traces.n
    }

    /// `tr(Q_m R_bar_j Q_m2)`, also equal to `tr(R_bar_j Q_m Q_m2)`.
    pub fn tr_q_rbar_q(&self, m: usize, j: usize, m2: usize) -> f64 {
        let a4 = self.a.powi(4);
        a4 * self.alpha[m] * self.alpha[m2] * self.alpha_bar[j] * self.element_area.powi(3) * self.traces.pr2
    }

    /// `tr(Q_m Q_m2)`.
    pub fn tr_q_q(&self, m: usize, m2: usize) -> f64 {
        self.a.powi(4) * self.alpha[m] * self.alpha[m2] * self.element_area.powi(2) * self.traces.r2
    }

    /// `tr R_m`.
    pub fn tr_r_m(&self, m: usize) -> f64 {
        self.alpha[m] * self.element_area * self.traces.n
    }

    /// Alternative closed form for the active-noise moment,
    /// `N s a^2 beta tr R_m + N^2 s a^4 (tr R_m^2 + (tr R_m)^2) tr R_bar_k` with
    /// `s = sigma_bar^2`. Kept for comparison only; it does not match the
    /// simulated moment.
    pub fn alpha_an_printed(&self, m: usize, k: usize) -> f64 {
        let n = self.traces.n;
        let s = self.ris_noise;
        let a2 = self.a * self.a;
        let tr_rm = self.tr_r_m(m);
        let tr_rm2 = (self.alpha[m] * self.element_area).powi(2) * self.traces.r2;
        let tr_rbar = self.alpha_bar[k] * self.element_area * n;
        n * s * a2 * self.beta[(m, k)] * tr_rm + n * n * s * a2 * a2 * (tr_rm2 + tr_rm * tr_rm) * tr_rbar
    }
}

/// Evaluates `kappa`, the traces and the active-noise moments for one RIS state.
pub fn compute_stats(net: &NetworkRealization, ris: &RisState) -> SecondOrderStats {
    let traces = SpatialTraces::compute(&net.r, net.r_squared(), ris.phases());
    let (m_count, k_count) = (net.num_aps(), net.num_users());
    let mut stats = SecondOrderStats {
        a: ris.a(),
        element_area: net.element_area(),
        ris_noise: net.scenario.ris_noise,
        traces,
        beta: net.beta.clone(),
        alpha: net.alpha.clone(),
        alpha_bar: net.alpha_bar.clone(),
        kappa: DMatrix::zeros(m_count, k_count),
        alpha_an: DMatrix::zeros(m_count, k_count),
    };
    for m in 0..m_count {
        for k in 0..k_count {
            let kappa = stats.beta[(m, k)] + stats.tr_xi(m, k);
            let tq = stats.tr_q(m);
            // beta tr(Q_m) + tr(Q_m) tr(R_bar_k Q_m) + tr(Q_m R_bar_k Q_m)
            let an = stats.ris_noise * (stats.beta[(m, k)] * tq + tq * stats.tr_xi(m, k) + stats.tr_q_rbar_q(m, k, m));
            stats.kappa[(m, k)] = kappa;
            stats.alpha_an[(m, k)] = an;
        }
    }
    stats
}

/// `E|q_mk|^4 = 2 kappa^2 + 2 tr(Xi^2)`.
pub fn fourth_moment(stats: &SecondOrderStats, m: usize, k: usize) -> f64 {
    let kappa = stats.kappa[(m, k)];
    2.0 * kappa * kappa + 2.0 * stats.tr_xi_xi(m, k, m, k)
}

/// Mixed fourth-order moments of two aggregated channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossMoments {
    /// `m != m2`, `k != k2`: `E|q_mk q_m2k2^*|^2` and
    /// `E{q_mk^* q_mk2 q_m2k2^* q_m2k} = tr(Xi_{m,k2} Xi_{m2,k})`.
    Distinct { abs_sq: f64, quad: f64 },
    /// `m != m2`, same user.
    SameUser { abs_sq: f64 },
    /// Same AP, `k != k2`.
    SameAp { abs_sq: f64 },
}

impl CrossMoments {
    pub fn abs_sq(&self) -> f64 {
        match *self {
            CrossMoments::Distinct { abs_sq, .. } | CrossMoments::SameUser { abs_sq } | CrossMoments::SameAp { abs_sq } => {
                abs_sq
            }
        }
    }
}

pub fn cross_moments(stats: &SecondOrderStats, m: usize, m2: usize, k: usize, k2: usize) -> Result<CrossMoments> {
    let kk = stats.kappa[(m, k)] * stats.kappa[(m2, k2)];
    match (m == m2, k == k2) {
        (true, true) => Err(Error::IdenticalIndexPair { m, k }),
        (false, false) => Ok(CrossMoments::Distinct {
            abs_sq: kk,
            quad: stats.tr_xi_xi(m, k2, m2, k),
        }),
        (false, true) => Ok(CrossMoments::SameUser {
            abs_sq: kk + stats.tr_xi_xi(m, k, m2, k),
        }),
        (true, false) => Ok(CrossMoments::SameAp {
            abs_sq: kk + stats.tr_xi_xi(m, k, m, k2),
        }),
    }
}

fn complexify(x: &DMatrix<f64>) -> DMatrix<Complex64> {
    x.map(|v| Complex64::new(v, 0.0))
}

/// Dense `Xi_{m,k} = Theta R_bar_k Theta^H R_m`.
pub fn dense_xi(net: &NetworkRealization, ris: &RisState, m: usize, k: usize) -> DMatrix<Complex64> {
    let theta = ris.theta();
    &theta * complexify(&net.r_bar(k)) * theta.adjoint() * complexify(&net.r_m(m))
}

/// Dense `Q_m = Theta^H R_m Theta`.
pub fn dense_q(net: &NetworkRealization, ris: &RisState, m: usize) -> DMatrix<Complex64> {
    let theta = ris.theta();
    theta.adjoint() * complexify(&net.r_m(m)) * &theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn net(n_h: usize, n_v: usize, frac: f64) -> NetworkRealization {
        let mut s = Scenario::default();
        s.num_aps = 3;
        s.num_users = 2;
        s.n_h = n_h;
        s.n_v = n_v;
        s.d_h = frac * s.wavelength;
        s.d_v = frac * s.wavelength;
        s.ris_noise = 0.3;
        let beta = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.5, 0.7, 0.1, 0.9]);
        NetworkRealization::from_gains(&s, beta, vec![2.0, 5.0, 1.0], vec![3.0, 0.5]).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zero_gain_degenerates() {
        let n = net(2, 2, 0.25);
        let st = compute_stats(&n, &RisState::equal(4, 0.0));
        assert_eq!(st.kappa, n.beta);
        assert!(st.alpha_an.iter().all(|&x| x == 0.0));
        assert_eq!(fourth_moment(&st, 1, 1), 2.0 * n.beta[(1, 1)].powi(2));
        let cm = cross_moments(&st, 0, 1, 0, 1).unwrap();
        assert_eq!(cm.abs_sq(), n.beta[(0, 0)] * n.beta[(1, 1)]);
    }

    #[test]
    fn identity_correlation_trace() {
        let n = net(2, 2, 0.5).with_correlation(DMatrix::identity(4, 4)).unwrap();
        let st = compute_stats(&n, &RisState::equal(4, 1.5));
        let area = n.element_area();
        let expected = 1.5f64.powi(2) * (5.0 * area) * (0.5 * area) * 4.0;
        assert_relative_eq!(st.tr_xi(1, 1), expected, max_relative = 1e-14);
    }

    #[test]
    fn identical_pair_is_rejected() {
        let n = net(2, 2, 0.25);
        let st = compute_stats(&n, &RisState::equal(4, 1.0));
        assert!(matches!(cross_moments(&st, 1, 1, 0, 0), Err(Error::IdenticalIndexPair { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn structured_traces_match_dense(
            phases in prop::collection::vec(0.0f64..6.3, 6),
            a in 0.1f64..3.0,
            frac in 0.1f64..0.8,
        ) {
            let n = net(3, 2, frac);
            let ris = RisState::new(phases, a);
            let st = compute_stats(&n, &ris);
            prop_assert!(st.traces.imag_residual < 1e-9);
            for m in 0..3 {
                for k in 0..2 {
                    let xi = dense_xi(&n, &ris, m, k);
                    let tr = xi.trace();
                    prop_assert!(tr.im.abs() <= 1e-9 * tr.re.abs());
                    prop_assert!(rel(st.tr_xi(m, k), tr.re) < 1e-10);
                    for m2 in 0..3 {
                        for k2 in 0..2 {
                            let t = (&xi * dense_xi(&n, &ris, m2, k2)).trace();
                            prop_assert!(t.im.abs() <= 1e-9 * t.re.abs());
                            prop_assert!(rel(st.tr_xi_xi(m, k, m2, k2), t.re) < 1e-10);
                        }
                    }
                }
            }
            let rbar0: DMatrix<Complex64> = complexify(&n.r_bar(0));
            let (q0, q2) = (dense_q(&n, &ris, 0), dense_q(&n, &ris, 2));
            prop_assert!(rel(st.tr_q(0), q0.trace().re) < 1e-12);
            prop_assert!(rel(st.tr_q_rbar_q(0, 0, 2), (&q0 * &rbar0 * &q2).trace().re) < 1e-10);
            prop_assert!(rel(st.tr_q_rbar_q(0, 0, 2), (&rbar0 * &q0 * &q2).trace().re) < 1e-10);
            prop_assert!(rel(st.tr_q_q(0, 2), (&q0 * &q2).trace().re) < 1e-10);
            // Active-noise moment from its general matrix expression.
            let rm = complexify(&n.r_m(1));
            let a2 = Complex64::new(a * a, 0.0);
            let tr_a2rm = rm.trace() * a2;
            let theta = ris.theta();
            let inner = &rm * &rm * a2 + &rm * tr_a2rm;
            let general = tr_a2rm * n.beta[(1, 0)] + (&theta * complexify(&n.r_bar(0)) * theta.adjoint() * inner).trace();
            prop_assert!(rel(st.alpha_an[(1, 0)], general.re * n.scenario.ris_noise) < 1e-10);
        }

        #[test]
        fn moments_are_invariant_to_global_rotation(
            phases in prop::collection::vec(0.0f64..6.3, 4),
            phi in 0.0f64..6.3,
        ) {
            let n = net(2, 2, 0.3);
            let ris = RisState::new(phases, 1.2);
            let (s1, s2) = (compute_stats(&n, &ris), compute_stats(&n, &ris.rotated(phi)));
            for (x, y) in s1.kappa.iter().zip(s2.kappa.iter()) {
                prop_assert!(rel(*x, *y) < 1e-12);
            }
            for (x, y) in s1.alpha_an.iter().zip(s2.alpha_an.iter()) {
                prop_assert!(rel(*x, *y) < 1e-12);
            }
            prop_assert!(rel(s1.traces.prpr, s2.traces.prpr) < 1e-12);
        }

        #[test]
        fn fourth_moment_dominates_square(phases in prop::collection::vec(0.0f64..6.3, 4), a in 0.0f64..4.0) {
            let n = net(2, 2, 0.3);
            let st = compute_stats(&n, &RisState::new(phases, a));
            for m in 0..3 {
                for k in 0..2 {
                    prop_assert!(fourth_moment(&st, m, k) >= st.kappa[(m, k)].powi(2));
                    prop_assert!(st.kappa[(m, k)] > 0.0);
                }
            }
        }
    }
}
