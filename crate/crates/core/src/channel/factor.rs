use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// One `CN(0, 1)` draw.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `CN(0, variance)` draw.
pub fn complex_normal<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    standard_complex_normal(rng) * variance.sqrt()
}

/// `L` with `L L^H` equal to the covariance after clipping negative eigenvalues.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    l: DMatrix<Complex64>,
}

impl CovarianceFactor {
    pub fn from_hermitian(cov: &DMatrix<Complex64>) -> CovarianceFactor {
        let eig = SymmetricEigen::new(cov.clone());
        let mut l = eig.eigenvectors;
        for (j, &lam) in eig.eigenvalues.iter().enumerate() {
            let s = lam.max(0.0).sqrt();
            l.column_mut(j).scale_mut(s);
        }
        CovarianceFactor { l }
    }

    pub fn from_real_symmetric(cov: &DMatrix<f64>) -> CovarianceFactor {
        let eig = SymmetricEigen::new(cov.clone());
        let mut l = eig.eigenvectors;
        for (j, &lam) in eig.eigenvalues.iter().enumerate() {
            l.column_mut(j).scale_mut(lam.max(0.0).sqrt());
        }
        CovarianceFactor {
            l: l.map(|x| Complex64::new(x, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.l
    }

    /// Draw from `CN(0, scale * cov)`.
    pub fn sample_scaled<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> DVector<Complex64> {
        let n = self.l.ncols();
        let w = DVector::from_fn(n, |_, _| standard_complex_normal(rng));
        (&self.l * w) * Complex64::new(scale.sqrt(), 0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<Complex64> {
        self.sample_scaled(1.0, rng)
    }
}

/// Draw one vector from `CN(0, cov)` given its factor.
pub fn sample_correlated_vector<R: Rng + ?Sized>(factor: &CovarianceFactor, rng: &mut R) -> DVector<Complex64> {
    factor.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn zero_covariance_gives_zero() {
        let f = CovarianceFactor::from_real_symmetric(&DMatrix::zeros(3, 3));
        let x = f.sample(&mut substream(1, 0));
        assert!(x.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn identity_sample_covariance() {
        let n = 4;
        let f = CovarianceFactor::from_real_symmetric(&DMatrix::identity(n, n));
        let mut rng = substream(11, 0);
        let draws = 100_000;
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for _ in 0..draws {
            let x = f.sample(&mut rng);
            acc += &x * x.adjoint();
        }
        acc /= Complex64::new(draws as f64, 0.0);
        let id = DMatrix::<Complex64>::identity(n, n);
        let rel = (&acc - &id).norm() / id.norm();
        assert!(rel < 0.05, "relative Frobenius error {rel}");
    }

    #[test]
    fn scaling_matches_sqrt() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let f = CovarianceFactor::from_real_symmetric(&cov);
        let a = f.sample_scaled(4.0, &mut substream(5, 2));
        let b = f.sample(&mut substream(5, 2));
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y * 2.0).norm() < 1e-14);
        }
    }

    #[test]
    fn factor_reproduces_psd_covariance() {
        let cov = DMatrix::from_fn(3, 3, |i, j| Complex64::new(1.0 / (1.0 + (i as f64 - j as f64).abs()), 0.1 * (i as f64 - j as f64)));
        let f = CovarianceFactor::from_hermitian(&cov);
        let back = f.matrix() * f.matrix().adjoint();
        assert!((back - cov).norm() < 1e-12);
    }

    #[test]
    fn clips_negative_eigenvalues() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let f = CovarianceFactor::from_real_symmetric(&cov);
        let back = f.matrix() * f.matrix().adjoint();
        // Eigenvalues 3 and -1; the clipped matrix keeps only the positive part.
        let expected = DMatrix::from_element(2, 2, Complex64::new(1.5, 0.0));
        assert!((back - expected).norm() < 1e-12);
    }
}
