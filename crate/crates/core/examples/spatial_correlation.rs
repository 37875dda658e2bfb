//! Sinc correlation of a planar surface and how it changes with spacing.

use ris_cellfree::scenario::build_correlation_matrix;

fn main() {
    let lambda = 299_792_458.0 / 1.9e9;
    for (label, d) in [("lambda/8", lambda / 8.0), ("lambda/4", lambda / 4.0), ("lambda/2", lambda / 2.0)] {
        let r = build_correlation_matrix(8, 8, d, d, lambda);
        let eig = r.clone().symmetric_eigen().eigenvalues;
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        let frob = r.norm_squared();
        println!(
            "spacing {label:>8}: [R]_12 = {:+.4}, ||R||_F^2 = {frob:8.2}, eigenvalues in [{min:.2e}, {max:.2}]",
            r[(0, 1)]
        );
    }
}
