//! Small dense eigenproblems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Vec<(f64, Vec<Complex64>)> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    // Symmetrise so round-off in the input cannot leak into the solver.
    let sym = (m + m.adjoint()).map(|c| c * 0.5);
    let eig = sym.symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..eig.eigenvalues.len())
        .map(|i| {
            let v: DVector<Complex64> = eig.eigenvectors.column(i).into_owned();
            (eig.eigenvalues[i], v.iter().copied().collect())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn symmetric_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_hermitian() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[2.0 * one, i, -i, 2.0 * one]);
        let pairs = hermitian_eigen(&m);
        assert!((pairs[0].0 - 1.0).abs() < 1e-14);
        assert!((pairs[1].0 - 3.0).abs() < 1e-14);
        let v = &pairs[0].1;
        let mv: Vec<Complex64> = (0..2)
            .map(|r| m[(r, 0)] * v[0] + m[(r, 1)] * v[1])
            .collect();
        for r in 0..2 {
            assert!((mv[r] - v[r]).norm() < 1e-13);
        }
    }

    #[test]
    fn empty_matrix() {
        assert!(hermitian_eigen(&DMatrix::from_element(0, 0, Complex64::new(0.0, 0.0))).is_empty());
    }
}
