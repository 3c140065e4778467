//! Small dense complex-matrix helpers shared by the group tables and the
//! scattering solver.

use faer::Mat;
use num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = Mat<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

/// Builds a matrix from row-major nested rows.
pub fn from_rows(rows: &[&[Complex64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn scalar(z: Complex64) -> CMatrix {
    Mat::from_fn(1, 1, |_, _| z)
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b
}

/// Conjugate transpose.
pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.adjoint().to_owned()
}

pub fn transpose(a: &CMatrix) -> CMatrix {
    a.transpose().to_owned()
}

/// Elementwise complex conjugate.
pub fn conjugate(a: &CMatrix) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj())
}

pub fn trace(a: &CMatrix) -> Complex64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Largest elementwise modulus of `a - b`. Shapes must agree.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// `max |(A^dagger A - 1)_ij|`; zero for an exactly unitary matrix.
pub fn unitarity_defect(a: &CMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let prod = a.adjoint() * a;
    max_abs_diff(&prod, &identity(a.nrows()))
}

pub fn is_unitary(a: &CMatrix, tol: f64) -> bool {
    unitarity_defect(a) <= tol
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut t = theta.rem_euclid(tau);
    if t >= tau {
        t -= tau;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let a = from_rows(&[&[ONE, c(2.0, 0.0)], &[c(3.0, 0.0), c(4.0, 0.0)]]);
        let k = kron(&a, &identity(2));
        assert_eq!(k.nrows(), 4);
        assert_eq!(k[(0, 2)], c(2.0, 0.0));
        assert_eq!(k[(1, 3)], c(2.0, 0.0));
        assert_eq!(k[(0, 3)], ZERO);
        assert_eq!(k[(3, 1)], c(3.0, 0.0));
    }

    #[test]
    fn unitarity_defect_detects_scaling() {
        let u = from_rows(&[&[ZERO, ONE], &[-ONE, ZERO]]);
        assert!(unitarity_defect(&u) < 1e-15);
        let m = from_rows(&[&[ONE, ZERO], &[ZERO, c(2.0, 0.0)]]);
        assert!((unitarity_defect(&m) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(0.0), 0.0);
        assert!((wrap_phase(-0.5) - (std::f64::consts::TAU - 0.5)).abs() < 1e-15);
        assert!(wrap_phase(-1e-300) < std::f64::consts::TAU);
        assert!((wrap_phase(7.0) - (7.0 - std::f64::consts::TAU)).abs() < 1e-15);
    }
}
