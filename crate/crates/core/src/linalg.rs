//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// `‖A‖_F²`.
pub fn frobenius_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `Tr(A^H B)`, i.e. the Frobenius inner product `Σ conj(a_ij) b_ij`.
pub fn trace_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn all_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest singular value with its left/right singular vectors.
///
/// Returns `(sigma, u, w)` with `A w = sigma u`. For the zero matrix the
/// vectors are the first canonical basis vectors.
pub fn top_singular_triplet(a: &CMatrix) -> (f64, CVector, CVector) {
    let svd = a.clone().svd(true, true);
    let (idx, sigma) = svd.singular_values.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, s)| {
        if s > best.1 {
            (i, s)
        } else {
            best
        }
    });
    let u = svd.u.expect("u requested").column(idx).into_owned();
    let w = svd.v_t.expect("v_t requested").row(idx).adjoint();
    (sigma.max(0.0), u, w)
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}
