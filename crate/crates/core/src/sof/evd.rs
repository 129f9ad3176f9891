//! Closed-form modification vector from the smallest eigenpair.

use nalgebra::{DMatrix, DVector};

use super::manifold::symmetrized;
use super::ModificationVector;
use crate::error::Result;

fn clipped_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|&x| x.max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Eigenvector of the smallest eigenvalue of `B`, sign chosen so that its
/// positive part is largest (ties keep `+`), then clipped and scaled to
/// `‖m̂‖² = N_t`.
pub fn evd_solve(b: &DMatrix<f64>) -> Result<ModificationVector> {
    let b = symmetrized(b)?;
    let eig = b.symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
    let u: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    let neg = -&u;
    let chosen = if clipped_norm(&neg) > clipped_norm(&u) { neg } else { u };
    ModificationVector::from_direction(&chosen)
}
