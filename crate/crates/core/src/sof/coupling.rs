//! Pairwise coupling terms between a path being redesigned and one already fixed.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ModificationVector;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::CVector;

/// Correlation of two receive responses,
/// `(1/N_r) Σ_n exp(j 2π d n (sin θ_k − sin θ_i))`.
pub fn receive_correlation(aoa_i: f64, aoa_k: f64, n_rx: usize, spacing_ratio: f64) -> Complex64 {
    if n_rx == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let shift = 2.0 * PI * spacing_ratio * (aoa_k.sin() - aoa_i.sin());
    let sum: Complex64 = (0..n_rx).map(|n| Complex64::from_polar(1.0, shift * n as f64)).sum();
    sum / n_rx as f64
}

/// Transmit coupling vector with entries
/// `(1/N_t) m̂_k(n) exp(j 2π d n (sin φ_i − sin φ_k))`.
pub fn coupling_vector(
    m_hat_k: &ModificationVector,
    aod_i: f64,
    aod_k: f64,
    n_tx: usize,
    spacing_ratio: f64,
) -> Result<CVector> {
    if m_hat_k.len() != n_tx {
        return Err(Error::ShapeMismatch {
            expected: format!("{n_tx} entries"),
            got: format!("{} entries", m_hat_k.len()),
        });
    }
    let shift = 2.0 * PI * spacing_ratio * (aod_i.sin() - aod_k.sin());
    let scale = 1.0 / n_tx as f64;
    Ok(CVector::from_iterator(
        n_tx,
        m_hat_k.values().iter().enumerate().map(|(n, &m)| Complex64::from_polar(scale * m, shift * n as f64)),
    ))
}

/// `Re(|ρ|² conj(b) b^T)`, a real symmetric PSD matrix.
///
/// For real `m`, `mᵀ B m = |ρ|² |bᵀ m|²`.
pub fn coupling_matrix(rho_r: Complex64, b: &CVector) -> DMatrix<f64> {
    let w = rho_r.norm_sqr();
    let n = b.len();
    let mut out = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let v = w * (b[r].conj() * b[c]).re;
            out[(r, c)] = v;
            out[(c, r)] = v;
        }
    }
    out
}

/// Coupling of one ordered pair: receive correlation, transmit vector and
/// the quadratic-form matrix built from them.
#[derive(Debug, Clone)]
pub struct CouplingData {
    pub rho_r: Complex64,
    pub b: CVector,
    pub matrix: DMatrix<f64>,
}

impl CouplingData {
    /// Coupling of `target` against the fixed path `partner`, whose current
    /// modification vector is `m_hat_partner`.
    pub fn between(
        realization: &ChannelRealization,
        target: usize,
        partner: usize,
        m_hat_partner: &ModificationVector,
    ) -> Result<Self> {
        let paths = realization.paths();
        for index in [target, partner] {
            if index >= paths.len() {
                return Err(Error::IndexOutOfRange { index, len: paths.len() });
            }
        }
        let cfg = realization.config();
        let (pi, pk) = (&paths[target], &paths[partner]);
        let rho_r = receive_correlation(pi.aoa, pk.aoa, cfg.n_rx, cfg.rx_spacing_ratio);
        let b = coupling_vector(m_hat_partner, pi.aod, pk.aod, cfg.n_tx, cfg.tx_spacing_ratio)?;
        let matrix = coupling_matrix(rho_r, &b);
        Ok(Self { rho_r, b, matrix })
    }
}

/// Sum of coupling matrices of `target` against every path in `partners`.
pub fn coupling_sum(
    realization: &ChannelRealization,
    target: usize,
    partners: &[usize],
    modifications: &[ModificationVector],
) -> Result<DMatrix<f64>> {
    let n_tx = realization.config().n_tx;
    let mut sum = DMatrix::zeros(n_tx, n_tx);
    for &k in partners {
        let m_hat = modifications.get(k).ok_or(Error::IndexOutOfRange { index: k, len: modifications.len() })?;
        sum += CouplingData::between(realization, target, k, m_hat)?.matrix;
    }
    Ok(sum)
}
