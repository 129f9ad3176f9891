//! Achievable rate and subchannel correlation diagnostics.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, trace_inner, CMatrix};

/// Convert a decibel SNR to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Transmit SNR together with the receive array size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateContext {
    snr_linear: f64,
    n_rx: usize,
}

impl RateContext {
    pub fn new(snr_linear: f64, n_rx: usize) -> Result<Self> {
        if !(snr_linear >= 0.0 && snr_linear.is_finite()) {
            return Err(Error::InvalidConfig(format!("snr must be nonnegative, got {snr_linear}")));
        }
        if n_rx == 0 {
            return Err(Error::InvalidConfig("n_rx must be at least 1".into()));
        }
        Ok(Self { snr_linear, n_rx })
    }

    pub fn from_db(snr_db: f64, n_rx: usize) -> Result<Self> {
        Self::new(db_to_linear(snr_db), n_rx)
    }

    pub fn snr_linear(&self) -> f64 {
        self.snr_linear
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    /// Per-stream SNR `ρ / N_r`.
    pub fn zeta(&self) -> f64 {
        self.snr_linear / self.n_rx as f64
    }
}

fn check_channel(h: &CMatrix, ctx: &RateContext) -> Result<()> {
    if h.nrows() != ctx.n_rx {
        return Err(Error::ShapeMismatch {
            expected: format!("{} rows", ctx.n_rx),
            got: format!("{} rows", h.nrows()),
        });
    }
    if !all_finite(h) {
        return Err(Error::NonFinite("channel matrix"));
    }
    Ok(())
}

/// `log2 det(I + (ρ/N_r) H H^H)` in bits/s/Hz, via a Cholesky factorization.
pub fn achievable_rate(h: &CMatrix, ctx: &RateContext) -> Result<f64> {
    check_channel(h, ctx)?;
    let n = h.nrows();
    let gram = h * h.adjoint() * Complex64::new(ctx.zeta(), 0.0);
    let system = CMatrix::identity(n, n) + gram;
    let chol = system.cholesky().ok_or(Error::NonFinite("rate determinant"))?;
    let ln_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum();
    Ok((ln_det / LN_2).max(0.0))
}

/// `Σ_i log2(1 + ζ σ_i²)` over the nonzero singular values of `H`.
///
/// Singular values below `1e-12 σ_max` count as zero.
pub fn rate_via_singular_values(h: &CMatrix, ctx: &RateContext) -> Result<f64> {
    check_channel(h, ctx)?;
    let sv = h.singular_values();
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let cutoff = 1e-12 * sigma_max;
    let zeta = ctx.zeta();
    let nats: f64 = sv.iter().filter(|&&s| s > cutoff).map(|&s| (zeta * s * s).ln_1p()).sum();
    Ok(nats / LN_2)
}

/// Gram matrix `G_ij = Tr(H_i^H H_j)` of a set of equally shaped matrices.
///
/// Only the upper triangle is evaluated; the lower one is its conjugate
/// mirror, so the result is exactly Hermitian.
pub fn subchannel_gram(subchannels: &[CMatrix]) -> Result<CMatrix> {
    let l = subchannels.len();
    if let Some(first) = subchannels.first() {
        let shape = first.shape();
        if let Some(bad) = subchannels.iter().find(|h| h.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", shape.0, shape.1),
                got: format!("{}x{}", bad.nrows(), bad.ncols()),
            });
        }
    }
    let mut gram = CMatrix::zeros(l, l);
    for i in 0..l {
        gram[(i, i)] = Complex64::new(trace_inner(&subchannels[i], &subchannels[i]).re, 0.0);
        for j in i + 1..l {
            let g = trace_inner(&subchannels[i], &subchannels[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g.conj();
        }
    }
    Ok(gram)
}

/// Off-diagonal row energy `Σ_{j≠i} |G_ij|²` for each row `i`.
pub fn correlation_levels(gram: &CMatrix) -> Vec<f64> {
    gram.row_iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, g)| g.norm_sqr()).sum())
        .collect()
}

/// Gram matrix of the current subchannels plus its correlation levels.
#[derive(Debug, Clone)]
pub struct CorrelationState {
    pub gram: CMatrix,
    pub levels: Vec<f64>,
}

impl CorrelationState {
    pub fn from_gram(gram: CMatrix) -> Self {
        let levels = correlation_levels(&gram);
        Self { gram, levels }
    }

    pub fn from_subchannels(subchannels: &[CMatrix]) -> Result<Self> {
        Ok(Self::from_gram(subchannel_gram(subchannels)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::array_response;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    /// Determinant by plain Gaussian elimination with partial pivoting.
    fn det_by_elimination(mut a: CMatrix) -> Complex64 {
        let n = a.nrows();
        let mut det = Complex64::new(1.0, 0.0);
        for c in 0..n {
            let pivot = (c..n).max_by(|&x, &y| a[(x, c)].norm().total_cmp(&a[(y, c)].norm())).unwrap();
            if pivot != c {
                a.swap_rows(pivot, c);
                det = -det;
            }
            let d = a[(c, c)];
            det *= d;
            for r in c + 1..n {
                let f = a[(r, c)] / d;
                for k in c..n {
                    let v = a[(c, k)];
                    a[(r, k)] -= f * v;
                }
            }
        }
        det
    }

    #[test]
    fn zero_channel_has_zero_rate() {
        let ctx = RateContext::new(10.0, 4).unwrap();
        let h = CMatrix::zeros(4, 16);
        assert_eq!(achievable_rate(&h, &ctx).unwrap(), 0.0);
        assert_eq!(rate_via_singular_values(&h, &ctx).unwrap(), 0.0);
    }

    #[test]
    fn scaled_identity_matches_closed_form() {
        let (nt, nr, rho) = (32usize, 8usize, 10.0);
        let mut h = CMatrix::zeros(nr, nt);
        for i in 0..nr {
            h[(i, i)] = Complex64::new((nt as f64).sqrt(), 0.0);
        }
        let ctx = RateContext::new(rho, nr).unwrap();
        let closed = nr as f64 * (1.0 + rho * nt as f64 / nr as f64).log2();
        assert_abs_diff_eq!(closed, 8.0 * 41f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(closed, 42.860_416_036_944_67, epsilon = 1e-9);
        let system = CMatrix::identity(nr, nr) + &h * h.adjoint() * Complex64::new(ctx.zeta(), 0.0);
        let by_det = det_by_elimination(system).re.log2();
        assert_abs_diff_eq!(achievable_rate(&h, &ctx).unwrap(), closed, epsilon = 1e-9);
        assert_abs_diff_eq!(by_det, closed, epsilon = 1e-9);
    }

    #[test]
    fn rank_one_rate() {
        let a = array_response(0.3, 4, 0.5);
        let b = array_response(-0.7, 16, 0.5);
        let s = 3.5;
        let h = &a * b.adjoint() * Complex64::new(s, 0.0);
        let ctx = RateContext::new(20.0, 4).unwrap();
        let expected = (1.0 + ctx.zeta() * s * s).log2();
        assert_abs_diff_eq!(rate_via_singular_values(&h, &ctx).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(achievable_rate(&h, &ctx).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn determinant_and_singular_value_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let h = random_matrix(&mut rng, 4, 16);
            let ctx = RateContext::new(rng.random_range(0.0..1000.0), 4).unwrap();
            let a = achievable_rate(&h, &ctx).unwrap();
            let b = rate_via_singular_values(&h, &ctx).unwrap();
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_channels() {
        let ctx = RateContext::new(1.0, 4).unwrap();
        assert!(achievable_rate(&CMatrix::zeros(3, 8), &ctx).is_err());
        let mut h = CMatrix::zeros(4, 8);
        h[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(achievable_rate(&h, &ctx), Err(Error::NonFinite(_))));
        assert!(RateContext::new(-1.0, 4).is_err());
    }

    #[test]
    fn gram_of_normalized_subchannels() {
        let a = array_response(0.2, 4, 0.5);
        let b = array_response(1.1, 8, 0.5);
        let h = &a * b.adjoint();
        let g = subchannel_gram(std::slice::from_ref(&h)).unwrap();
        assert_abs_diff_eq!(g[(0, 0)].re, 1.0, epsilon = 1e-12);
        let g = subchannel_gram(&[h.clone(), h]).unwrap();
        assert_abs_diff_eq!(g[(0, 1)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[(0, 1)].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gram_rejects_mixed_shapes() {
        assert!(subchannel_gram(&[CMatrix::zeros(2, 3), CMatrix::zeros(3, 2)]).is_err());
    }

    #[test]
    fn levels_of_simple_grams() {
        assert_eq!(correlation_levels(&CMatrix::identity(1, 1)), vec![0.0]);
        assert_eq!(correlation_levels(&CMatrix::identity(3, 3)), vec![0.0; 3]);
        let mut g = CMatrix::identity(2, 2);
        g[(0, 1)] = Complex64::new(0.3, 0.4);
        g[(1, 0)] = Complex64::new(0.3, -0.4);
        let levels = correlation_levels(&g);
        assert_abs_diff_eq!(levels[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(levels[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn rate_grows_with_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_matrix(&mut rng, 4, 16);
        let mut last = 0.0;
        for db in [-10.0, 0.0, 5.0, 10.0, 20.0, 40.0] {
            let r = achievable_rate(&h, &RateContext::from_db(db, 4).unwrap()).unwrap();
            assert!(r >= last);
            last = r;
        }
    }
}
