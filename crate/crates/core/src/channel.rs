//! Clustered multi-path channel generation and the physical, subchannel and
//! pattern channel matrices built from it.
//!
//! A realization holds `L = n_clusters * n_rays` scattering paths. The
//! physical channel is `A_R Λ A_T^H`; applying a nonnegative pattern sampling
//! matrix `M` (one row per transmit antenna, one column per path) gives the
//! pattern channel `A_R Λ (A_T ⊙ M)^H`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Cluster power profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerProfile {
    /// Nearly equal cluster powers (small condition number).
    GoodConditioned,
    /// `100 : 50 : 50 : 1 : ... : 1` cluster powers (large condition number).
    IllConditioned,
}

fn default_spacing() -> f64 {
    0.5
}

/// Generation parameters for a clustered channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_clusters: usize,
    pub n_rays: usize,
    /// Standard deviation of ray angles around their cluster mean, radians.
    pub angle_spread_std: f64,
    /// Transmit element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub tx_spacing_ratio: f64,
    /// Receive element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub rx_spacing_ratio: f64,
    pub power_profile: PowerProfile,
}

impl ChannelConfig {
    /// 16x4 array, 8 clusters of 4 rays, 15 degree spread, ill-conditioned.
    pub fn desk_scale() -> Self {
        Self {
            n_tx: 16,
            n_rx: 4,
            n_clusters: 8,
            n_rays: 4,
            angle_spread_std: 15f64.to_radians(),
            tx_spacing_ratio: 0.5,
            rx_spacing_ratio: 0.5,
            power_profile: PowerProfile::IllConditioned,
        }
    }

    pub fn n_paths(&self) -> usize {
        self.n_clusters * self.n_rays
    }

    /// Total cluster power `γ = N_t N_r / N_ray`, which makes `E‖H‖_F² = N_t N_r`.
    pub fn gamma(&self) -> f64 {
        (self.n_tx * self.n_rx) as f64 / self.n_rays as f64
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_tx == 0 || self.n_rx == 0 || self.n_clusters == 0 || self.n_rays == 0 {
            return fail("array sizes, cluster and ray counts must be at least 1");
        }
        if self.n_rx > self.n_tx {
            return fail("n_rx must not exceed n_tx");
        }
        if !(self.tx_spacing_ratio > 0.0 && self.rx_spacing_ratio > 0.0)
            || !self.tx_spacing_ratio.is_finite()
            || !self.rx_spacing_ratio.is_finite()
        {
            return fail("antenna spacing ratios must be positive and finite");
        }
        if !(self.angle_spread_std >= 0.0 && self.angle_spread_std.is_finite()) {
            return fail("angle_spread_std must be nonnegative and finite");
        }
        Ok(())
    }
}

/// One scattering path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringPath {
    pub gain: Complex64,
    /// Angle of arrival, radians.
    pub aoa: f64,
    /// Angle of departure, radians.
    pub aod: f64,
    pub cluster_index: usize,
}

/// Uniform linear array response `(1/√n) [exp(-j 2π d k sin θ)]_k`.
pub fn array_response(angle: f64, n: usize, spacing_ratio: f64) -> CVector {
    let scale = 1.0 / (n as f64).sqrt();
    let phase_step = -2.0 * PI * spacing_ratio * angle.sin();
    CVector::from_fn(n, |k, _| Complex64::from_polar(scale, phase_step * k as f64))
}

/// Ratio pattern `100, 50, 50, 1, 1, ...` truncated or padded to `n`.
fn ill_conditioned_ratios(n: usize) -> Vec<f64> {
    const HEAD: [f64; 3] = [100.0, 50.0, 50.0];
    (0..n).map(|i| HEAD.get(i).copied().unwrap_or(1.0)).collect()
}

/// Cluster powers summing to `gamma`.
///
/// The ill-conditioned profile is deterministic; the good-conditioned one
/// draws `|N(1, 0.1²)|` weights from `rng` and renormalizes.
pub fn draw_cluster_powers<R: Rng + ?Sized>(
    n_clusters: usize,
    profile: PowerProfile,
    gamma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n_clusters < 1 {
        return Err(Error::InvalidConfig("n_clusters must be at least 1".into()));
    }
    let weights = match profile {
        PowerProfile::IllConditioned => ill_conditioned_ratios(n_clusters),
        PowerProfile::GoodConditioned => {
            let normal = Normal::new(1.0, 0.1).expect("valid normal parameters");
            (0..n_clusters)
                .map(|_| {
                    let w: f64 = normal.sample(rng);
                    // |N(1, 0.01)| is zero with probability 0; keep strictly positive anyway
                    w.abs().max(f64::MIN_POSITIVE)
                })
                .collect()
        }
    };
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| gamma * w / total).collect())
}

/// A drawn channel: its paths plus cached response matrices.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    config: ChannelConfig,
    paths: Vec<ScatteringPath>,
    cluster_powers: Vec<f64>,
    rx_responses: CMatrix,
    tx_responses: CMatrix,
}

impl ChannelRealization {
    /// Assemble a realization from explicit paths.
    ///
    /// `paths.len()` must equal `n_clusters * n_rays`.
    pub fn from_paths(config: ChannelConfig, paths: Vec<ScatteringPath>, cluster_powers: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if paths.len() != config.n_paths() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} paths", config.n_paths()),
                got: format!("{} paths", paths.len()),
            });
        }
        let finite = paths
            .iter()
            .all(|p| p.gain.re.is_finite() && p.gain.im.is_finite() && p.aoa.is_finite() && p.aod.is_finite());
        if !finite {
            return Err(Error::NonFinite("scattering paths"));
        }
        let l = paths.len();
        let mut rx_responses = CMatrix::zeros(config.n_rx, l);
        let mut tx_responses = CMatrix::zeros(config.n_tx, l);
        for (j, p) in paths.iter().enumerate() {
            rx_responses.set_column(j, &array_response(p.aoa, config.n_rx, config.rx_spacing_ratio));
            tx_responses.set_column(j, &array_response(p.aod, config.n_tx, config.tx_spacing_ratio));
        }
        Ok(Self { config, paths, cluster_powers, rx_responses, tx_responses })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn paths(&self) -> &[ScatteringPath] {
        &self.paths
    }

    pub fn cluster_powers(&self) -> &[f64] {
        &self.cluster_powers
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn gains(&self) -> Vec<Complex64> {
        self.paths.iter().map(|p| p.gain).collect()
    }

    /// `A_R`, one receive response per column.
    pub fn rx_responses(&self) -> &CMatrix {
        &self.rx_responses
    }

    /// `A_T`, one transmit response per column.
    pub fn tx_responses(&self) -> &CMatrix {
        &self.tx_responses
    }

    /// `A_R Λ B^H` for a (possibly pattern-weighted) transmit response matrix `B`.
    fn combine(&self, tx: &CMatrix) -> CMatrix {
        let mut weighted = self.rx_responses.clone();
        for (j, p) in self.paths.iter().enumerate() {
            weighted.column_mut(j).apply(|z| *z *= p.gain);
        }
        weighted * tx.adjoint()
    }

    /// Physical channel `A_R Λ A_T^H`.
    pub fn physical_channel(&self) -> CMatrix {
        self.combine(&self.tx_responses)
    }

    /// Unit-norm subchannel `a_R(θ_i) a_T(φ_i)^H` of path `index` (0-based).
    pub fn subchannel(&self, index: usize) -> Result<CMatrix> {
        if index >= self.paths.len() {
            return Err(Error::IndexOutOfRange { index, len: self.paths.len() });
        }
        Ok(self.rx_responses.column(index) * self.tx_responses.column(index).adjoint())
    }

    /// All subchannels in path order.
    pub fn subchannels(&self) -> Vec<CMatrix> {
        (0..self.paths.len()).map(|i| self.rx_responses.column(i) * self.tx_responses.column(i).adjoint()).collect()
    }

    /// Pattern channel `A_R Λ (A_T ⊙ M)^H`.
    pub fn pattern_channel(&self, pattern: &PatternMatrix) -> Result<CMatrix> {
        let m = pattern.entries();
        if m.nrows() != self.config.n_tx || m.ncols() != self.paths.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.config.n_tx, self.paths.len()),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        let shaped = self.tx_responses.zip_map(m, |a, w| a * w);
        Ok(self.combine(&shaped))
    }
}

/// Draw a realization. Fully determined by `(config, seed)`.
///
/// Draw order: cluster powers, then per cluster its mean AoA and AoD followed
/// by `(aoa, aod, gain)` for each ray.
pub fn generate_realization(config: &ChannelConfig, seed: u64) -> Result<ChannelRealization> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let powers = draw_cluster_powers(config.n_clusters, config.power_profile, config.gamma(), &mut rng)?;
    let half_width = 3f64.sqrt() * config.angle_spread_std;
    let mut paths = Vec::with_capacity(config.n_paths());
    for (cluster, &power) in powers.iter().enumerate() {
        let mean_aoa = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let mean_aod = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let component_std = (power / 2.0).sqrt();
        for _ in 0..config.n_rays {
            let aoa = spread(&mut rng, mean_aoa, half_width);
            let aod = spread(&mut rng, mean_aod, half_width);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            paths.push(ScatteringPath {
                gain: Complex64::new(re * component_std, im * component_std),
                aoa,
                aod,
                cluster_index: cluster,
            });
        }
    }
    ChannelRealization::from_paths(config.clone(), paths, powers)
}

fn spread<R: Rng>(rng: &mut R, mean: f64, half_width: f64) -> f64 {
    if half_width == 0.0 {
        mean
    } else {
        rng.random_range(mean - half_width..=mean + half_width)
    }
}

/// Nonnegative `n_tx x L` pattern sampling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatrix(DMatrix<f64>);

impl PatternMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        for (col, column) in entries.column_iter().enumerate() {
            for (row, &value) in column.iter().enumerate() {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::InvalidPatternEntry { row, col, value });
                }
            }
        }
        Ok(Self(entries))
    }

    /// Omnidirectional elements: every entry 1.
    pub fn ones(n_tx: usize, n_paths: usize) -> Self {
        Self(DMatrix::from_element(n_tx, n_paths, 1.0))
    }

    pub fn zeros(n_tx: usize, n_paths: usize) -> Self {
        Self(DMatrix::zeros(n_tx, n_paths))
    }

    /// Same pattern on every antenna: `1_{n_tx} m^T`.
    pub fn single_pattern(n_tx: usize, samples: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_fn(n_tx, samples.len(), |_, j| samples[j]))
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n_tx(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_paths(&self) -> usize {
        self.0.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_sq;
    use approx::assert_abs_diff_eq;

    fn single_path_config(n_tx: usize, n_rx: usize) -> ChannelConfig {
        ChannelConfig {
            n_tx,
            n_rx,
            n_clusters: 1,
            n_rays: 1,
            angle_spread_std: 0.0,
            tx_spacing_ratio: 0.5,
            rx_spacing_ratio: 0.5,
            power_profile: PowerProfile::GoodConditioned,
        }
    }

    fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn broadside_response_is_flat() {
        let a = array_response(0.0, 4, 0.5);
        for z in a.iter() {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn endfire_half_wavelength_alternates() {
        let a = array_response(FRAC_PI_2, 2, 0.5);
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(a[0].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].re, -s, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ill_conditioned_powers_follow_ratio_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = draw_cluster_powers(10, PowerProfile::IllConditioned, 1.0, &mut rng).unwrap();
        let expected = [100.0, 50.0, 50.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        for (got, want) in p.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want / 207.0, epsilon = 1e-15);
        }
        let p = draw_cluster_powers(3, PowerProfile::IllConditioned, 200.0, &mut rng).unwrap();
        assert_eq!(p, vec![100.0, 50.0, 50.0]);
    }

    #[test]
    fn single_good_cluster_takes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = draw_cluster_powers(1, PowerProfile::GoodConditioned, 5.0, &mut rng).unwrap();
        assert_eq!(p, vec![5.0]);
        assert!(draw_cluster_powers(0, PowerProfile::GoodConditioned, 5.0, &mut rng).is_err());
    }

    #[test]
    fn good_powers_sum_to_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = draw_cluster_powers(8, PowerProfile::GoodConditioned, 16.0, &mut rng).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 16.0, epsilon = 1e-12);
        assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn config_validation() {
        let mut c = ChannelConfig::desk_scale();
        assert!(c.validate().is_ok());
        c.n_rx = 32;
        assert!(c.validate().is_err());
        let mut c = ChannelConfig::desk_scale();
        c.n_rays = 0;
        assert!(c.validate().is_err());
        let mut c = ChannelConfig::desk_scale();
        c.tx_spacing_ratio = 0.0;
        assert!(c.validate().is_err());
        let mut c = ChannelConfig::desk_scale();
        c.angle_spread_std = -0.1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn generation_is_seeded_and_sized() {
        let mut cfg = ChannelConfig::desk_scale();
        cfg.n_clusters = 10;
        cfg.n_rays = 8;
        let a = generate_realization(&cfg, 42).unwrap();
        let b = generate_realization(&cfg, 42).unwrap();
        assert_eq!(a.n_paths(), 80);
        assert_eq!(a.paths(), b.paths());
        let c = generate_realization(&cfg, 43).unwrap();
        assert_ne!(a.paths(), c.paths());
    }

    #[test]
    fn generated_angles_stay_in_spread_window() {
        let cfg = ChannelConfig::desk_scale();
        let bound = FRAC_PI_2 + 3f64.sqrt() * cfg.angle_spread_std + 1e-12;
        for seed in 0..20 {
            let r = generate_realization(&cfg, seed).unwrap();
            assert!(r.paths().iter().all(|p| p.aoa.abs() <= bound && p.aod.abs() <= bound));
            assert_abs_diff_eq!(r.cluster_powers().iter().sum::<f64>(), cfg.gamma(), epsilon = 1e-9);
        }
    }

    #[test]
    fn single_unit_path_at_broadside() {
        let cfg = single_path_config(4, 2);
        let path = ScatteringPath { gain: Complex64::new(1.0, 0.0), aoa: 0.0, aod: 0.0, cluster_index: 0 };
        let r = ChannelRealization::from_paths(cfg, vec![path], vec![1.0]).unwrap();
        let h = r.physical_channel();
        let expected = 1.0 / 8f64.sqrt();
        for z in h.iter() {
            assert_abs_diff_eq!(z.re, expected, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        }
        let h1 = r.subchannel(0).unwrap();
        assert!(max_abs_diff(&h, &h1) < 1e-15);
        assert!(r.subchannel(1).is_err());
    }

    #[test]
    fn zero_gains_give_zero_channel() {
        let cfg = ChannelConfig::desk_scale();
        let r = generate_realization(&cfg, 5).unwrap();
        let silent: Vec<_> =
            r.paths().iter().map(|p| ScatteringPath { gain: Complex64::new(0.0, 0.0), ..*p }).collect();
        let r0 = ChannelRealization::from_paths(cfg, silent, r.cluster_powers().to_vec()).unwrap();
        assert!(r0.physical_channel().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    /// Term-by-term summation straight from the response formula.
    fn direct_sum_oracle(r: &ChannelRealization) -> CMatrix {
        let cfg = r.config();
        let mut h = CMatrix::zeros(cfg.n_rx, cfg.n_tx);
        for p in r.paths() {
            for n in 0..cfg.n_rx {
                for m in 0..cfg.n_tx {
                    let phase = 2.0
                        * PI
                        * (cfg.tx_spacing_ratio * m as f64 * p.aod.sin()
                            - cfg.rx_spacing_ratio * n as f64 * p.aoa.sin());
                    h[(n, m)] += p.gain * Complex64::from_polar(1.0, phase) / ((cfg.n_rx * cfg.n_tx) as f64).sqrt();
                }
            }
        }
        h
    }

    #[test]
    fn matrix_form_matches_direct_sum() {
        let cfg = ChannelConfig::desk_scale();
        for seed in 0..10 {
            let r = generate_realization(&cfg, seed).unwrap();
            assert!(max_abs_diff(&r.physical_channel(), &direct_sum_oracle(&r)) < 1e-12);
        }
    }

    #[test]
    fn subchannels_are_unit_norm_and_sum_to_channel() {
        let cfg = ChannelConfig::desk_scale();
        let r = generate_realization(&cfg, 11).unwrap();
        let mut sum = CMatrix::zeros(cfg.n_rx, cfg.n_tx);
        for (i, p) in r.paths().iter().enumerate() {
            let h = r.subchannel(i).unwrap();
            assert_abs_diff_eq!(frobenius_sq(&h), 1.0, epsilon = 1e-12);
            sum += h * p.gain;
        }
        assert!(max_abs_diff(&sum, &r.physical_channel()) < 1e-12);
    }

    #[test]
    fn omni_pattern_reduces_to_physical_channel() {
        let cfg = ChannelConfig::desk_scale();
        let r = generate_realization(&cfg, 2).unwrap();
        let ones = PatternMatrix::ones(cfg.n_tx, r.n_paths());
        assert_eq!(r.pattern_channel(&ones).unwrap(), r.physical_channel());
        let zeros = PatternMatrix::zeros(cfg.n_tx, r.n_paths());
        assert!(r.pattern_channel(&zeros).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_pattern_matches_gain_redistribution() {
        let cfg = ChannelConfig::desk_scale();
        let r = generate_realization(&cfg, 8).unwrap();
        let m: Vec<f64> = (0..r.n_paths()).map(|i| 0.25 + (i as f64 * 0.37).sin().abs()).collect();
        let pattern = PatternMatrix::single_pattern(cfg.n_tx, &m).unwrap();
        let mut expected = CMatrix::zeros(cfg.n_rx, cfg.n_tx);
        for (i, p) in r.paths().iter().enumerate() {
            expected += r.subchannel(i).unwrap() * (p.gain * m[i]);
        }
        assert!(max_abs_diff(&r.pattern_channel(&pattern).unwrap(), &expected) < 1e-12);
    }

    #[test]
    fn pattern_channel_rejects_bad_shapes_and_entries() {
        let cfg = ChannelConfig::desk_scale();
        let r = generate_realization(&cfg, 1).unwrap();
        assert!(r.pattern_channel(&PatternMatrix::ones(cfg.n_tx, r.n_paths() + 1)).is_err());
        let mut bad = DMatrix::from_element(cfg.n_tx, r.n_paths(), 1.0);
        bad[(2, 3)] = -0.5;
        assert!(matches!(PatternMatrix::new(bad), Err(Error::InvalidPatternEntry { row: 2, col: 3, .. })));
    }

    #[test]
    fn from_paths_checks_length() {
        let cfg = ChannelConfig::desk_scale();
        assert!(ChannelRealization::from_paths(cfg, vec![], vec![]).is_err());
    }
}
