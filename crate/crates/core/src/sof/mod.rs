//! Multi-pattern design: one modification vector per path, chosen greedily
//! to decorrelate the subchannels, followed by a gain allocation.

mod coupling;
mod evd;
mod manifold;

pub use coupling::{coupling_matrix, coupling_sum, coupling_vector, receive_correlation, CouplingData};
pub use evd::evd_solve;
pub use manifold::{manifold_cg, manifold_cg_traced, CgOptions, CgOutcome, RetractionMode};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, PatternMatrix};
use crate::eoga::{
    gains_to_pattern_column, power_scaling, power_scaling_with_phases, solve_minmax_allocation, GainAllocation,
    MinMaxOptions, NormalizationMode,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::metrics::correlation_levels;

const NORM_TOL: f64 = 1e-9;

/// Nonnegative per-antenna weights with `‖m̂‖² = N_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModificationVector(DVector<f64>);

impl ModificationVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Empty("modification vector"));
        }
        for (row, &value) in values.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidPatternEntry { row, col: 0, value });
            }
        }
        let v = DVector::from_vec(values);
        let norm2 = v.norm_squared();
        if (norm2 - n as f64).abs() > NORM_TOL {
            return Err(Error::InvalidConfig(format!("modification vector must have squared norm {n}, got {norm2}")));
        }
        Ok(Self(v))
    }

    pub fn ones(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0))
    }

    /// `√N_t · max(x, 0) / ‖max(x, 0)‖`.
    pub fn from_direction(x: &DVector<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Empty("modification vector"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("modification direction"));
        }
        let clipped = x.map(|v| v.max(0.0));
        let norm = clipped.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateClip);
        }
        Ok(Self(clipped * ((x.len() as f64).sqrt() / norm)))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Solver for each per-path subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SofSolver {
    #[default]
    ManifoldCg,
    Evd,
}

/// Output of [`sof_run`].
#[derive(Debug, Clone)]
pub struct SofDesign {
    /// `m̂_i` per path, in path order.
    pub modifications: Vec<ModificationVector>,
    /// Paths in the order they were visited.
    pub order: Vec<usize>,
    pub allocation: GainAllocation,
    pub delta: f64,
    /// Per-path amplitude `m_i`; column `i` of the pattern is `m_i m̂_i`.
    pub samples: Vec<f64>,
    pub pattern: PatternMatrix,
    /// Correlation levels of the final modified subchannels.
    pub levels: Vec<f64>,
    /// Subproblems whose solution clipped to zero and fell back to all ones.
    pub fallbacks: usize,
}

/// `a_R(θ_i) (a_T(φ_i) ⊙ m̂)^H`, unit Frobenius norm when `‖m̂‖² = N_t`.
pub fn modified_subchannel(
    realization: &ChannelRealization,
    index: usize,
    m_hat: &ModificationVector,
) -> Result<CMatrix> {
    let len = realization.n_paths();
    if index >= len {
        return Err(Error::IndexOutOfRange { index, len });
    }
    let tx = modified_tx(realization, index, m_hat)?;
    Ok(realization.rx_responses().column(index) * tx.adjoint())
}

fn modified_tx(
    realization: &ChannelRealization,
    index: usize,
    m_hat: &ModificationVector,
) -> Result<DVector<Complex64>> {
    let a = realization.tx_responses().column(index);
    if m_hat.len() != a.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} entries", a.len()),
            got: format!("{} entries", m_hat.len()),
        });
    }
    Ok(a.zip_map(m_hat.values(), |z, m| z * m))
}

/// Lowest index attaining the maximum level among unvisited paths.
fn select_next(levels: &[f64], visited: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &g) in levels.iter().enumerate() {
        if visited[i] {
            continue;
        }
        if best.is_none_or(|(_, b)| g > b) {
            best = Some((i, g));
        }
    }
    best.map(|(i, _)| i)
}

/// Gram matrix kept in factored form: `Ĝ_ij = (a_R,i^H a_R,j)(t_j^H t_i)`.
struct WorkingGram {
    rx_gram: CMatrix,
    tx: CMatrix,
    gram: CMatrix,
}

impl WorkingGram {
    fn new(realization: &ChannelRealization) -> Self {
        let ar = realization.rx_responses();
        let rx_gram = ar.adjoint() * ar;
        let tx = realization.tx_responses().clone();
        let tx_gram = tx.adjoint() * &tx;
        let gram = rx_gram.zip_map(&tx_gram, |r, t| r * t.conj());
        let mut out = Self { rx_gram, tx, gram };
        out.fix_diagonal();
        out
    }

    fn fix_diagonal(&mut self) {
        for i in 0..self.gram.nrows() {
            self.gram[(i, i)].im = 0.0;
        }
    }

    fn update(&mut self, index: usize, tx_column: &DVector<Complex64>) {
        self.tx.set_column(index, tx_column);
        let t_i = self.tx.column(index);
        for j in 0..self.tx.ncols() {
            let t_j_h_t_i = self.tx.column(j).dotc(&t_i);
            let g = self.rx_gram[(index, j)] * t_j_h_t_i;
            self.gram[(index, j)] = g;
            self.gram[(j, index)] = g.conj();
        }
        self.fix_diagonal();
    }

    fn levels(&self) -> Vec<f64> {
        correlation_levels(&self.gram)
    }
}

/// Sequential multi-pattern design for one realization.
///
/// The path with the largest correlation level keeps an all-ones vector.
/// Each following path is the most correlated one not yet visited; its
/// vector minimizes the coupling to every path visited before it. The gain
/// allocation is then solved on the modified subchannels.
pub fn sof_run(
    realization: &ChannelRealization,
    solver: SofSolver,
    cg_opts: &CgOptions,
    minmax_opts: &MinMaxOptions,
    mode: NormalizationMode,
) -> Result<SofDesign> {
    let l = realization.n_paths();
    let n_tx = realization.config().n_tx;
    if l == 0 {
        return Err(Error::Empty("realization"));
    }
    cg_opts.validate()?;

    let mut modifications = vec![ModificationVector::ones(n_tx); l];
    let mut working = WorkingGram::new(realization);
    let mut visited = vec![false; l];
    let mut order = Vec::with_capacity(l);
    let mut fallbacks = 0;

    let first = select_next(&working.levels(), &visited).expect("at least one path");
    visited[first] = true;
    order.push(first);

    while order.len() < l {
        let target = select_next(&working.levels(), &visited).expect("unvisited path remains");
        let b_sum = coupling_sum(realization, target, &order, &modifications)?;
        let solved = match solver {
            SofSolver::ManifoldCg => manifold_cg(&b_sum, cg_opts),
            SofSolver::Evd => evd_solve(&b_sum),
        };
        let m_hat = match solved {
            Ok(m) => m,
            Err(Error::DegenerateClip) => {
                fallbacks += 1;
                ModificationVector::ones(n_tx)
            }
            Err(e) => return Err(e),
        };
        working.update(target, &modified_tx(realization, target, &m_hat)?);
        modifications[target] = m_hat;
        visited[target] = true;
        order.push(target);
    }

    let subchannels =
        (0..l).map(|i| modified_subchannel(realization, i, &modifications[i])).collect::<Result<Vec<_>>>()?;
    let gains = realization.gains();
    let allocation = solve_minmax_allocation(&subchannels, minmax_opts)?;
    let delta = match mode {
        NormalizationMode::Exact => power_scaling_with_phases(&subchannels, &allocation.p, &gains)?,
        NormalizationMode::PaperLiteral => power_scaling(&subchannels, &allocation.p)?,
    };
    let samples = gains_to_pattern_column(&allocation.p, delta, &gains)?;
    let mut entries = DMatrix::zeros(n_tx, l);
    for (i, (m_hat, &m)) in modifications.iter().zip(&samples).enumerate() {
        entries.set_column(i, &(m_hat.values() * m));
    }
    let pattern = PatternMatrix::new(entries)?;
    let levels = working.levels();
    Ok(SofDesign { modifications, order, allocation, delta, samples, pattern, levels, fallbacks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_realization, ChannelConfig};
    use crate::linalg::frobenius_sq;
    use crate::metrics::subchannel_gram;
    use approx::assert_abs_diff_eq;

    fn small_config() -> ChannelConfig {
        ChannelConfig { n_tx: 8, n_rx: 4, n_clusters: 3, n_rays: 2, ..ChannelConfig::desk_scale() }
    }

    fn initial_levels(r: &ChannelRealization) -> Vec<f64> {
        correlation_levels(&subchannel_gram(&r.subchannels()).unwrap())
    }

    #[test]
    fn modification_vector_validation() {
        assert!(ModificationVector::new(vec![1.0, 1.0]).is_ok());
        assert!(ModificationVector::new(vec![2f64.sqrt(), 0.0]).is_ok());
        assert!(ModificationVector::new(vec![1.0, 0.5]).is_err());
        assert!(ModificationVector::new(vec![-1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(ModificationVector::new(vec![]).is_err());
        let m = ModificationVector::from_direction(&DVector::from_vec(vec![3.0, -1.0, 4.0])).unwrap();
        assert_abs_diff_eq!(m.values()[0], 0.6 * 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(m.values()[1], 0.0);
        assert!(matches!(
            ModificationVector::from_direction(&DVector::from_vec(vec![-1.0, 0.0])),
            Err(Error::DegenerateClip)
        ));
    }

    #[test]
    fn unit_norm_modifications_give_unit_diagonal() {
        let r = generate_realization(&small_config(), 9).unwrap();
        let mods: Vec<_> = (0..r.n_paths())
            .map(|i| {
                let raw = DVector::from_fn(8, |k, _| ((i * 8 + k) as f64 * 0.37).sin().abs() + 0.01);
                ModificationVector::from_direction(&raw).unwrap()
            })
            .collect();
        for (i, m) in mods.iter().enumerate() {
            let h = modified_subchannel(&r, i, m).unwrap();
            assert_abs_diff_eq!(frobenius_sq(&h), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn working_gram_tracks_direct_gram() {
        let r = generate_realization(&small_config(), 10).unwrap();
        let mut working = WorkingGram::new(&r);
        let mut mods = vec![ModificationVector::ones(8); r.n_paths()];
        let direct = |mods: &[ModificationVector]| {
            let subs: Vec<_> = (0..r.n_paths()).map(|i| modified_subchannel(&r, i, &mods[i]).unwrap()).collect();
            subchannel_gram(&subs).unwrap()
        };
        assert!((&working.gram - direct(&mods)).map(|z| z.norm()).max() < 1e-13);
        for (step, index) in [3usize, 0, 5].into_iter().enumerate() {
            let raw = DVector::from_fn(8, |k, _| ((k + step) as f64).cos());
            let m = ModificationVector::from_direction(&raw).unwrap();
            working.update(index, &modified_tx(&r, index, &m).unwrap());
            mods[index] = m;
            assert!((&working.gram - direct(&mods)).map(|z| z.norm()).max() < 1e-13);
        }
    }

    #[test]
    fn selection_prefers_lowest_index_on_ties() {
        assert_eq!(select_next(&[1.0, 3.0, 3.0], &[false; 3]), Some(1));
        assert_eq!(select_next(&[1.0, 3.0, 3.0], &[false, true, false]), Some(2));
        assert_eq!(select_next(&[1.0], &[true]), None);
    }

    #[test]
    fn single_path_keeps_all_ones() {
        let cfg = ChannelConfig { n_tx: 8, n_rx: 4, n_clusters: 1, n_rays: 1, ..ChannelConfig::desk_scale() };
        let r = generate_realization(&cfg, 1).unwrap();
        let d = sof_run(
            &r,
            SofSolver::ManifoldCg,
            &CgOptions::default(),
            &MinMaxOptions::default(),
            NormalizationMode::Exact,
        )
        .unwrap();
        assert_eq!(d.order, vec![0]);
        assert_eq!(d.allocation.p, vec![1.0]);
        assert_eq!(d.modifications[0], ModificationVector::ones(8));
        let h = r.pattern_channel(&d.pattern).unwrap();
        assert_abs_diff_eq!(frobenius_sq(&h), 32.0, epsilon = 1e-9 * 32.0);
    }

    #[test]
    fn design_invariants_hold_for_both_solvers() {
        let cfg = small_config();
        for seed in 0..4 {
            let r = generate_realization(&cfg, seed).unwrap();
            let levels0 = initial_levels(&r);
            for solver in [SofSolver::ManifoldCg, SofSolver::Evd] {
                let d = sof_run(&r, solver, &CgOptions::default(), &MinMaxOptions::default(), NormalizationMode::Exact)
                    .unwrap();
                let mut order = d.order.clone();
                order.sort_unstable();
                assert_eq!(order, (0..r.n_paths()).collect::<Vec<_>>());
                assert_eq!(d.order[0], select_next(&levels0, &vec![false; r.n_paths()]).unwrap());
                assert_eq!(d.modifications[d.order[0]], ModificationVector::ones(8));
                for m in &d.modifications {
                    assert!(m.values().iter().all(|&v| v >= 0.0));
                    assert_abs_diff_eq!(m.values().norm_squared(), 8.0, epsilon = 1e-9);
                }
                assert!(d.pattern.entries().iter().all(|&v| v >= 0.0));
                let h = r.pattern_channel(&d.pattern).unwrap();
                assert_abs_diff_eq!(frobenius_sq(&h), 32.0, epsilon = 1e-9 * 32.0);
            }
        }
    }

    #[test]
    fn reduces_correlation_relative_to_unmodified() {
        let cfg = ChannelConfig::desk_scale();
        let (mut before, mut after) = (0.0, 0.0);
        for seed in 0..5 {
            let r = generate_realization(&cfg, seed).unwrap();
            before += initial_levels(&r).iter().sum::<f64>();
            let d = sof_run(
                &r,
                SofSolver::ManifoldCg,
                &CgOptions::default(),
                &MinMaxOptions::default(),
                NormalizationMode::Exact,
            )
            .unwrap();
            after += d.levels.iter().sum::<f64>();
        }
        assert!(after < before, "{after} vs {before}");
    }

    #[test]
    fn realized_channel_matches_weighted_modified_sum() {
        let r = generate_realization(&small_config(), 13).unwrap();
        let d = sof_run(&r, SofSolver::Evd, &CgOptions::default(), &MinMaxOptions::default(), NormalizationMode::Exact)
            .unwrap();
        let mut expected = CMatrix::zeros(4, 8);
        for (i, path) in r.paths().iter().enumerate() {
            let h = modified_subchannel(&r, i, &d.modifications[i]).unwrap();
            let phase = path.gain / path.gain.norm();
            expected += h * (phase * d.allocation.p[i] * d.delta);
        }
        let realized = r.pattern_channel(&d.pattern).unwrap();
        assert!((realized - expected).map(|z| z.norm()).max() < 1e-12);
    }

    #[test]
    fn literal_mode_uses_phase_free_scaling() {
        let r = generate_realization(&small_config(), 14).unwrap();
        let d = sof_run(
            &r,
            SofSolver::ManifoldCg,
            &CgOptions::default(),
            &MinMaxOptions::default(),
            NormalizationMode::PaperLiteral,
        )
        .unwrap();
        let subs: Vec<_> = (0..r.n_paths()).map(|i| modified_subchannel(&r, i, &d.modifications[i]).unwrap()).collect();
        assert_abs_diff_eq!(d.delta, power_scaling(&subs, &d.allocation.p).unwrap(), epsilon = 1e-12);
    }
}
