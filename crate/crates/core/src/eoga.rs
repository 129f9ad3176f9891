//! Single-pattern design by eigenvalue-optimization gain allocation.
//!
//! When every transmit antenna uses the same pattern, the pattern channel is
//! `Σ α_l m_l H_l`: the pattern only redistributes gain across paths. The
//! allocation `p` on the probability simplex is chosen to minimize the
//! largest singular value of `Σ p_l H_l`, which equals the largest eigenvalue
//! of the Hermitian lift `Σ p_l W_l` with `W_l = [0, H_l; H_l^H, 0]`. That
//! convex, nonsmooth problem is solved by projected subgradient descent. A
//! power scaling `δ` then restores the total channel gain and the per-path
//! pattern samples follow as `m_l = p_l δ / |α_l|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, PatternMatrix};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, frobenius_sq, spectral_norm, top_singular_triplet, CMatrix};

/// Step-size schedule for the subgradient iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `c / √k` along the normalized projected subgradient.
    Diminishing,
    /// Polyak step toward a target that trails the best value found so far.
    Polyak,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxOptions {
    pub max_iters: usize,
    /// A window of [`STALL_WINDOW`] iterations that improves the best
    /// objective by less than this counts as a stall. Each stall restarts
    /// from the best point with half the step scale; the solver stops once
    /// the scale has shrunk by a factor of `1e6`.
    pub tol: f64,
    pub step_rule: StepRule,
}

/// Iterations over which progress is measured for the stopping test.
pub const STALL_WINDOW: usize = 50;

impl Default for MinMaxOptions {
    fn default() -> Self {
        Self { max_iters: 5000, tol: 1e-9, step_rule: StepRule::Diminishing }
    }
}

/// How the power scaling factor treats the path phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// Include the path phases so the realized channel has `‖H̃‖_F² = N_t N_r`.
    #[default]
    Exact,
    /// Phase-free scaling computed from `Σ p_l H_l` alone.
    PaperLiteral,
}

/// Output of the min-max allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct GainAllocation {
    /// Effective path gains on the probability simplex.
    pub p: Vec<f64>,
    /// Largest eigenvalue of `Σ p_l W_l` at `p`.
    pub t: f64,
    pub iterations: usize,
    /// `false` if the iteration budget ran out before the stall test fired.
    pub converged: bool,
}

/// Euclidean projection onto `{x : x ≥ 0, Σ x = 1}` (sort-based).
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // renormalize away the rounding drift of the threshold
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|x| *x /= total);
    }
    out
}

/// `[0, H; H^H, 0]`, whose largest eigenvalue is `σ_max(H)`.
pub fn hermitian_lift(h: &CMatrix) -> CMatrix {
    let (nr, nt) = h.shape();
    let mut w = CMatrix::zeros(nr + nt, nr + nt);
    w.view_mut((0, nr), (nr, nt)).copy_from(h);
    w.view_mut((nr, 0), (nt, nr)).copy_from(&h.adjoint());
    w
}

/// `Σ p_l H_l`.
pub fn combine(subchannels: &[CMatrix], weights: &[Complex64]) -> CMatrix {
    let (nr, nt) = subchannels[0].shape();
    let mut sum = CMatrix::zeros(nr, nt);
    for (h, &w) in subchannels.iter().zip(weights) {
        if w != Complex64::new(0.0, 0.0) {
            sum.zip_apply(h, |acc, x| *acc += x * w);
        }
    }
    sum
}

fn real_weights(p: &[f64]) -> Vec<Complex64> {
    p.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// `λ_max(Σ p_l W_l) = σ_max(Σ p_l H_l)`.
pub fn minmax_objective(subchannels: &[CMatrix], p: &[f64]) -> f64 {
    spectral_norm(&combine(subchannels, &real_weights(p)))
}

fn check_subchannels(subchannels: &[CMatrix]) -> Result<()> {
    let first = subchannels.first().ok_or(Error::Empty("subchannel list"))?;
    let shape = first.shape();
    for h in subchannels {
        if h.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", shape.0, shape.1),
                got: format!("{}x{}", h.nrows(), h.ncols()),
            });
        }
        if !all_finite(h) {
            return Err(Error::NonFinite("subchannel"));
        }
    }
    Ok(())
}

/// Objective and a subgradient `[v^H W_l v]_l` at `p`.
///
/// With `(σ, u, w)` the top singular triplet of `Σ p_l H_l`, the top
/// eigenvector of the lift is `v = [u; w]/√2` and `v^H W_l v = Re(u^H H_l w)`.
fn objective_and_subgradient(subchannels: &[CMatrix], p: &[f64]) -> (f64, Vec<f64>) {
    let sum = combine(subchannels, &real_weights(p));
    let (sigma, u, w) = top_singular_triplet(&sum);
    let grad = subchannels.iter().map(|h| u.dotc(&(h * &w)).re).collect();
    (sigma, grad)
}

/// Minimize `λ_max(Σ p_l W_l)` over the probability simplex.
///
/// Starts at the uniform allocation and returns the best iterate seen, so
/// the result never does worse than uniform.
pub fn solve_minmax_allocation(subchannels: &[CMatrix], opts: &MinMaxOptions) -> Result<GainAllocation> {
    check_subchannels(subchannels)?;
    if opts.max_iters < 1 || !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("max_iters must be >= 1 and tol > 0".into()));
    }
    let l = subchannels.len();
    if l == 1 {
        return Ok(GainAllocation { p: vec![1.0], t: spectral_norm(&subchannels[0]), iterations: 0, converged: true });
    }

    let mut p = vec![1.0 / l as f64; l];
    let (mut value, mut grad) = objective_and_subgradient(subchannels, &p);
    let mut best_p = p.clone();
    let mut best = value;
    // best value at the start of the current stall window
    let mut window_start = best;
    // distance from the simplex center to a vertex
    let mut step_scale = 0.5 * (1.0 - 1.0 / l as f64).sqrt();
    let min_step_scale = step_scale * 1e-6;
    let mut since_restart = 0usize;
    let mut iterations = 0;
    let mut converged = false;

    for k in 1..=opts.max_iters {
        iterations = k;
        since_restart += 1;
        let mean = grad.iter().sum::<f64>() / l as f64;
        let tangent: Vec<f64> = grad.iter().map(|g| g - mean).collect();
        let norm = tangent.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm <= 1e-15 {
            converged = true;
            break;
        }
        let step = match opts.step_rule {
            StepRule::Diminishing => step_scale / (since_restart as f64).sqrt() / norm,
            StepRule::Polyak => {
                let slack = best * 0.05 * step_scale / (since_restart as f64).sqrt();
                (value - best + slack) / (norm * norm)
            }
        };
        let trial: Vec<f64> = p.iter().zip(&tangent).map(|(x, g)| x - step * g).collect();
        p = simplex_project(&trial);
        (value, grad) = objective_and_subgradient(subchannels, &p);
        if value < best {
            best = value;
            best_p.clone_from(&p);
        }
        if since_restart.is_multiple_of(STALL_WINDOW) {
            if window_start - best < opts.tol {
                // stalled: restart from the best point with a shorter step
                if step_scale <= min_step_scale {
                    converged = true;
                    break;
                }
                step_scale *= 0.5;
                since_restart = 0;
                p.clone_from(&best_p);
                (value, grad) = objective_and_subgradient(subchannels, &p);
            }
            window_start = best;
        }
    }

    Ok(GainAllocation { p: best_p, t: best, iterations, converged })
}

/// Compositions of `n` into `parts` nonnegative integers, in lexicographic order.
fn for_each_composition(n: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(remaining: usize, slot: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = remaining;
            f(buf);
            return;
        }
        for v in 0..=remaining {
            buf[slot] = v;
            rec(remaining - v, slot + 1, buf, f);
        }
    }
    let mut buf = vec![0; parts];
    rec(n, 0, &mut buf, f);
}

/// Largest subchannel count the grid oracle accepts.
pub const GRID_MAX_PATHS: usize = 4;

/// Exhaustive minimization of `λ_max` over the simplex grid with spacing `step`.
///
/// Independent brute-force reference for [`solve_minmax_allocation`].
pub fn grid_oracle_allocation(subchannels: &[CMatrix], step: f64) -> Result<GainAllocation> {
    check_subchannels(subchannels)?;
    let l = subchannels.len();
    if l > GRID_MAX_PATHS {
        return Err(Error::GridTooLarge { max: GRID_MAX_PATHS, got: l });
    }
    let n = (1.0 / step).round();
    if !(step > 0.0) || n < 1.0 || (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("grid step {step} must divide 1")));
    }
    let n = n as usize;
    let mut best_p = vec![0.0; l];
    let mut best = f64::INFINITY;
    let mut count = 0;
    for_each_composition(n, l, &mut |c| {
        count += 1;
        let p: Vec<f64> = c.iter().map(|&k| k as f64 / n as f64).collect();
        let value = minmax_objective(subchannels, &p);
        if value < best {
            best = value;
            best_p = p;
        }
    });
    Ok(GainAllocation { p: best_p, t: best, iterations: count, converged: true })
}

fn total_gain(subchannels: &[CMatrix]) -> f64 {
    let (nr, nt) = subchannels[0].shape();
    (nr * nt) as f64
}

fn scaling_for(sum: &CMatrix, target: f64) -> Result<f64> {
    let energy = frobenius_sq(sum);
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::DegenerateAllocation);
    }
    Ok((target / energy).sqrt())
}

/// Phase-free scaling `δ` with `‖δ Σ p_l H_l‖_F² = N_t N_r`.
pub fn power_scaling(subchannels: &[CMatrix], p: &[f64]) -> Result<f64> {
    check_subchannels(subchannels)?;
    let sum = combine(subchannels, &real_weights(p));
    scaling_for(&sum, total_gain(subchannels))
}

/// Scaling `δ` with `‖δ Σ (α_l/|α_l|) p_l H_l‖_F² = N_t N_r`, i.e. exact for
/// the realized channel `Σ α_l m_l H_l`.
pub fn power_scaling_with_phases(subchannels: &[CMatrix], p: &[f64], gains: &[Complex64]) -> Result<f64> {
    check_subchannels(subchannels)?;
    let weights: Vec<Complex64> = p
        .iter()
        .zip(gains)
        .map(|(&pl, &a)| if a.norm() > 0.0 { a / a.norm() * pl } else { Complex64::new(0.0, 0.0) })
        .collect();
    let sum = combine(subchannels, &weights);
    scaling_for(&sum, total_gain(subchannels))
}

/// Per-path pattern samples `m_l = p_l δ / |α_l|`.
pub fn gains_to_pattern_column(p: &[f64], delta: f64, gains: &[Complex64]) -> Result<Vec<f64>> {
    if p.len() != gains.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} gains", p.len()),
            got: format!("{} gains", gains.len()),
        });
    }
    p.iter()
        .zip(gains)
        .enumerate()
        .map(|(index, (&pl, a))| {
            if pl == 0.0 {
                Ok(0.0)
            } else if a.norm() == 0.0 {
                Err(Error::ZeroGainPath { index })
            } else {
                Ok(pl * delta / a.norm())
            }
        })
        .collect()
}

/// Full single-pattern design for one realization.
#[derive(Debug, Clone)]
pub struct SinglePatternDesign {
    pub allocation: GainAllocation,
    pub delta: f64,
    pub samples: Vec<f64>,
    pub pattern: PatternMatrix,
}

pub fn design_single_pattern(
    realization: &ChannelRealization,
    opts: &MinMaxOptions,
    mode: NormalizationMode,
) -> Result<SinglePatternDesign> {
    let subchannels = realization.subchannels();
    let gains = realization.gains();
    let allocation = solve_minmax_allocation(&subchannels, opts)?;
    let delta = match mode {
        NormalizationMode::Exact => power_scaling_with_phases(&subchannels, &allocation.p, &gains)?,
        NormalizationMode::PaperLiteral => power_scaling(&subchannels, &allocation.p)?,
    };
    let samples = gains_to_pattern_column(&allocation.p, delta, &gains)?;
    let pattern = PatternMatrix::single_pattern(realization.config().n_tx, &samples)?;
    Ok(SinglePatternDesign { allocation, delta, samples, pattern })
}
