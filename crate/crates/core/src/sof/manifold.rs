//! Riemannian conjugate gradient for `min xᵀ B x` subject to `‖x‖² = N_t`.

use nalgebra::{DMatrix, DVector};

use super::ModificationVector;
use crate::error::{Error, Result};

/// Tangent projection and retraction used by [`manifold_cg`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RetractionMode {
    /// Sphere of radius `√N_t`: project `g − (xᵀg / xᵀx) x`, retract `√N_t x/‖x‖`.
    #[default]
    Sphere,
    /// Per-entry unit circle: project `g − g ⊙ x ⊙ x`, retract `x_i/|x_i|`.
    /// Starting from all ones the gradient vanishes, so this returns all ones.
    PaperEntrywise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop once the objective changes by less than this between iterates.
    pub tol: f64,
    pub max_iters: usize,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    pub retraction_mode: RetractionMode,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            initial_step: 1.0,
            max_backtracks: 50,
            retraction_mode: RetractionMode::Sphere,
        }
    }
}

impl CgOptions {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("cg tol must be positive, got {}", self.tol)));
        }
        if !in_unit(self.armijo_shrink) || !in_unit(self.armijo_slope) {
            return Err(Error::InvalidConfig("armijo shrink and slope must lie in (0, 1)".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidConfig("initial step must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a CG run, including the objective at every accepted iterate.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub modification: ModificationVector,
    /// `f(x)` at the start point and after each accepted step, before clipping.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The clipped minimizer scored above the start, so all ones was returned.
    pub kept_start: bool,
}

/// Symmetrized copy of `b`; rejects non-square or non-finite input.
pub(crate) fn symmetrized(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.nrows() != b.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    if b.nrows() == 0 {
        return Err(Error::Empty("coupling matrix"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coupling matrix"));
    }
    Ok((b + b.transpose()) * 0.5)
}

fn project(mode: RetractionMode, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    match mode {
        RetractionMode::Sphere => v - x * (x.dot(v) / x.norm_squared()),
        RetractionMode::PaperEntrywise => v - v.component_mul(x).component_mul(x),
    }
}

fn retract(mode: RetractionMode, y: DVector<f64>) -> Option<DVector<f64>> {
    if y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    match mode {
        RetractionMode::Sphere => {
            let norm = y.norm();
            let scale = (y.len() as f64).sqrt() / norm;
            (norm > 0.0).then(|| y * scale)
        }
        RetractionMode::PaperEntrywise => Some(y.map(|v| if v < 0.0 { -1.0 } else { 1.0 })),
    }
}

/// Minimize `xᵀ B x` from the all-ones start and return the clipped,
/// renormalized minimizer, or all ones if clipping made it worse.
pub fn manifold_cg(b: &DMatrix<f64>, opts: &CgOptions) -> Result<ModificationVector> {
    Ok(manifold_cg_traced(b, opts)?.modification)
}

/// As [`manifold_cg`], also reporting the objective trace.
///
/// Fails with [`Error::DegenerateClip`] when the final iterate has no
/// positive entry.
pub fn manifold_cg_traced(b: &DMatrix<f64>, opts: &CgOptions) -> Result<CgOutcome> {
    opts.validate()?;
    let b = symmetrized(b)?;
    let n = b.nrows();
    let mode = opts.retraction_mode;
    let objective = |x: &DVector<f64>| x.dot(&(&b * x));
    let riemannian_grad = |x: &DVector<f64>| project(mode, x, &((&b * x) * 2.0));

    let mut x = DVector::from_element(n, 1.0);
    let mut fx = objective(&x);
    let mut g = riemannian_grad(&x);
    let mut d = -&g;
    let mut trace = vec![fx];
    let mut since_restart = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        let g_norm2 = g.norm_squared();
        let scale = (&b * &x).norm() * 2.0;
        if g_norm2.sqrt() <= 1e-15 * (1.0 + scale) {
            converged = true;
            break;
        }
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            d = -&g;
            slope = -g_norm2;
            since_restart = 0;
        }

        let mut step = opts.initial_step;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            if let Some(candidate) = retract(mode, &x + &d * step) {
                let fc = objective(&candidate);
                if fc <= fx + opts.armijo_slope * step * slope {
                    accepted = Some((candidate, fc));
                    break;
                }
            }
            step *= opts.armijo_shrink;
        }
        let Some((x_new, f_new)) = accepted else { break };
        iterations += 1;
        since_restart += 1;

        let g_new = riemannian_grad(&x_new);
        let g_moved = project(mode, &x_new, &g);
        let d_moved = project(mode, &x_new, &d);
        let mut beta = (g_new.dot(&(&g_new - &g_moved)) / g_norm2).max(0.0);
        if since_restart >= n {
            beta = 0.0;
            since_restart = 0;
        }
        d = -&g_new + d_moved * beta;
        let change = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push(fx);
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    // Clipping a mixed-sign iterate can land above the start, which is feasible too.
    let clipped = ModificationVector::from_direction(&x)?;
    let start = trace[0];
    let kept_start = objective(clipped.values()) > start;
    let modification = if kept_start { ModificationVector::ones(n) } else { clipped };
    Ok(CgOutcome { modification, trace, iterations, converged, kept_start })
}
