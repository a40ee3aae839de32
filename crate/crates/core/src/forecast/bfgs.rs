//! Quasi-Newton minimization with an inverse-Hessian BFGS update.
//!
//! The inverse Hessian is carried directly and corrected by a rank-two
//! update after every accepted step, so no linear system is ever solved.
//! Step lengths come from a backtracking line search with the Armijo
//! sufficient-decrease test.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A differentiable scalar function of a parameter vector.
pub trait Objective {
    fn value(&self, p: &[f64]) -> f64;

    /// Gradient at `p`. The default is a central finite difference.
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        central_difference(|q| self.value(q), p)
    }
}

/// Adapts a closure (and optionally an analytic gradient) to [`Objective`].
pub struct FnObjective<F, G = fn(&[f64]) -> Vec<f64>> {
    f: F,
    g: Option<G>,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64,
{
    pub fn new(f: F) -> Self {
        Self { f, g: None }
    }
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn with_gradient(f: F, g: G) -> Self {
        Self { f, g: Some(g) }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        match &self.g {
            Some(g) => g(p),
            None => central_difference(&self.f, p),
        }
    }
}

/// Central finite-difference gradient with a per-coordinate step scaled to
/// the coordinate's magnitude.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, p: &[f64]) -> Vec<f64> {
    let base = f64::EPSILON.cbrt();
    let mut q = p.to_vec();
    (0..p.len())
        .map(|i| {
            let h = base * p[i].abs().max(1.0);
            q[i] = p[i] + h;
            let up = f(&q);
            q[i] = p[i] - h;
            let down = f(&q);
            q[i] = p[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfgsConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Step shrink factor per backtrack.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Updates with `|zeta . psi|` below this are skipped.
    pub curvature_eps: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-8,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            curvature_eps: 1e-12,
        }
    }
}

/// Optimizer state after an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BfgsState {
    pub p: Vec<f64>,
    pub inv_hessian: DMatrix<f64>,
    pub gradient: Vec<f64>,
    /// Gradient difference of the last step.
    pub psi: Vec<f64>,
    /// Parameter step of the last step.
    pub zeta: Vec<f64>,
    pub iteration: usize,
    /// Accepted step length of the last line search.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub params: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// True when the gradient tolerance was met.
    pub converged: bool,
    pub skipped_updates: usize,
    /// Times the inverse Hessian was reset to identity because the search
    /// direction stopped being a descent direction.
    pub resets: usize,
    /// Objective value at the start and after every accepted step.
    pub trace: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum BfgsError {
    #[error("objective or gradient is not finite at iteration {}", .state.iteration)]
    Divergence { state: Box<BfgsState> },
    #[error("line search found no acceptable step at iteration {}", .best.iterations)]
    Stalled { best: Box<BfgsOutcome> },
    #[error("empty parameter vector")]
    Empty,
}

impl BfgsError {
    /// Best point reached before a stall, if any.
    pub fn best(&self) -> Option<&BfgsOutcome> {
        match self {
            BfgsError::Stalled { best } => Some(best),
            _ => None,
        }
    }
}

/// Rank-two correction of the inverse Hessian from a step `zeta` and the
/// matching gradient change `psi`:
///
/// `H' = H + (z.y + y'Hy) zz' / (z.y)^2 - (Hy z' + z y'H) / (z.y)`
///
/// Returns `None` (update skipped) when `|z.y|` is below `curvature_eps`.
/// For symmetric `H` the result is symmetric and satisfies `H' psi = zeta`.
pub fn inv_hessian_update(
    inv_hessian: &DMatrix<f64>,
    zeta: &[f64],
    psi: &[f64],
    curvature_eps: f64,
) -> Option<DMatrix<f64>> {
    let n = zeta.len();
    assert_eq!(inv_hessian.nrows(), n);
    assert_eq!(psi.len(), n);
    let zeta = DVector::from_column_slice(zeta);
    let psi = DVector::from_column_slice(psi);
    let rho = zeta.dot(&psi);
    if !rho.is_finite() || rho.abs() < curvature_eps {
        return None;
    }
    let h_psi = inv_hessian * &psi;
    let psi_h_psi = psi.dot(&h_psi);
    let outer = (rho + psi_h_psi) / (rho * rho);
    // Entrywise so that a symmetric input yields an exactly symmetric output.
    let mut out = inv_hessian.clone();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] += outer * zeta[i] * zeta[j] - (h_psi[i] * zeta[j] + zeta[i] * h_psi[j]) / rho;
        }
    }
    Some(out)
}

/// Minimizes `objective` from `p0`.
///
/// Accepted steps never increase the objective. The loop ends when the
/// gradient norm drops to `grad_tol` or after `max_iter` iterations; both
/// return `Ok`, distinguished by [`BfgsOutcome::converged`].
pub fn bfgs_minimize<O: Objective + ?Sized>(
    objective: &O,
    p0: &[f64],
    config: &BfgsConfig,
) -> Result<BfgsOutcome, BfgsError> {
    let n = p0.len();
    if n == 0 {
        return Err(BfgsError::Empty);
    }
    let mut state = BfgsState {
        p: p0.to_vec(),
        inv_hessian: DMatrix::identity(n, n),
        gradient: vec![0.0; n],
        psi: vec![0.0; n],
        zeta: vec![0.0; n],
        iteration: 0,
        step: 1.0,
    };
    let mut value = objective.value(&state.p);
    if !value.is_finite() || p0.iter().any(|v| !v.is_finite()) {
        return Err(BfgsError::Divergence {
            state: Box::new(state),
        });
    }
    state.gradient = objective.gradient(&state.p);
    if state.gradient.iter().any(|g| !g.is_finite()) {
        return Err(BfgsError::Divergence {
            state: Box::new(state),
        });
    }

    let mut trace = vec![value];
    let mut skipped = 0;
    let mut resets = 0;

    let outcome = |state: &BfgsState, value: f64, trace: &[f64], skipped, resets, converged| {
        BfgsOutcome {
            params: state.p.clone(),
            value,
            iterations: state.iteration,
            gradient_norm: norm(&state.gradient),
            converged,
            skipped_updates: skipped,
            resets,
            trace: trace.to_vec(),
        }
    };

    while state.iteration < config.max_iter {
        if norm(&state.gradient) <= config.grad_tol {
            return Ok(outcome(&state, value, &trace, skipped, resets, true));
        }
        let g = DVector::from_column_slice(&state.gradient);
        let mut direction = -(&state.inv_hessian * &g);
        let mut slope = g.dot(&direction);
        if !(slope < 0.0) {
            state.inv_hessian = DMatrix::identity(n, n);
            direction = -g.clone();
            slope = -g.dot(&g);
            resets += 1;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..config.max_backtracks {
            let trial: Vec<f64> = state
                .p
                .iter()
                .zip(direction.iter())
                .map(|(p, d)| p + step * d)
                .collect();
            let f_trial = objective.value(&trial);
            if f_trial.is_finite() && f_trial <= value + config.armijo_c1 * step * slope {
                accepted = Some((trial, f_trial));
                break;
            }
            step *= config.backtrack;
        }
        let Some((p_new, f_new)) = accepted else {
            let converged = norm(&state.gradient) <= config.grad_tol;
            return Err(BfgsError::Stalled {
                best: Box::new(outcome(&state, value, &trace, skipped, resets, converged)),
            });
        };

        let g_new = objective.gradient(&p_new);
        state.iteration += 1;
        if g_new.iter().any(|v| !v.is_finite()) {
            return Err(BfgsError::Divergence {
                state: Box::new(state),
            });
        }
        let zeta: Vec<f64> = p_new.iter().zip(&state.p).map(|(a, b)| a - b).collect();
        let psi: Vec<f64> = g_new.iter().zip(&state.gradient).map(|(a, b)| a - b).collect();
        let curvature: f64 = zeta.iter().zip(&psi).map(|(a, b)| a * b).sum();
        // Negative curvature would destroy positive definiteness.
        match (curvature > config.curvature_eps)
            .then(|| inv_hessian_update(&state.inv_hessian, &zeta, &psi, config.curvature_eps))
            .flatten()
        {
            Some(h) => state.inv_hessian = h,
            None => skipped += 1,
        }
        state.p = p_new;
        state.gradient = g_new;
        state.zeta = zeta;
        state.psi = psi;
        state.step = step;
        value = f_new;
        trace.push(value);
    }
    let converged = norm(&state.gradient) <= config.grad_tol;
    Ok(outcome(&state, value, &trace, skipped, resets, converged))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
