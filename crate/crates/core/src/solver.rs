//! Damped Newton ascent for the regularized logistic objective.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Cholesky, Matrix};
use crate::model::{gradient, hessian, log_likelihood, Design, Prior};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop once the Euclidean norm of the gradient falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Step shrink factor used by the backtracking line search.
    pub backtrack: f64,
    /// Sufficient-increase constant of the Armijo condition.
    pub armijo: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tol: 1e-8,
            max_iters: 100,
            backtrack: 0.5,
            armijo: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "backtracking factor must lie in (0, 1), got {}",
                self.backtrack
            )));
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "Armijo constant must lie in (0, 0.5), got {}",
                self.armijo
            )));
        }
        Ok(())
    }
}

/// Result of a maximization. `converged` implies `grad_norm <= grad_tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub w: Vec<f64>,
    pub log_likelihood: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

// Line search gives up below this step length; at that point the remaining
// ascent is lost in rounding.
const MIN_STEP: f64 = 1e-14;

// Resolution of `L`, in units of its last place, below which ascent is
// judged by the gradient instead.
const ROUNDING_ULPS: f64 = 64.0;

/// Maximizes `L(w)` starting from `w_init`.
///
/// Each Newton direction solves `(-H) Δ = ∇L` by Cholesky; the step is then
/// shortened until the Armijo condition holds, so `L` never decreases beyond
/// rounding. Close to the optimum the predicted gain drops below the
/// resolution of `L`; there the full Newton step is taken as long as it
/// shrinks the gradient. If the iteration budget runs out the last iterate is
/// returned with `converged = false`.
pub fn maximize(
    design: &Design,
    prior: Prior,
    config: &SolverConfig,
    w_init: &[f64],
) -> Result<Solution> {
    let mut w = w_init.to_vec();
    let mut value = log_likelihood(&w, design, prior)?;
    if !value.is_finite() {
        return Err(Error::numerical(
            "solver",
            "log-likelihood is not finite at the starting point",
        ));
    }
    let mut grad = gradient(&w, design, prior)?;
    let mut grad_norm = norm(&grad);
    let mut iterations = 0;

    while grad_norm > config.grad_tol && iterations < config.max_iters {
        iterations += 1;
        let mut neg_h = hessian(&w, design, prior)?;
        negate(&mut neg_h);
        let direction = Cholesky::factor(&neg_h)
            .map_err(|e| Error::numerical("solver", format!("Newton system: {e}")))?
            .solve(&grad)?;
        let slope = dot(&grad, &direction);
        if !(slope > 0.0) {
            break;
        }

        let resolution = ROUNDING_ULPS * f64::EPSILON * value.abs().max(1.0);
        let accepted = if slope <= resolution {
            rounding_limited_step(design, prior, &w, &direction, value, grad_norm, resolution)?
        } else {
            armijo_step(design, prior, config, &w, &direction, value, slope)?
        };
        let Some((trial, trial_value)) = accepted else {
            // no representable ascent left along the Newton direction
            break;
        };
        w = trial;
        value = trial_value;
        grad = gradient(&w, design, prior)?;
        grad_norm = norm(&grad);
    }

    Ok(Solution {
        converged: grad_norm <= config.grad_tol,
        w,
        log_likelihood: value,
        grad_norm,
        iterations,
    })
}

type Step = Option<(Vec<f64>, f64)>;

fn armijo_step(
    design: &Design,
    prior: Prior,
    config: &SolverConfig,
    w: &[f64],
    direction: &[f64],
    value: f64,
    slope: f64,
) -> Result<Step> {
    let mut step = 1.0;
    while step >= MIN_STEP {
        let trial: Vec<f64> = w
            .iter()
            .zip(direction)
            .map(|(wi, di)| wi + step * di)
            .collect();
        let trial_value = log_likelihood(&trial, design, prior)?;
        if trial_value >= value + config.armijo * step * slope {
            return Ok(Some((trial, trial_value)));
        }
        step *= config.backtrack;
    }
    Ok(None)
}

/// Full Newton step, accepted on gradient decrease, for when the predicted
/// gain is below the resolution of `L`.
fn rounding_limited_step(
    design: &Design,
    prior: Prior,
    w: &[f64],
    direction: &[f64],
    value: f64,
    grad_norm: f64,
    resolution: f64,
) -> Result<Step> {
    let trial: Vec<f64> = w.iter().zip(direction).map(|(wi, di)| wi + di).collect();
    let trial_value = log_likelihood(&trial, design, prior)?;
    if trial_value < value - resolution {
        return Ok(None);
    }
    let shrinks = norm(&gradient(&trial, design, prior)?) < grad_norm;
    Ok(shrinks.then_some((trial, trial_value)))
}

fn negate(m: &mut Matrix) {
    for i in 0..m.rows() {
        for v in m.row_mut(i) {
            *v = -*v;
        }
    }
}
