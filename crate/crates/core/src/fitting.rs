//! Damped (Levenberg-style) weighted least squares with a numeric Jacobian.
//!
//! Small and self-contained: the sweep fits have four parameters and a few
//! dozen residuals, so normal equations with partial-pivot elimination are
//! plenty.

use crate::error::{Error, Result};
use crate::linalg::solve_real;
use crate::scalar::{real, Real};

pub struct FitOptions<T> {
    pub max_iterations: usize,
    /// Converged when the largest relative parameter step falls below this.
    pub relative_step_tol: T,
    pub lambda_init: T,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_step_tol: real(1e-6),
            lambda_init: real(1e-3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport<T> {
    pub params: Vec<T>,
    /// Unweighted sum of squared residuals at the solution.
    pub residual_ss: T,
    pub weighted_ss: T,
    pub iterations: usize,
    pub converged: bool,
}

fn weighted_ss<T: Real>(res: &[T], weights: &[T]) -> T {
    res.iter().zip(weights).map(|(&r, &w)| w * r * r).sum()
}

fn unweighted_ss<T: Real>(res: &[T]) -> T {
    res.iter().map(|&r| r * r).sum()
}

/// Minimize `Σ w_i r_i(p)^2` by damped Gauss-Newton steps. `residuals` maps a
/// parameter vector to the residual vector (data minus model); the Jacobian
/// is forward-differenced.
pub fn levenberg_fit<T, F>(
    residuals: F,
    initial: &[T],
    weights: &[T],
    opts: &FitOptions<T>,
) -> Result<FitReport<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let n_params = initial.len();
    let mut params = initial.to_vec();
    let mut res = residuals(&params)?;
    if res.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} residuals but {} weights",
            res.len(),
            weights.len()
        )));
    }
    if res.len() < n_params {
        return Err(Error::invalid("fewer residuals than parameters"));
    }
    let mut ss = weighted_ss(&res, weights);
    let mut lambda = opts.lambda_init;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        // Forward-difference Jacobian of the residual vector.
        let mut jac = vec![vec![T::zero(); n_params]; res.len()];
        for j in 0..n_params {
            let h = (params[j].abs().max(T::one())) * real(1e-7);
            let mut shifted = params.clone();
            shifted[j] += h;
            let res_h = residuals(&shifted)?;
            for (i, row) in jac.iter_mut().enumerate() {
                row[j] = (res_h[i] - res[i]) / h;
            }
        }
        // Normal equations J^T W J δ = -J^T W r with Levenberg damping.
        let mut jtj = vec![vec![T::zero(); n_params]; n_params];
        let mut jtr = vec![T::zero(); n_params];
        for (i, row) in jac.iter().enumerate() {
            let w = weights[i];
            for a in 0..n_params {
                jtr[a] -= w * row[a] * res[i];
                for b in a..n_params {
                    jtj[a][b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..n_params {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }

        let mut stepped = false;
        for _ in 0..24 {
            let mut damped = jtj.clone();
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * (jtj[a][a].max(real(1e-30)));
            }
            let delta = match solve_real(damped, jtr.clone()) {
                Ok(d) => d,
                Err(_) => {
                    lambda *= real(10.0);
                    continue;
                }
            };
            let trial: Vec<T> = params.iter().zip(&delta).map(|(&p, &d)| p + d).collect();
            let trial_res = residuals(&trial)?;
            let trial_ss = weighted_ss(&trial_res, weights);
            if trial_ss.is_finite() && trial_ss <= ss {
                let max_rel_step = params
                    .iter()
                    .zip(&delta)
                    .map(|(&p, &d)| d.abs() / p.abs().max(T::one()))
                    .fold(T::zero(), |a, b| a.max(b));
                params = trial;
                res = trial_res;
                ss = trial_ss;
                lambda = (lambda * real(0.3)).max(real(1e-12));
                stepped = true;
                if max_rel_step < opts.relative_step_tol {
                    converged = true;
                }
                break;
            }
            lambda *= real(10.0);
        }
        if converged || !stepped {
            // A step below tolerance, or no improving step at any damping:
            // the solver is at a (numerical) optimum.
            converged = converged || !stepped;
            break;
        }
    }

    Ok(FitReport {
        residual_ss: unweighted_ss(&res),
        weighted_ss: ss,
        params,
        iterations,
        converged,
    })
}
