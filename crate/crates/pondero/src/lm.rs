//! Small dense Levenberg-Marquardt least-squares core.
//!
//! Minimizes ||r(p)||^2 with user-supplied residual and Jacobian closures.
//! Damping follows Marquardt's diagonal scaling: the normal matrix is
//! J'J + lambda * diag(J'J), solved by Cholesky; lambda shrinks on accepted
//! steps and grows on rejected ones.  Deliberately minimal — the fitting
//! problems here have <= 4 parameters and well-conditioned log-space
//! Jacobians, so bounds, trust regions and line searches are not needed.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_iterations: usize,
    /// Converged when the largest relative parameter step falls below this.
    pub step_tolerance: f64,
    /// Converged when the relative cost decrease falls below this.
    pub cost_tolerance: f64,
    pub initial_lambda: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            cost_tolerance: 1e-12,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub params: Vec<f64>,
    /// Final sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// J'J evaluated at the final parameters (for covariance estimates).
    pub jtj: DMatrix<f64>,
}

pub fn solve<R, J>(initial: &[f64], mut residuals: R, mut jacobian: J, opts: &Options) -> Solution
where
    R: FnMut(&[f64]) -> DVector<f64>,
    J: FnMut(&[f64]) -> DMatrix<f64>,
{
    let mut params = initial.to_vec();
    let mut r = residuals(&params);
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    'outer: for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        if cost <= f64::MIN_POSITIVE {
            converged = true;
            break;
        }
        let jac = jacobian(&params);
        let jtj = jac.transpose() * &jac;
        let gradient = jac.transpose() * &r;

        // Retry with stronger damping until a step is accepted.
        loop {
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                let d = damped[(i, i)];
                damped[(i, i)] = d + lambda * d.max(f64::MIN_POSITIVE);
            }
            let step = match damped.cholesky() {
                Some(chol) => chol.solve(&gradient),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e15 {
                        break 'outer;
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p - s).collect();
            let r_trial = residuals(&trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial <= cost {
                let max_rel_step = params
                    .iter()
                    .zip(step.iter())
                    .map(|(p, s)| s.abs() / p.abs().max(1.0))
                    .fold(0.0f64, f64::max);
                let rel_decrease = (cost - cost_trial) / cost.max(f64::MIN_POSITIVE);
                params = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 2.0).max(1e-15);
                if max_rel_step < opts.step_tolerance || rel_decrease < opts.cost_tolerance {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 3.0;
            if lambda > 1e15 {
                break 'outer;
            }
        }
    }

    let jac = jacobian(&params);
    let jtj = jac.transpose() * &jac;
    Solution {
        params,
        cost,
        iterations,
        converged,
        jtj,
    }
}
