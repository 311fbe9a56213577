//! Damped Gauss-Newton (Levenberg-Marquardt) least squares.
//!
//! Minimizes `½‖r(p)‖²` for a residual closure `r: ℝⁿ → ℝᵐ` with a
//! finite-difference Jacobian. The damping uses Marquardt's diagonal scaling,
//! which keeps the fits here invariant under the very different parameter
//! magnitudes (amplitudes near 1, centres in ns, rates in rad/s). The damping
//! follows Nielsen's gain-ratio schedule, which avoids the zig-zag of a plain
//! ×10/÷10 rule in narrow valleys.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged once `‖δp‖ ≤ step_tolerance · (‖p‖ + step_tolerance)`.
    pub step_tolerance: f64,
    /// Converged once the relative cost decrease of an accepted step drops below this.
    pub cost_tolerance: f64,
    pub initial_damping: f64,
    /// Relative forward-difference step for the Jacobian.
    pub jacobian_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            step_tolerance: 1e-10,
            cost_tolerance: 1e-12,
            initial_damping: 1e-3,
            jacobian_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: Vec<f64>,
    /// Residual sum of squares at `params`.
    pub rss: f64,
    pub iterations: usize,
    pub n_residuals: usize,
    /// One-sigma parameter uncertainties from `s²(JᵀJ)⁻¹`; `None` when JᵀJ is singular.
    pub std_errors: Option<Vec<f64>>,
}

impl FitReport {
    pub fn rms_residual(&self) -> f64 {
        (self.rss / self.n_residuals as f64).sqrt()
    }
}

fn rss(r: &DVector<f64>) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn evaluate<F>(f: &F, p: &[f64], m: usize) -> Option<DVector<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut out = vec![0.0; m];
    f(p, &mut out);
    out.iter().all(|v| v.is_finite()).then(|| DVector::from_vec(out))
}

fn jacobian<F>(f: &F, p: &[f64], r0: &DVector<f64>, step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, p.len());
    let mut probe = p.to_vec();
    for j in 0..p.len() {
        let h = step * p[j].abs().max(1e-8);
        probe[j] = p[j] + h;
        let rj = evaluate(f, &probe, m)?;
        probe[j] = p[j];
        let h = (p[j] + h) - p[j];
        jac.set_column(j, &((rj - r0) / h));
    }
    Some(jac)
}

/// Minimizes the sum of squared residuals starting from `initial`.
///
/// `residuals(p, out)` must fill `out` (length `n_residuals`). Non-finite
/// residuals are treated as a rejected step. Exceeding the iteration budget
/// returns [`Error::FitFailure`] carrying the best parameters found.
pub fn least_squares<F>(
    residuals: F,
    initial: &[f64],
    n_residuals: usize,
    opts: &FitOptions,
) -> Result<FitReport>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = initial.len();
    if n == 0 || n_residuals < n {
        return Err(Error::InvalidParameter(format!(
            "least squares needs n_residuals >= n_params > 0 (got {n_residuals} and {n})"
        )));
    }
    let mut p = DVector::from_column_slice(initial);
    let mut r = evaluate(&residuals, p.as_slice(), n_residuals).ok_or_else(|| Error::FitFailure {
        reason: "non-finite residuals at the initial guess".into(),
        best: initial.to_vec(),
        cost: f64::INFINITY,
        iterations: 0,
    })?;
    let mut cost = rss(&r);
    let mut lambda = opts.initial_damping;
    let mut nu = 2.0;

    for iteration in 1..=opts.max_iterations {
        let Some(jac) = jacobian(&residuals, p.as_slice(), &r, opts.jacobian_step) else {
            return Err(Error::FitFailure {
                reason: "non-finite Jacobian".into(),
                best: p.as_slice().to_vec(),
                cost,
                iterations: iteration,
            });
        };
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if grad.amax() == 0.0 || cost == 0.0 {
            return Ok(report(p, cost, iteration, n_residuals, &jtj));
        }

        // Inner loop: raise damping until a step lowers the cost.
        let mut accepted = None;
        for _ in 0..60 {
            let mut a = jtj.clone();
            let mut scale = DVector::zeros(n);
            for i in 0..n {
                scale[i] = jtj[(i, i)].max(1e-300);
                a[(i, i)] += lambda * scale[i];
            }
            let Some(delta) = a.lu().solve(&(-&grad)) else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let trial = &p + &delta;
            if let Some(rt) = evaluate(&residuals, trial.as_slice(), n_residuals) {
                let new_cost = rss(&rt);
                // Decrease predicted by the damped linear model.
                let predicted = -grad.dot(&delta) + lambda * delta.component_mul(&scale).dot(&delta);
                if new_cost < cost && predicted > 0.0 {
                    let rho = (cost - new_cost) / predicted;
                    lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                    lambda = lambda.max(1e-15);
                    nu = 2.0;
                    accepted = Some((trial, rt, delta, new_cost));
                    break;
                }
            }
            lambda *= nu;
            nu *= 2.0;
        }

        let Some((trial, rt, delta, new_cost)) = accepted else {
            // No downhill step at any damping: a stationary point to working precision.
            return Ok(report(p, cost, iteration, n_residuals, &jtj));
        };
        let rel_drop = (cost - new_cost) / cost;
        let small_step = delta.norm() <= opts.step_tolerance * (trial.norm() + opts.step_tolerance);
        p = trial;
        r = rt;
        cost = new_cost;
        if small_step || rel_drop < opts.cost_tolerance {
            let jtj = jacobian(&residuals, p.as_slice(), &r, opts.jacobian_step)
                .map(|j| j.transpose() * j)
                .unwrap_or(jtj);
            return Ok(report(p, cost, iteration, n_residuals, &jtj));
        }
    }

    Err(Error::FitFailure {
        reason: format!("no convergence within {} iterations", opts.max_iterations),
        best: p.as_slice().to_vec(),
        cost,
        iterations: opts.max_iterations,
    })
}

fn report(p: DVector<f64>, cost: f64, iterations: usize, m: usize, jtj: &DMatrix<f64>) -> FitReport {
    let n = p.len();
    let std_errors = if m > n {
        let s2 = cost / (m - n) as f64;
        jtj.clone()
            .try_inverse()
            .map(|inv| (0..n).map(|i| (s2 * inv[(i, i)]).abs().sqrt()).collect())
    } else {
        None
    };
    FitReport {
        params: p.as_slice().to_vec(),
        rss: cost,
        iterations,
        n_residuals: m,
        std_errors,
    }
}
