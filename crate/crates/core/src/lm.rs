//! Damped least squares (Levenberg–Marquardt) with analytic Jacobians.
//!
//! Problems expose residuals and Jacobians over a real parameter vector;
//! domain constraints are expressed by returning `None` for invalid
//! parameters, which the optimizer treats as a rejected step. Marquardt
//! diagonal scaling makes the damping invariant to per-parameter units, so
//! wildly different magnitudes (Hz next to seconds) need no manual scaling.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

pub trait LeastSquares<S: Scalar> {
    /// Residual vector at `p`, or `None` when `p` is outside the domain.
    fn residuals(&self, p: &DVector<S>) -> Option<DVector<S>>;
    /// Jacobian of the residuals at `p` (rows: residuals, cols: parameters).
    fn jacobian(&self, p: &DVector<S>) -> Option<DMatrix<S>>;
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions<S> {
    pub max_iterations: usize,
    /// Relative cost-decrease threshold counting as converged.
    pub cost_tol: S,
    /// Infinity-norm of the gradient counting as converged.
    pub grad_tol: S,
    /// Relative step-size threshold counting as converged.
    pub step_tol: S,
    pub initial_lambda: S,
}

impl<S: Scalar> Default for LmOptions<S> {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            cost_tol: S::of(1e-12),
            grad_tol: S::of(1e-10),
            step_tol: S::of(1e-12),
            initial_lambda: S::of(1e-3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport<S: Scalar> {
    pub params: DVector<S>,
    /// Euclidean norm of the residual vector at the returned parameters.
    pub residual_norm: S,
    pub converged: bool,
    pub iterations: usize,
    /// Parameter covariance from the local quadratic model,
    /// sigma^2 (J^T J)^-1 with sigma^2 the reduced chi-square; `None` when
    /// the problem is degenerate (fewer residuals than parameters or a
    /// singular normal matrix).
    pub covariance: Option<DMatrix<S>>,
}

/// Minimize one half the squared residual norm starting from `x0`.
///
/// Always returns the best parameters seen; `converged` distinguishes a
/// genuine optimum from an exhausted iteration or damping budget.
pub fn minimize<S: Scalar, P: LeastSquares<S>>(
    problem: &P,
    x0: DVector<S>,
    opts: &LmOptions<S>,
) -> LmReport<S> {
    let half = S::of(0.5);
    let mut x = x0;
    let report_fail = |x: DVector<S>| LmReport {
        residual_norm: S::zero(),
        params: x,
        converged: false,
        iterations: 0,
        covariance: None,
    };
    let Some(mut r) = problem.residuals(&x) else {
        return report_fail(x);
    };
    let mut cost = half * r.norm_squared();
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iterations {
        iterations += 1;
        let Some(jac) = problem.jacobian(&x) else {
            return report_fail(x);
        };
        // column equilibration: parameters carry wildly different units, so
        // solve in a space where every Jacobian column has unit norm
        let n = jac.ncols();
        let mut scale = DVector::from_element(n, S::one());
        let mut jac_s = jac;
        for j in 0..n {
            let nrm = jac_s.column(j).norm();
            if nrm > S::zero() {
                scale[j] = nrm;
                let col = jac_s.column(j) / nrm;
                jac_s.set_column(j, &col);
            }
        }
        let grad = jac_s.transpose() * &r;
        if grad.amax() < opts.grad_tol {
            converged = true;
            break;
        }
        let hess = jac_s.transpose() * &jac_s;
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = hess.clone();
            for i in 0..n {
                damped[(i, i)] += lambda;
            }
            let step_s = match damped.lu().solve(&(-&grad)) {
                Some(s) => s,
                None => {
                    lambda *= S::of(10.0);
                    continue;
                }
            };
            let step = step_s.component_div(&scale);
            let x_new = &x + &step;
            let Some(r_new) = problem.residuals(&x_new) else {
                lambda *= S::of(10.0);
                continue;
            };
            let cost_new = half * r_new.norm_squared();
            if cost_new.is_finite() && cost_new < cost {
                let decrease = cost - cost_new;
                // per-parameter relative step: a plain norm would be ruled by
                // whichever parameter carries the largest units
                let mut rel_step = S::zero();
                for i in 0..step.len() {
                    rel_step = rel_step.max(step[i].abs() / (x[i].abs() + opts.step_tol));
                }
                let small_step = rel_step <= opts.step_tol;
                x = x_new;
                r = r_new;
                let stalled = decrease <= opts.cost_tol * cost.max(S::eps());
                cost = cost_new;
                lambda = (lambda / S::of(10.0)).max(S::of(1e-14));
                accepted = true;
                if stalled || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= S::of(10.0);
            if lambda > S::of(1e14) {
                break;
            }
        }
        if !accepted || converged {
            converged = converged || cost <= S::eps();
            break;
        }
    }

    let covariance = problem.jacobian(&x).and_then(|jac| {
        let m = jac.nrows();
        let n = jac.ncols();
        if m <= n {
            return None;
        }
        let sigma2 = S::of(2.0) * cost / S::of((m - n) as f64);
        // invert in the equilibrated space for the same conditioning reasons
        let mut scale = DVector::from_element(n, S::one());
        let mut jac_s = jac;
        for j in 0..n {
            let nrm = jac_s.column(j).norm();
            if nrm > S::zero() {
                scale[j] = nrm;
                let col = jac_s.column(j) / nrm;
                jac_s.set_column(j, &col);
            }
        }
        (jac_s.transpose() * &jac_s).try_inverse().map(|inv_s| {
            let mut cov = inv_s * sigma2;
            for i in 0..n {
                for j in 0..n {
                    cov[(i, j)] /= scale[i] * scale[j];
                }
            }
            cov
        })
    });

    LmReport {
        params: x,
        residual_norm: (S::of(2.0) * cost).sqrt(),
        converged,
        iterations,
        covariance,
    }
}

/// Finite-difference Jacobian for checking analytic implementations in tests.
pub fn numerical_jacobian<S: Scalar, P: LeastSquares<S>>(
    problem: &P,
    p: &DVector<S>,
) -> Option<DMatrix<S>> {
    let r0 = problem.residuals(p)?;
    let n = p.len();
    let mut jac = DMatrix::zeros(r0.len(), n);
    let rel = S::eps().sqrt();
    for j in 0..n {
        let h = rel * p[j].abs().max(rel);
        let mut fwd = p.clone();
        fwd[j] += h;
        let mut bwd = p.clone();
        bwd[j] -= h;
        let rf = problem.residuals(&fwd)?;
        let rb = problem.residuals(&bwd)?;
        let col = (rf - rb) / (S::of(2.0) * h);
        jac.set_column(j, &col);
    }
    Some(jac)
}
