//! Nesterov's constant-step fast gradient method.
//!
//! Used directly for centralized baselines and reference solutions; the
//! distributed algorithms reuse the same `alpha`/`beta` recurrence on the
//! dual iterates.

use nalgebra::DVector;

use crate::Error;

/// Step-size parameters for one FGM run.
#[derive(Debug, Clone, Copy)]
pub struct FgmParams {
    /// Inverse condition ratio `mu/L`, possibly scaled by the graph spectrum.
    pub q: f64,
    /// Gradient step `1/L` of the function being minimized.
    pub step: f64,
}

/// Stopping rule: fixed iteration budget, optionally cut short by a
/// gradient-norm threshold.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub max_iters: usize,
    pub grad_tol: Option<f64>,
}

/// `alpha_0` solving `(alpha^2 - q)/(1 - alpha) = 1`, i.e. the root in
/// (0,1] of `alpha^2 + alpha - (1+q) = 0`. `q = 1` (condition number 1)
/// degenerates to plain gradient descent with `alpha = 1`, `beta = 0`.
pub fn initial_alpha(q: f64) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Fgm(format!("q must lie in [0,1], got {q}")));
    }
    Ok((-1.0 + (5.0 + 4.0 * q).sqrt()) / 2.0)
}

/// One step of the alpha recurrence: the root in (0,1) of
/// `alpha^2 = (1 - alpha) alpha_k^2 + q alpha`, plus the momentum weight
/// `beta_k = alpha_k (1 - alpha_k) / (alpha_k^2 + alpha_{k+1})`.
pub fn alpha_step(alpha_k: f64, q: f64) -> (f64, f64) {
    // alpha^2 + (alpha_k^2 - q) alpha - alpha_k^2 = 0
    let b = alpha_k * alpha_k - q;
    let alpha_next = (-b + (b * b + 4.0 * alpha_k * alpha_k).sqrt()) / 2.0;
    let beta = alpha_k * (1.0 - alpha_k) / (alpha_k * alpha_k + alpha_next);
    (alpha_next, beta)
}

/// Trajectory of the non-extrapolated iterates `x_k`, including `x_0`.
pub struct FgmRun {
    pub x_final: DVector<f64>,
    pub trajectory: Vec<DVector<f64>>,
}

/// Minimize a strongly convex smooth function given its gradient oracle.
///
/// Runs `x_{k+1} = y_k - step * grad(y_k)` with the constant-step momentum
/// recurrence, starting the extrapolation sequence at `x0`.
pub fn fgm_minimize(
    mut grad: impl FnMut(&DVector<f64>) -> DVector<f64>,
    params: FgmParams,
    x0: &DVector<f64>,
    stop: StopRule,
) -> Result<FgmRun, Error> {
    let mut alpha = initial_alpha(params.q)?;
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut trajectory = vec![x.clone()];
    for k in 0..stop.max_iters {
        let g = grad(&y);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fgm(format!("non-finite gradient at iteration {k}")));
        }
        if let Some(tol) = stop.grad_tol {
            if g.norm() <= tol {
                break;
            }
        }
        let x_next = &y - &g * params.step;
        let (alpha_next, beta) = alpha_step(alpha, params.q);
        y = &x_next + (&x_next - &x) * beta;
        x = x_next;
        alpha = alpha_next;
        trajectory.push(x.clone());
    }
    Ok(FgmRun { x_final: x, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_alpha_golden_ratio() {
        let a = initial_alpha(0.0).unwrap();
        assert!((a - (5.0f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn initial_alpha_q_quarter() {
        let a = initial_alpha(0.25).unwrap();
        assert!((a - (-1.0 + 6.0f64.sqrt()) / 2.0).abs() < 1e-15);
        // defining equation holds
        assert!(((a * a - 0.25) / (1.0 - a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_alpha_limits_and_domain() {
        let a = initial_alpha(1.0 - 1e-12).unwrap();
        assert!(a < 1.0 && a > 0.999_999);
        // q = 1 degenerates cleanly: alpha stays 1, momentum vanishes
        assert_eq!(initial_alpha(1.0).unwrap(), 1.0);
        let (a1, beta) = alpha_step(1.0, 1.0);
        assert_eq!(a1, 1.0);
        assert_eq!(beta, 0.0);
        assert!(initial_alpha(1.1).is_err());
        assert!(initial_alpha(-0.1).is_err());
    }

    #[test]
    fn alpha_step_residual_and_fixed_point() {
        // residual of the defining quadratic at the returned root
        let (a1, beta) = alpha_step(0.5, 0.0);
        let res = a1 * a1 - (1.0 - a1) * 0.25;
        assert!(res.abs() < 1e-14);
        assert!(beta >= 0.0);
        // q = alpha_k^2 makes alpha_k a fixed point
        let (a1, _) = alpha_step(0.6, 0.36);
        assert!((a1 - 0.6).abs() < 1e-14);
    }

    #[test]
    fn alpha_recurrence_stays_in_unit_interval() {
        for q in [0.0, 0.01, 0.5, 0.99] {
            let mut a = initial_alpha(q).unwrap();
            for _ in 0..200 {
                let (next, beta) = alpha_step(a, q);
                assert!(next > 0.0 && next < 1.0);
                assert!(beta >= 0.0);
                a = next;
            }
        }
    }

    #[test]
    fn minimizes_shifted_quadratic() {
        let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let grad = |x: &DVector<f64>| x - &c;
        let run = fgm_minimize(
            grad,
            FgmParams { q: 0.999, step: 1.0 },
            &DVector::zeros(3),
            StopRule { max_iters: 100, grad_tol: Some(1e-14) },
        )
        .unwrap();
        assert!((run.x_final - c).norm() < 1e-12);
    }

    #[test]
    fn near_exact_on_identity_hessian() {
        // f = 0.5||x||^2, step 1: first step lands on the minimizer
        let grad = |x: &DVector<f64>| x.clone();
        let run = fgm_minimize(
            grad,
            FgmParams { q: 0.999_999, step: 1.0 },
            &DVector::from_vec(vec![1.0]),
            StopRule { max_iters: 2, grad_tol: None },
        )
        .unwrap();
        assert!(run.x_final.norm() <= 1e-12);
    }

    #[test]
    fn geometric_rate_on_diagonal_quadratic() {
        // f(x) = 0.5 x' diag(1,4) x, mu = 1, L = 4
        let d = [1.0, 4.0];
        let grad = move |x: &DVector<f64>| DVector::from_fn(2, |i, _| d[i] * x[i]);
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let run = fgm_minimize(
            grad,
            FgmParams { q: 0.25, step: 0.25 },
            &x0,
            StopRule { max_iters: 200, grad_tol: None },
        )
        .unwrap();
        let f = |x: &DVector<f64>| 0.5 * (x[0] * x[0] + 4.0 * x[1] * x[1]);
        let (mu, l) = (1.0, 4.0);
        let r2 = x0.norm_squared();
        for (k, xk) in run.trajectory.iter().enumerate() {
            let bound = l * (1.0 - (mu / l as f64).sqrt()).powi(k as i32) * r2;
            assert!(f(xk) <= bound + 1e-12, "rate violated at k={k}");
        }
        let gap50 = f(&run.trajectory[50]);
        assert!(gap50 <= l * (1.0 - 0.5f64).powi(50) * r2);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let grad = |_: &DVector<f64>| DVector::from_vec(vec![f64::NAN]);
        let res = fgm_minimize(
            grad,
            FgmParams { q: 0.5, step: 1.0 },
            &DVector::zeros(1),
            StopRule { max_iters: 5, grad_tol: None },
        );
        assert!(res.is_err());
    }

    #[test]
    fn deterministic_trajectories() {
        let c = DVector::from_vec(vec![0.3, 0.7]);
        let mk = || {
            let c = c.clone();
            fgm_minimize(
                move |x: &DVector<f64>| (x - &c) * 2.0,
                FgmParams { q: 1.0 - 1e-6, step: 0.5 },
                &DVector::zeros(2),
                StopRule { max_iters: 40, grad_tol: None },
            )
            .unwrap()
        };
        let (a, b) = (mk(), mk());
        for (u, v) in a.trajectory.iter().zip(&b.trajectory) {
            assert_eq!(u.as_slice(), v.as_slice());
        }
    }
}
