//! Shared helpers for the integration suites: closed-form dual values for
//! quadratic instances, centralized dual trajectories, and small builders.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use distopt::fgm::{fgm_minimize, FgmParams, StopRule};
use distopt::graph::{laplacian, sqrt_laplacian, Topology};
use distopt::problems::{make_quadratic, AgentObjective, SeparableObjective};

pub fn vecd(v: &[f64]) -> DVector<f64> {
    DVector::from_vec(v.to_vec())
}

/// Quadratic agents `(s_i/2)||x - c_i||^2` from centers and scales.
pub fn quadratic_problem(centers: &[DVector<f64>], scales: &[f64]) -> SeparableObjective {
    let agents: Vec<AgentObjective> = centers
        .iter()
        .zip(scales)
        .map(|(c, &s)| make_quadratic(c.clone(), s).unwrap())
        .collect();
    SeparableObjective::new(agents).unwrap()
}

/// Dual value at a stacked dual point `z` for quadratic agents:
/// `sum_i <z_i, c_i> + ||z_i||^2 / (2 s_i)` (the conjugate of the sum,
/// evaluated blockwise). The dual optimum equals `-F*`.
pub fn quadratic_dual_value(z: &DVector<f64>, centers: &[DVector<f64>], scales: &[f64]) -> f64 {
    let n = centers[0].len();
    let mut v = 0.0;
    for (i, (c, &s)) in centers.iter().zip(scales).enumerate() {
        let zi = z.rows(i * n, n);
        v += zi.dot(c) + zi.norm_squared() / (2.0 * s);
    }
    v
}

/// Apply `sqrt(W̄) ⊗ I_n` to a stacked vector.
pub fn apply_sqrt_block(s: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let m = s.nrows();
    let n = x.len() / m;
    let mut out = DVector::zeros(x.len());
    for d in 0..n {
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                acc += s[(i, j)] * x[j * n + d];
            }
            out[i * n + d] = acc;
        }
    }
    out
}

/// Centralized accelerated trajectory in the dual variable `y`, for
/// quadratic agents; returns the stacked `z_k = sqrt(W) y_k` sequence
/// including `z_0 = 0`. `dual_reg` adds `delta * y` to the dual gradient
/// (the proximal dual term), matching the regularized variant.
pub fn centralized_dual_trajectory(
    topo: &Topology,
    centers: &[DVector<f64>],
    scales: &[f64],
    q: f64,
    step: f64,
    dual_reg: f64,
    iters: usize,
) -> Vec<DVector<f64>> {
    let s = sqrt_laplacian(&laplacian(topo));
    let n = centers[0].len();
    let m = centers.len();
    let conj = |z: &DVector<f64>| -> DVector<f64> {
        let mut x = DVector::zeros(m * n);
        for i in 0..m {
            for d in 0..n {
                x[i * n + d] = centers[i][d] + z[i * n + d] / scales[i];
            }
        }
        x
    };
    let grad = move |y: &DVector<f64>| {
        let z = apply_sqrt_block(&s, y);
        let x = conj(&z);
        apply_sqrt_block(&s, &x) + y * dual_reg
    };
    let run = fgm_minimize(
        grad,
        FgmParams { q, step },
        &DVector::zeros(m * n),
        StopRule { max_iters: iters, grad_tol: None },
    )
    .unwrap();
    let s2 = sqrt_laplacian(&laplacian(topo));
    run.trajectory.iter().map(|y| apply_sqrt_block(&s2, y)).collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
