//! Reference solutions and approximate-optimality certificates.
//!
//! A candidate is accepted when its (signed) objective gap is at most
//! `epsilon` and its consensus residual `||sqrt(W) x||` is at most
//! `epsilon_tilde`; every complexity statement in this crate targets
//! `epsilon_tilde = epsilon / R`.

use nalgebra::{DMatrix, DVector};

use crate::dualnet::{stack_blocks, AlgoConfig, RunTrace, Variant};
use crate::fgm::{fgm_minimize, FgmParams, StopRule};
use crate::graph::{
    consensus_residual, laplacian, pinv_sqrt_laplacian, LaplacianMatrix, Topology,
};
use crate::problems::{local_minimizer, AgentObjective, Domain, SeparableObjective};
use crate::Error;

/// Centralized solution of the consensus problem plus the derived radii.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    /// Consensus optimum (dimension n).
    pub x_star: DVector<f64>,
    pub f_star: f64,
    /// Minimal-norm dual solution, stacked (dimension m*n).
    pub y_star: DVector<f64>,
    /// `||y_star||`.
    pub r: f64,
    /// `||x*_stacked - x*(0)_stacked||`.
    pub r_x: f64,
    /// `r_x + ||x*_stacked||`.
    pub r_w: f64,
    /// Norm of the stacked (multiplier-adjusted) gradients at the optimum;
    /// the default Lipschitz bound M.
    pub grad_norm: f64,
    /// Per-agent unconstrained minimizers `x*_i(0)`.
    pub x0_blocks: Vec<DVector<f64>>,
    pub x_star_stacked: DVector<f64>,
}

/// Signed-gap feasibility certificate.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SolutionCertificate {
    pub primal_gap: f64,
    pub consensus_residual: f64,
    pub epsilon: f64,
    pub epsilon_tilde: f64,
    pub satisfied: bool,
}

fn all_match<F: Fn(&AgentObjective) -> bool>(problem: &SeparableObjective, f: F) -> bool {
    problem.agents().iter().all(f)
}

fn solve_x_star(problem: &SeparableObjective, tol: f64) -> Result<DVector<f64>, Error> {
    let n = problem.dim();
    if all_match(problem, |a| matches!(a, AgentObjective::Quadratic { .. })) {
        // weighted average of the centers
        let mut num = DVector::zeros(n);
        let mut den = 0.0;
        for a in problem.agents() {
            if let AgentObjective::Quadratic { center, scale } = a {
                num += center * *scale;
                den += scale;
            }
        }
        return Ok(num / den);
    }
    if all_match(problem, |a| matches!(a, AgentObjective::Entropy { .. })) {
        // normalized geometric mean of the reference distributions
        let m = problem.agent_count() as f64;
        let mut log_mean = DVector::zeros(n);
        for a in problem.agents() {
            if let AgentObjective::Entropy { q } = a {
                for j in 0..n {
                    log_mean[j] += q[j].ln() / m;
                }
            }
        }
        let max = log_mean.max();
        let mut x = log_mean.map(|v: f64| (v - max).exp());
        let s: f64 = x.sum();
        x /= s;
        return Ok(x);
    }
    if all_match(problem, |a| matches!(a, AgentObjective::Ridge { .. })) {
        // normal equations of the pooled quadratic
        let mut g = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for a in problem.agents() {
            if let AgentObjective::Ridge { gram, lin, .. } = a {
                g += gram;
                rhs += lin;
            }
        }
        return g
            .clone()
            .lu()
            .solve(&rhs)
            .or_else(|| g.svd(true, true).solve(&rhs, 1e-12).ok().map(|m| m.column(0).into_owned()))
            .ok_or_else(|| Error::Certify("pooled normal equations are singular".into()));
    }
    // generic path: accelerated gradient on the pooled objective
    let mu = problem.mu_sum();
    let l_sum: f64 = problem.agents().iter().map(|a| a.l_smooth()).sum();
    if mu <= 0.0 || !l_sum.is_finite() {
        return Err(Error::Certify(
            "no closed-form reference solve and the pooled objective is not strongly convex and smooth".into(),
        ));
    }
    let run = fgm_minimize(
        |x| problem.gradient_consensus(x),
        FgmParams { q: (mu / l_sum).min(1.0), step: 1.0 / l_sum },
        &DVector::zeros(n),
        StopRule { max_iters: 2_000_000, grad_tol: Some(tol) },
    )?;
    let g = problem.gradient_consensus(&run.x_final).norm();
    if g > tol * 10.0 {
        return Err(Error::Certify(format!(
            "reference solve did not converge: gradient norm {g:.3e} above tolerance {tol:.3e}"
        )));
    }
    Ok(run.x_final)
}

/// Solve the consensus problem centrally and assemble the dual radii.
///
/// The minimal-norm dual point is recovered by applying the pseudo-inverse
/// of the Laplacian square root blockwise to the stacked gradients at the
/// optimum. For simplex-domain agents the gradients are first shifted by
/// the (common) simplex multiplier so the system is consistent.
pub fn reference_solve(
    problem: &SeparableObjective,
    topo: &Topology,
    tol: f64,
) -> Result<ReferenceSolution, Error> {
    let m = topo.node_count();
    if problem.agent_count() != m {
        return Err(Error::Dimension(format!(
            "{} agents on a graph with {m} nodes",
            problem.agent_count()
        )));
    }
    let n = problem.dim();
    let x_star = solve_x_star(problem, tol)?;
    let f_star = problem.value_consensus(&x_star);

    // stacked gradients, centered across agents per coordinate; centering
    // removes the simplex multiplier and is a no-op (up to solve tolerance)
    // for unconstrained agents
    let mut grads: Vec<DVector<f64>> = problem.agents().iter().map(|a| a.gradient(&x_star)).collect();
    let mut mean = DVector::zeros(n);
    for g in &grads {
        mean += g;
    }
    mean /= m as f64;
    let simplex = problem.agents().iter().any(|a| a.domain() == Domain::Simplex);
    if simplex {
        for g in &mut grads {
            *g -= &mean;
        }
    }
    let g_stacked = stack_blocks(&grads);

    let w = laplacian(topo);
    let p = pinv_sqrt_laplacian(&w);
    let mut y_star = DVector::zeros(m * n);
    for i in 0..m {
        for j in 0..m {
            let pij = p[(i, j)];
            if pij != 0.0 {
                for d in 0..n {
                    y_star[i * n + d] += pij * grads[j][d];
                }
            }
        }
    }

    let x0_blocks: Vec<DVector<f64>> = problem
        .agents()
        .iter()
        .map(|a| local_minimizer(a, 1e-10))
        .collect::<Result<_, _>>()?;
    let x_star_stacked = stack_blocks(&vec![x_star.clone(); m]);
    let x0_stacked = stack_blocks(&x0_blocks);
    let r = y_star.norm();
    let r_x = (&x_star_stacked - x0_stacked).norm();
    let r_w = r_x + x_star_stacked.norm();
    Ok(ReferenceSolution {
        x_star,
        f_star,
        y_star,
        r,
        r_x,
        r_w,
        grad_norm: g_stacked.norm(),
        x0_blocks,
        x_star_stacked,
    })
}

/// The default constraint tolerance `epsilon / R`; identical agents make
/// `R = 0` and then the caller must pick the tolerance explicitly.
pub fn default_epsilon_tilde(epsilon: f64, r: f64) -> Result<f64, Error> {
    if r > 0.0 {
        Ok(epsilon / r)
    } else {
        Err(Error::Certify(
            "R = 0 (identical agents); supply epsilon_tilde explicitly".into(),
        ))
    }
}

/// Evaluate a stacked candidate against the reference solution.
pub fn certificate(
    problem: &SeparableObjective,
    candidate: &DVector<f64>,
    reference: &ReferenceSolution,
    w: &LaplacianMatrix,
    epsilon: f64,
    epsilon_tilde: f64,
) -> Result<SolutionCertificate, Error> {
    let primal_gap = problem.value_stacked(candidate)? - reference.f_star;
    let residual = consensus_residual(candidate, w)?;
    Ok(SolutionCertificate {
        primal_gap,
        consensus_residual: residual,
        epsilon,
        epsilon_tilde,
        // the gap is signed: infeasible candidates may sit below f_star
        satisfied: primal_gap <= epsilon && residual <= epsilon_tilde,
    })
}

/// Where the run first met the certificate, versus the predicted bound.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct BoundReport {
    /// First trace iteration whose recorded candidate satisfied both
    /// inequalities, if any.
    pub first_achieved: Option<usize>,
    pub bound_n: usize,
    /// Whether the run's output candidate satisfies the certificate.
    pub satisfied_at_bound: bool,
    /// `first_achieved / bound_n`, for scaling studies.
    pub ratio: Option<f64>,
}

pub fn compare_to_bound(trace: &RunTrace, epsilon: f64, epsilon_tilde: f64, bound_n: usize) -> BoundReport {
    let first_achieved = trace
        .rows
        .iter()
        .find(|r| r.primal_gap <= epsilon && r.consensus_residual <= epsilon_tilde)
        .map(|r| r.iteration);
    let satisfied_at_bound =
        trace.final_primal_gap <= epsilon && trace.final_consensus_residual <= epsilon_tilde;
    BoundReport {
        first_achieved,
        bound_n,
        satisfied_at_bound,
        ratio: first_achieved.map(|k| k as f64 / bound_n as f64),
    }
}

/// Assemble a run configuration from a reference solution.
pub fn algo_config(variant: Variant, epsilon: f64, reference: &ReferenceSolution) -> AlgoConfig {
    let mut cfg = AlgoConfig::new(variant, epsilon);
    cfg.r = reference.r;
    cfg.r_x = reference.r_x;
    cfg.r_w = reference.r_w;
    cfg.f_star = reference.f_star;
    cfg.m_lip = Some(reference.grad_norm);
    cfg
}
