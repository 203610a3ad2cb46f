//! Distributed dual first-order algorithms over a simulated network.
//!
//! All eight variants share one outer skeleton: each agent keeps a dual
//! block `z_i` with its extrapolated companion `z̃_i`, produces a primal
//! payload from `z̃_i` (a conjugate solve or an inner gradient loop),
//! exchanges it with neighbors, and takes a dual gradient step built from
//! the Laplacian-weighted neighbor sum. The variants differ in the payload
//! oracle, the step sizes, and an optional dual regularization term.

use nalgebra::DVector;

use crate::fgm::{alpha_step, fgm_minimize, initial_alpha, FgmParams, StopRule};
use crate::graph::{
    consensus_residual, laplacian, spectral_summary, SpectralSummary, Topology,
};
use crate::problems::{local_minimizer, regularize, AgentObjective, SeparableObjective};
use crate::simnet::{NetworkSim, OracleKind};
use crate::Error;

/// The eight algorithm variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Case1,
    Case2,
    Case3,
    Case4,
    NofriendScSmooth,
    NofriendSmooth,
    AugmentedSc,
    AugmentedSmooth,
}

impl Variant {
    pub fn all() -> [Variant; 8] {
        [
            Variant::Case1,
            Variant::Case2,
            Variant::Case3,
            Variant::Case4,
            Variant::NofriendScSmooth,
            Variant::NofriendSmooth,
            Variant::AugmentedSc,
            Variant::AugmentedSmooth,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Case1 => "case1",
            Variant::Case2 => "case2",
            Variant::Case3 => "case3",
            Variant::Case4 => "case4",
            Variant::NofriendScSmooth => "nofriend_sc_smooth",
            Variant::NofriendSmooth => "nofriend_smooth",
            Variant::AugmentedSc => "augmented_sc",
            Variant::AugmentedSmooth => "augmented_smooth",
        }
    }

    /// Variants whose complexity statement prescribes an inner loop length.
    pub fn has_inner_loop(self) -> bool {
        matches!(
            self,
            Variant::NofriendScSmooth
                | Variant::NofriendSmooth
                | Variant::AugmentedSc
                | Variant::AugmentedSmooth
        )
    }
}

/// Run configuration: target accuracy, reference radii, and overrides.
#[derive(Debug, Clone)]
pub struct AlgoConfig {
    pub variant: Variant,
    pub epsilon: f64,
    /// Norm of the minimal-norm dual solution.
    pub r: f64,
    /// Distance from the stacked local minimizers to the stacked optimum.
    pub r_x: f64,
    /// `r_x` plus the norm of the stacked optimum.
    pub r_w: f64,
    /// Optimal consensus value, used for trace gaps.
    pub f_star: f64,
    /// Bound on the stacked gradient norm at the optimum.
    pub m_lip: Option<f64>,
    pub mu_override: Option<f64>,
    pub l_override: Option<f64>,
    pub n_override: Option<usize>,
    pub t_override: Option<usize>,
    pub record_z: bool,
    pub record_candidates: bool,
}

impl AlgoConfig {
    pub fn new(variant: Variant, epsilon: f64) -> Self {
        AlgoConfig {
            variant,
            epsilon,
            r: 0.0,
            r_x: 0.0,
            r_w: 0.0,
            f_star: 0.0,
            m_lip: None,
            mu_override: None,
            l_override: None,
            n_override: None,
            t_override: None,
            record_z: false,
            record_candidates: false,
        }
    }
}

/// Per-iteration measurements.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub comm_rounds: usize,
    pub oracle_calls_max: usize,
    pub primal_gap: f64,
    pub consensus_residual: f64,
    /// `<z̃, x*(z̃)>` summed over agents, at the point the payloads were
    /// computed from.
    pub dual_gap_witness: f64,
}

/// Full record of one run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    /// Stacked output candidate per the variant's convergence statement.
    pub final_candidate: DVector<f64>,
    pub final_primal_gap: f64,
    pub final_consensus_residual: f64,
    pub comm_rounds_total: usize,
    pub oracle_calls: Vec<usize>,
    pub violation_count: usize,
    /// Stacked `z_k` for `k = 0..=N`, when requested.
    pub z_history: Option<Vec<DVector<f64>>>,
    /// Stacked payload candidates per iteration, when requested.
    pub candidate_history: Option<Vec<DVector<f64>>>,
    pub n_used: usize,
    pub t_used: Option<usize>,
}

/// Everything the complexity formulas consume.
#[derive(Debug, Clone, Copy)]
pub struct BoundConstants {
    pub mu: f64,
    pub l: f64,
    pub m_lip: Option<f64>,
    pub mu_sum: f64,
    pub spectral: SpectralSummary,
    pub epsilon: f64,
    pub r: f64,
    pub r_x: f64,
    pub r_w: f64,
    pub agent_count: usize,
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn ln_pos(a: f64) -> f64 {
    if a > 1.0 {
        a.ln()
    } else {
        0.0
    }
}

fn ceil1(x: f64) -> Result<usize, Error> {
    if !x.is_finite() {
        return Err(Error::Algorithm(format!("iteration bound is not finite: {x}")));
    }
    Ok(x.ceil().max(1.0) as usize)
}

/// Outer (and, where applicable, inner) iteration counts predicted by the
/// variant's convergence statement, floored at 1.
pub fn iteration_bound(variant: Variant, c: &BoundConstants) -> Result<(usize, Option<usize>), Error> {
    let chi = c.spectral.chi;
    let lam_max = c.spectral.lambda_max;
    let lam_min_plus = c.spectral.lambda_min_plus;
    let eps = c.epsilon;
    if eps <= 0.0 {
        return Err(Error::Algorithm("epsilon must be positive".into()));
    }
    let need_m = || {
        c.m_lip
            .filter(|m| m.is_finite() && *m >= 0.0)
            .ok_or_else(|| Error::Algorithm(format!("{} bound requires M", variant.name())))
    };
    let need_pos = |v: f64, what: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Algorithm(format!("{} bound requires positive finite {what}, got {v}", variant.name())))
        }
    };
    match variant {
        Variant::Case1 => {
            let mu = need_pos(c.mu, "mu")?;
            let l = need_pos(c.l, "L")?;
            let n = 2.0 * ((l / mu) * chi).sqrt() * ln_pos(2.0 * SQRT_2 * lam_max * c.r * c.r / (mu * eps));
            Ok((ceil1(n)?, None))
        }
        Variant::Case2 => {
            let mu = need_pos(c.mu, "mu")?;
            let m = need_m()?;
            let a = 4.0 * chi * m * m / (mu * eps);
            let n = 2.0 * (a + 1.0).sqrt() * ln_pos(a + 1.0);
            Ok((ceil1(n)?, None))
        }
        Variant::Case3 => {
            let l = need_pos(c.l, "L")?;
            let rx = need_pos(c.r_x, "R_x")?;
            let n = 2.0 * ((2.0 * l * rx * rx / eps + 1.0) * chi).sqrt()
                * ln_pos(8.0 * SQRT_2 * lam_max * c.r * c.r * rx * rx / (eps * eps));
            Ok((ceil1(n)?, None))
        }
        Variant::Case4 => {
            let m = need_m()?;
            let rx = need_pos(c.r_x, "R_x")?;
            let a = 16.0 * chi * m * m * rx * rx / (eps * eps);
            let n = 2.0 * (a + 1.0).sqrt() * ln_pos(a + 1.0);
            Ok((ceil1(n)?, None))
        }
        Variant::NofriendScSmooth => {
            let mu = need_pos(c.mu, "mu")?;
            let l = need_pos(c.l, "L")?;
            let n = 8.0 * ((l / mu) * chi).sqrt() * ln_pos(2.0 * SQRT_2 * lam_max * c.r * c.r / (mu * eps));
            let t = (l / mu).sqrt()
                * ln_pos(6.0 * l * c.r * c.r * c.r_w * c.r_w / (eps * eps) * ((l / mu) * chi).sqrt());
            Ok((ceil1(n)?, Some(ceil1(t)?)))
        }
        Variant::NofriendSmooth => {
            let l = need_pos(c.l, "L")?;
            let rx = need_pos(c.r_x, "R_x")?;
            let kappa = 2.0 * l * rx * rx / eps + 1.0;
            let n = 8.0 * (kappa * chi).sqrt()
                * ln_pos(8.0 * SQRT_2 * lam_max * rx * rx * c.r * c.r / (eps * eps));
            let t = kappa.sqrt()
                * ln_pos(
                    (2.0 * 6.0f64.sqrt() * c.r * c.r * c.r_w * c.r_w / eps)
                        * (l / eps + 1.0 / (2.0 * rx * rx))
                        * (kappa * chi).sqrt(),
                );
            Ok((ceil1(n)?, Some(ceil1(t)?)))
        }
        Variant::AugmentedSc => {
            let mu_bar = need_pos(c.mu_sum, "sum of mu_i")?;
            let l = need_pos(c.l, "L")?;
            let kappa = l / mu_bar + chi;
            let n = 8.0 * (kappa * chi).sqrt() * ln_pos(2.0 * SQRT_2 * lam_max * c.r * c.r / (mu_bar * eps));
            let alpha = mu_bar / lam_min_plus;
            let l_alpha = l + alpha * lam_max;
            let t = kappa.sqrt()
                * ln_pos(6.0 * l_alpha * c.r * c.r * c.r_w * c.r_w / (eps * eps) * (kappa * chi).sqrt());
            Ok((ceil1(n)?, Some(ceil1(t)?)))
        }
        Variant::AugmentedSmooth => {
            let l = need_pos(c.l, "L")?;
            let rx = need_pos(c.r_x, "R_x")?;
            let mm = c.agent_count as f64;
            let kappa = 2.0 * rx * rx * l / (mm * eps) + chi + 1.0;
            let c1 = 8.0 * SQRT_2 * lam_max * rx * rx * c.r * c.r / (mm * eps * eps);
            let n = 8.0 * (kappa * chi).sqrt() * ln_pos(c1);
            let mu_hat = mm * eps / (rx * rx);
            let alpha = mu_hat / lam_min_plus;
            let l_hat = l + alpha * lam_max + mu_hat;
            let c2 = 24.0 * l_hat * c.r * c.r * c.r_w * c.r_w / (eps * eps) * (kappa * chi).sqrt();
            let t = kappa.sqrt() * ln_pos(c2);
            Ok((ceil1(n)?, Some(ceil1(t)?)))
        }
    }
}

/// Concatenate per-agent blocks into one vector.
pub fn stack_blocks(blocks: &[DVector<f64>]) -> DVector<f64> {
    let n = blocks.first().map_or(0, |b| b.len());
    let mut out = DVector::zeros(blocks.len() * n);
    for (i, b) in blocks.iter().enumerate() {
        out.rows_mut(i * n, n).copy_from(b);
    }
    out
}

/// One local inner solve: `t` accelerated gradient steps on
/// `f(w) - <z, w>` (plus an optional proximal term `(c/2)||w - x0||^2`),
/// from `w_0 = 0`. Returns the non-extrapolated iterate `w_t`.
pub fn inner_local_solve(
    agent: &AgentObjective,
    z: &DVector<f64>,
    t: usize,
    q: f64,
    step: f64,
    reg: Option<(f64, &DVector<f64>)>,
) -> Result<DVector<f64>, Error> {
    let run = fgm_minimize(
        |w| {
            let mut g = agent.gradient(w) - z;
            if let Some((c, x0)) = reg {
                g += (w - x0) * c;
            }
            g
        },
        FgmParams { q, step },
        &DVector::zeros(agent.dim()),
        StopRule { max_iters: t, grad_tol: None },
    )?;
    Ok(run.x_final)
}

struct OuterParams {
    q: f64,
    step: f64,
    dual_reg: f64,
    n: usize,
    t: Option<usize>,
}

/// The shared outer loop. `payloads_fn` maps the extrapolated dual blocks
/// to one primal payload per agent (running inner exchanges if needed);
/// `final_fn` produces the output candidate from the last dual blocks and
/// the last payloads.
fn run_outer(
    problem: &SeparableObjective,
    topo: &Topology,
    cfg: &AlgoConfig,
    p: OuterParams,
    mut payloads_fn: impl FnMut(&mut NetworkSim, &[DVector<f64>]) -> Result<Vec<DVector<f64>>, Error>,
    mut final_fn: impl FnMut(&mut NetworkSim, &[DVector<f64>], &[DVector<f64>]) -> Result<DVector<f64>, Error>,
) -> Result<RunTrace, Error> {
    let m = topo.node_count();
    let n = problem.dim();
    if problem.agent_count() != m {
        return Err(Error::Dimension(format!(
            "{} agents on a graph with {m} nodes",
            problem.agent_count()
        )));
    }
    let w = laplacian(topo);
    let mut sim = NetworkSim::new(topo.clone());
    let mut z = vec![DVector::<f64>::zeros(n); m];
    let mut zt = z.clone();
    let mut alpha = initial_alpha(p.q)?;
    let mut rows = Vec::with_capacity(p.n);
    let mut z_hist = cfg.record_z.then(|| vec![stack_blocks(&z)]);
    let mut cand_hist = cfg.record_candidates.then(Vec::new);
    let mut last_payloads: Vec<DVector<f64>> = Vec::new();

    for k in 0..p.n {
        let payloads = payloads_fn(&mut sim, &zt)?;
        let witness: f64 = zt.iter().zip(&payloads).map(|(a, b)| a.dot(b)).sum();
        let inbox = sim.exchange(&payloads)?;
        let (alpha_next, beta) = alpha_step(alpha, p.q);
        for i in 0..m {
            let mut grad = sim.weighted_neighbor_sum(i, &payloads[i], &inbox[i])?;
            if p.dual_reg != 0.0 {
                grad += &zt[i] * p.dual_reg;
            }
            let z_new = &zt[i] - grad * p.step;
            zt[i] = &z_new + (&z_new - &z[i]) * beta;
            z[i] = z_new;
        }
        alpha = alpha_next;
        if let Some(h) = &mut z_hist {
            h.push(stack_blocks(&z));
        }
        let stacked = stack_blocks(&payloads);
        let gap = problem.value_stacked(&stacked)? - cfg.f_star;
        let res = consensus_residual(&stacked, &w)?;
        rows.push(TraceRow {
            iteration: k + 1,
            comm_rounds: sim.round_count(),
            oracle_calls_max: sim.max_oracle_calls(),
            primal_gap: gap,
            consensus_residual: res,
            dual_gap_witness: witness,
        });
        if let Some(h) = &mut cand_hist {
            h.push(stacked);
        }
        last_payloads = payloads;
    }

    let final_candidate = final_fn(&mut sim, &z, &last_payloads)?;
    let final_primal_gap = problem.value_stacked(&final_candidate)? - cfg.f_star;
    let final_consensus_residual = consensus_residual(&final_candidate, &w)?;
    Ok(RunTrace {
        rows,
        final_candidate,
        final_primal_gap,
        final_consensus_residual,
        comm_rounds_total: sim.round_count(),
        oracle_calls: sim.oracle_call_counts().to_vec(),
        violation_count: sim.violation_count(),
        z_history: z_hist,
        candidate_history: cand_hist,
        n_used: p.n,
        t_used: p.t,
    })
}

fn bound_constants(
    problem: &SeparableObjective,
    spectral: SpectralSummary,
    cfg: &AlgoConfig,
    topo: &Topology,
) -> BoundConstants {
    BoundConstants {
        mu: cfg.mu_override.unwrap_or_else(|| problem.mu()),
        l: cfg.l_override.unwrap_or_else(|| problem.l_smooth()),
        m_lip: cfg.m_lip,
        mu_sum: problem.mu_sum(),
        spectral,
        epsilon: cfg.epsilon,
        r: cfg.r,
        r_x: cfg.r_x,
        r_w: cfg.r_w,
        agent_count: topo.node_count(),
    }
}

fn resolve_n_t(cfg: &AlgoConfig, bc: &BoundConstants) -> Result<(usize, Option<usize>), Error> {
    let needs_t = cfg.variant.has_inner_loop();
    let overrides_cover = cfg.n_override.is_some() && (!needs_t || cfg.t_override.is_some());
    if overrides_cover {
        let n = cfg.n_override.unwrap().max(1);
        let t = needs_t.then(|| cfg.t_override.unwrap().max(1));
        return Ok((n, t));
    }
    let (n, t) = iteration_bound(cfg.variant, bc)?;
    let n = cfg.n_override.map_or(n, |v| v.max(1));
    let t = match (needs_t, cfg.t_override) {
        (true, Some(v)) => Some(v.max(1)),
        (true, None) => t,
        (false, _) => None,
    };
    Ok((n, t))
}

fn conjugate_payloads<'a>(
    agents: &'a [AgentObjective],
) -> impl FnMut(&mut NetworkSim, &[DVector<f64>]) -> Result<Vec<DVector<f64>>, Error> + 'a {
    move |sim, zt| {
        let mut out = Vec::with_capacity(agents.len());
        for (i, a) in agents.iter().enumerate() {
            sim.record_oracle_call(i, OracleKind::Conjugate);
            out.push(a.conjugate_argmax(&zt[i]).ok_or_else(|| {
                Error::Algorithm(format!("agent {i} has no conjugate oracle"))
            })?);
        }
        Ok(out)
    }
}

fn conjugate_final<'a>(
    agents: &'a [AgentObjective],
) -> impl FnMut(&mut NetworkSim, &[DVector<f64>], &[DVector<f64>]) -> Result<DVector<f64>, Error> + 'a {
    move |sim, z, _last| {
        let mut out = Vec::with_capacity(agents.len());
        for (i, a) in agents.iter().enumerate() {
            sim.record_oracle_call(i, OracleKind::Conjugate);
            out.push(a.conjugate_argmax(&z[i]).ok_or_else(|| {
                Error::Algorithm(format!("agent {i} has no conjugate oracle"))
            })?);
        }
        Ok(stack_blocks(&out))
    }
}

/// Dispatch on the configured variant.
pub fn run(problem: &SeparableObjective, topo: &Topology, cfg: &AlgoConfig) -> Result<RunTrace, Error> {
    match cfg.variant {
        Variant::Case1 => run_case1(problem, topo, cfg),
        Variant::Case2 => run_case2(problem, topo, cfg),
        Variant::Case3 => run_case3(problem, topo, cfg),
        Variant::Case4 => run_case4(problem, topo, cfg),
        Variant::NofriendScSmooth => run_nofriend_sc_smooth(problem, topo, cfg),
        Variant::NofriendSmooth => run_nofriend_smooth(problem, topo, cfg),
        Variant::AugmentedSc => run_augmented_sc(problem, topo, cfg),
        Variant::AugmentedSmooth => run_augmented_smooth(problem, topo, cfg),
    }
}

fn spectral(topo: &Topology) -> Result<SpectralSummary, Error> {
    spectral_summary(&laplacian(topo))
}

/// Conjugate-oracle method for strongly convex smooth agents.
pub fn run_case1(problem: &SeparableObjective, topo: &Topology, cfg: &AlgoConfig) -> Result<RunTrace, Error> {
    if !problem.all_dual_friendly() {
        return Err(Error::Algorithm("case1 requires conjugate oracles for every agent".into()));
    }
    let s = spectral(topo)?;
    let bc = bound_constants(problem, s, cfg, topo);
    if bc.mu <= 0.0 {
        return Err(Error::Algorithm("case1 requires mu > 0".into()));
    }
    if !bc.l.is_finite() {
        return Err(Error::Algorithm("case1 requires finite L".into()));
    }
    let (n, t) = resolve_n_t(cfg, &bc)?;
    let p = OuterParams {
        q: (bc.mu / bc.l) * (s.lambda_min_plus / s.lambda_max),
        step: bc.mu / s.lambda_max,
        dual_reg: 0.0,
        n,
        t,
    };
    run_outer(problem, topo, cfg, p, conjugate_payloads(problem.agents()), conjugate_final(problem.agents()))
}

/// Dual-regularized conjugate-oracle method for strongly convex agents
/// whose gradient at the optimum is bounded.
pub fn run_case2(problem: &SeparableObjective, topo: &Topology, cfg: &AlgoConfig) -> Result<RunTrace, Error> {
    if !problem.all_dual_friendly() {
        return Err(Error::Algorithm("case2 requires conjugate oracles for every agent".into()));
    }
    let s = spectral(topo)?;
    let bc = bound_constants(problem, s, cfg, topo);
    if bc.mu <= 0.0 {
        return Err(Error::Algorithm("case2 requires mu > 0".into()));
    }
    if !(cfg.r > 0.0) {
        return Err(Error::Algorithm("case2 requires R > 0".into()));
    }
    let (n, t) = resolve_n_t(cfg, &bc)?;
    let delta = cfg.epsilon / (4.0 * cfg.r * cfg.r);
    let l_phi = s.lambda_max / bc.mu;
    let p = OuterParams {
        q: delta / (l_phi + delta),
        step: 1.0 / (l_phi + delta),
        dual_reg: delta,
        n,
        t,
    };
    run_outer(problem, topo, cfg, p, conjugate_payloads(problem.agents()), conjugate_final(problem.agents()))
}

fn regularized_agents(
    problem: &SeparableObjective,
    modulus: f64,
) -> Result<(Vec<AgentObjective>, Vec<DVector<f64>>), Error> {
    let mut regs = Vec::with_capacity(problem.agent_count());
    let mut x0 = Vec::with_capacity(problem.agent_count());
    for a in problem.agents() {
        let center = local_minimizer(a, 1e-10)?;
        regs.push(regularize(a.clone(), modulus, center.clone())?);
        x0.push(center);
    }
    Ok((regs, x0))
}

/// Primal-regularized conjugate-oracle method for smooth convex agents.
pub fn run_case3(problem: &SeparableObjective, topo: &Topology, cfg: &AlgoConfig) -> Result<RunTrace, Error> {
    let s = spectral(topo)?;
    let bc = bound_constants(problem, s, cfg, topo);
    if !bc.l.is_finite() {
        return Err(Error::Algorithm("case3 requires finite L".into()));
    }
    if !(cfg.r_x > 0.0) {
        return Err(Error::Algorithm("case3 requires R_x > 0".into()));
    }
    if !problem.all_dual_friendly() {
        return Err(Error::Algorithm("case3 requires conjugate oracles; use nofriend_smooth otherwise".into()));
    }
    let modulus = cfg.epsilon / (cfg.r_x * cfg.r_x);
    let (regs, _x0) = regularized_agents(problem, modulus)?;
    let (n, t) = resolve_n_t(cfg, &bc)?;
    let p = OuterParams {
        q: (modulus / (bc.l + modulus)) * (s.lambda_min_plus / s.lambda_max),
        step: modulus / s.lambda_max,
        dual_reg: 0.0,
        n,
        t,
    };
    run_outer(problem, topo, cfg, p, conjugate_payloads(&regs), conjugate_final(&regs))
}

/// Doubly regularized conjugate-oracle method for bounded-gradient agents
/// without smoothness or strong convexity.
pub fn run_case4(problem: &SeparableObjective, topo: &Topology, cfg: &AlgoConfig) -> Result<RunTrace, Error> {
    let s = spectral(topo)?;
    let bc = bound_constants(problem, s, cfg, topo);
    if !(cfg.r > 0.0) {
        return Err(Error::Algorithm("case4 requires R > 0".into()));
    }
    if !(cfg.r_x > 0.0) {
        return Err(Error::Algorithm("case4 requires R_x > 0".into()));
    }
    if !problem.all_dual_friendly() {
        return Err(Error::Algorithm("case4 requires conjugate oracles for every agent".into()));
    }
    let modulus = cfg.epsilon / (cfg.r_x * cfg.r_x);
    let (regs, _x0) = regularized_agents(problem, modulus)?;
    let (n, t) = resolve_n_t(cfg, &bc)?;
    let delta = cfg.epsilon / (4.0 * cfg.r * cfg.r);
    let l_phi = s.lambda_max / modulus;
    let p = OuterParams {
        q: delta / (l_phi + delta),
        step: 1.0 / (l_phi + delta),
        dual_reg: delta,
        n,
        t,
    };
    run_outer(problem, topo, cfg, p, conjugate_payloads(&regs), conjugate_final(&regs))
}

/// Gradient-only method for strongly convex smooth agents: an inner
/// accelerated loop approximates each conjugate solve locally.
pub fn run_nofriend_sc_smooth(
    problem: &SeparableObjective,
    topo: &Topology,
    cfg: &AlgoConfig,
) -> Result<RunTrace, Error> {
    let s = spectral(topo)?;
    let bc = bound_constants(problem, s, cfg, topo);
    if bc.mu <= 0.0 {
        return Err(Error::Algorithm("nofriend_sc_smooth requires mu > 0".into()));
    }
    if !bc.l.is_finite() {
        return Err(Error::Algorithm("nofriend_sc_smooth requires finite L".into()));
    }
    let (n, t_opt) = resolve_n_t(cfg, &bc)?;
    let t = t_opt.expect("inner-loop variant always has T");
    let (q_in, step_in) = (bc.mu / bc.l, 1.0 / bc.l);
    let agents = problem.agents();
    let p = OuterParams {
        q: (bc.mu / bc.l) * (s.lambda_min_plus / s.lambda_max),
        step: bc.mu / s.lambda_max,
        dual_reg: 0.0,
        n,
        t: Some(t),
    };
    run_outer(
        problem,
        topo,
        cfg,
        p,
        move |sim, zt| local_payloads(agents, sim, zt, t, q_in, step_in, None),
        move |sim, z, _last| Ok(stack_blocks(&local_payloads(agents, sim, z, t, q_in, step_in, None)?)),
    )
}

/// Per-agent inner solves, all purely local (no exchanges).
fn local_payloads(
    agents: &[AgentObjective],
    sim: &mut NetworkSim,
    zt: &[DVector<f64>],
    t: usize,
    q: f64,
    step: f64,
    reg: Option<(f64, &[DVector<f64>])>,
) -> Result<Vec<DVector<f64>>, Error> {
    let mut out = Vec::with_capacity(agents.len());
    for (i, a) in agents.iter().enumerate() {
        sim.record_oracle_calls(i, OracleKind::Gradient, t);
        let r = reg.map(|(c, x0)| (c, &x0[i]));
        out.push(inner_local_solve(a, &zt[i], t, q, step, r)?);
    }
    Ok(out)
}

/// Gradient-only method for smooth convex agents, with the primal
/// regularization folded into the inner loop.
pub fn run_nofriend_smooth(
    problem: &SeparableObjective,
    topo: &Topology,
    cfg: &AlgoConfig,
) -> Result<RunTrace, Error> {
    let s = spectral(topo)?;
    let bc = bound_constants(problem, s, cfg, topo);
    if !bc.l.is_finite() {
        return Err(Error::Algorithm("nofriend_smooth requires finite L".into()));
    }
    if !(cfg.r_x > 0.0) {
        return Err(Error::Algorithm("nofriend_smooth requires R_x > 0".into()));
    }
    let modulus = cfg.epsilon / (cfg.r_x * cfg.r_x);
    let x0: Vec<DVector<f64>> = problem
        .agents()
        .iter()
        .map(|a| local_minimizer(a, 1e-10))
        .collect::<Result<_, _>>()?;
    let (n, t_opt) = resolve_n_t(cfg, &bc)?;
    let t = t_opt.expect("inner-loop variant always has T");
    let (q_in, step_in) = (modulus / (bc.l + modulus), 1.0 / (bc.l + modulus));
    let agents = problem.agents();
    let x0_ref = &x0;
    let p = OuterParams {
        q: (modulus / (bc.l + modulus)) * (s.lambda_min_plus / s.lambda_max),
        step: modulus / s.lambda_max,
        dual_reg: 0.0,
        n,
        t: Some(t),
    };
    run_outer(
        problem,
        topo,
        cfg,
        p,
        move |sim, zt| local_payloads(agents, sim, zt, t, q_in, step_in, Some((modulus, x0_ref))),
        move |sim, z, _last| {
            Ok(stack_blocks(&local_payloads(agents, sim, z, t, q_in, step_in, Some((modulus, x0_ref)))?))
        },
    )
}

/// Joint inner loop for the augmented variants: accelerated steps on the
/// coupled objective, exchanging the extrapolated iterates every step.
fn augmented_inner(
    agents: &[AgentObjective],
    sim: &mut NetworkSim,
    zt: &[DVector<f64>],
    t: usize,
    q: f64,
    step: f64,
    coupling: f64,
    reg: Option<(f64, &[DVector<f64>])>,
) -> Result<Vec<DVector<f64>>, Error> {
    let m = agents.len();
    let n = agents[0].dim();
    let mut w = vec![DVector::<f64>::zeros(n); m];
    let mut wt = w.clone();
    let mut a = initial_alpha(q)?;
    for _ in 0..t {
        let inbox = sim.exchange(&wt)?;
        let (a_next, beta) = alpha_step(a, q);
        for i in 0..m {
            let wns = sim.weighted_neighbor_sum(i, &wt[i], &inbox[i])?;
            sim.record_oracle_call(i, OracleKind::Gradient);
            let mut g = &zt[i] - agents[i].gradient(&wt[i]) - wns * coupling;
            if let Some((c, x0)) = reg {
                g -= (&wt[i] - &x0[i]) * c;
            }
            let w_new = &wt[i] + g * step;
            wt[i] = &w_new + (&w_new - &w[i]) * beta;
            w[i] = w_new;
        }
        a = a_next;
    }
    Ok(w)
}

/// Laplacian-augmented gradient method: pools the agents' strong convexity
/// at the price of one exchange per inner step.
pub fn run_augmented_sc(problem: &SeparableObjective, topo: &Topology, cfg: &AlgoConfig) -> Result<RunTrace, Error> {
    let s = spectral(topo)?;
    let bc = bound_constants(problem, s, cfg, topo);
    if bc.mu_sum <= 0.0 {
        return Err(Error::Algorithm("augmented_sc requires sum of mu_i > 0".into()));
    }
    if !bc.l.is_finite() {
        return Err(Error::Algorithm("augmented_sc requires finite L".into()));
    }
    let (n, t_opt) = resolve_n_t(cfg, &bc)?;
    let t = t_opt.expect("inner-loop variant always has T");
    let mu_a = bc.mu_sum;
    let coupling = mu_a / s.lambda_min_plus;
    let l_a = bc.l + coupling * s.lambda_max;
    let q_in = mu_a / l_a;
    let agents = problem.agents();
    let p = OuterParams {
        q: q_in * (s.lambda_min_plus / s.lambda_max),
        step: mu_a / s.lambda_max,
        dual_reg: 0.0,
        n,
        t: Some(t),
    };
    run_outer(
        problem,
        topo,
        cfg,
        p,
        move |sim, zt| augmented_inner(agents, sim, zt, t, q_in, 1.0 / l_a, coupling, None),
        |_sim, _z, last| Ok(stack_blocks(last)),
    )
}

/// Augmented variant for merely smooth agents: a small proximal term around
/// each agent's local minimizer supplies the pooled strong convexity.
pub fn run_augmented_smooth(
    problem: &SeparableObjective,
    topo: &Topology,
    cfg: &AlgoConfig,
) -> Result<RunTrace, Error> {
    let s = spectral(topo)?;
    let bc = bound_constants(problem, s, cfg, topo);
    if !bc.l.is_finite() {
        return Err(Error::Algorithm("augmented_smooth requires finite L".into()));
    }
    if !(cfg.r_x > 0.0) {
        return Err(Error::Algorithm("augmented_smooth requires R_x > 0".into()));
    }
    let m = topo.node_count() as f64;
    let modulus = cfg.epsilon / (cfg.r_x * cfg.r_x);
    let mu_hat = m * modulus;
    let coupling = mu_hat / s.lambda_min_plus;
    let l_hat = bc.l + coupling * s.lambda_max + mu_hat;
    let q_in = mu_hat / l_hat;
    let x0: Vec<DVector<f64>> = problem
        .agents()
        .iter()
        .map(|a| local_minimizer(a, 1e-10))
        .collect::<Result<_, _>>()?;
    let (n, t_opt) = resolve_n_t(cfg, &bc)?;
    let t = t_opt.expect("inner-loop variant always has T");
    let agents = problem.agents();
    let x0_ref = &x0;
    let p = OuterParams {
        q: q_in * (s.lambda_min_plus / s.lambda_max),
        step: mu_hat / s.lambda_max,
        dual_reg: 0.0,
        n,
        t: Some(t),
    };
    run_outer(
        problem,
        topo,
        cfg,
        p,
        move |sim, zt| {
            augmented_inner(agents, sim, zt, t, q_in, 1.0 / l_hat, coupling, Some((modulus, x0_ref)))
        },
        |_sim, _z, last| Ok(stack_blocks(last)),
    )
}
