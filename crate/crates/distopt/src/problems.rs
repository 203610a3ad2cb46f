//! Per-agent objectives: values, gradients, convexity/smoothness constants
//! and conjugate-argmax oracles where the function is dual friendly.

use nalgebra::{DMatrix, DVector};
use std::io::BufRead;
use std::path::Path;

use crate::Error;

/// Domain an agent optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Reals,
    Simplex,
}

/// A single agent's objective `f_i`.
///
/// All variants carry enough structure to evaluate values and gradients;
/// the dual-friendly ones additionally solve
/// `argmax_x { <z,x> - f_i(x) }` in closed form (or by a cheap fixed point
/// for the regularized simplex case).
#[derive(Debug, Clone)]
pub enum AgentObjective {
    Quadratic {
        center: DVector<f64>,
        scale: f64,
    },
    Ridge {
        h: DMatrix<f64>,
        b: DVector<f64>,
        /// `H'H/(ml) + (c/m) I`
        gram: DMatrix<f64>,
        /// `H'b/(ml)`
        lin: DVector<f64>,
        inv_2ml: f64,
        reg: f64, // c/m
        mu: f64,
        l_smooth: f64,
    },
    Entropy {
        q: DVector<f64>,
    },
    Logistic {
        a: DMatrix<f64>,
        y: DVector<f64>,
        inv_2ml: f64,
        reg: f64, // c/m
        mu: f64,
        l_smooth: f64,
    },
    Regularized {
        base: Box<AgentObjective>,
        modulus: f64,
        center: DVector<f64>,
    },
}

impl AgentObjective {
    pub fn dim(&self) -> usize {
        match self {
            AgentObjective::Quadratic { center, .. } => center.len(),
            AgentObjective::Ridge { gram, .. } => gram.nrows(),
            AgentObjective::Entropy { q } => q.len(),
            AgentObjective::Logistic { a, .. } => a.ncols(),
            AgentObjective::Regularized { base, .. } => base.dim(),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            AgentObjective::Entropy { .. } => Domain::Simplex,
            AgentObjective::Regularized { base, .. } => base.domain(),
            _ => Domain::Reals,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            AgentObjective::Quadratic { center, scale } => 0.5 * scale * (x - center).norm_squared(),
            AgentObjective::Ridge { h, b, inv_2ml, reg, .. } => {
                let r = b - h * x;
                inv_2ml * r.norm_squared() + 0.5 * reg * x.norm_squared()
            }
            AgentObjective::Entropy { q } => {
                let mut v = 0.0;
                for j in 0..q.len() {
                    let xj = x[j];
                    if xj > 0.0 {
                        v += xj * (xj / q[j]).ln();
                    }
                }
                v
            }
            AgentObjective::Logistic { a, y, inv_2ml, reg, .. } => {
                let margins = a * x;
                let mut v = 0.0;
                for j in 0..y.len() {
                    v += ln_1p_exp(-y[j] * margins[j]);
                }
                inv_2ml * v + 0.5 * reg * x.norm_squared()
            }
            AgentObjective::Regularized { base, modulus, center } => {
                base.value(x) + 0.5 * modulus * (x - center).norm_squared()
            }
        }
    }

    /// Gradient; for the simplex variants this is the interior gradient.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            AgentObjective::Quadratic { center, scale } => (x - center) * *scale,
            AgentObjective::Ridge { gram, lin, .. } => gram * x - lin,
            AgentObjective::Entropy { q } => {
                DVector::from_fn(q.len(), |j, _| (x[j] / q[j]).ln() + 1.0)
            }
            AgentObjective::Logistic { a, y, inv_2ml, reg, .. } => {
                let margins = a * x;
                let mut g = x * *reg;
                for j in 0..y.len() {
                    let s = sigmoid(-y[j] * margins[j]);
                    let coeff = -inv_2ml * y[j] * s;
                    g += a.row(j).transpose() * coeff;
                }
                g
            }
            AgentObjective::Regularized { base, modulus, center } => {
                base.gradient(x) + (x - center) * *modulus
            }
        }
    }

    /// Strong convexity modulus `mu_i`.
    pub fn mu(&self) -> f64 {
        match self {
            AgentObjective::Quadratic { scale, .. } => *scale,
            AgentObjective::Ridge { mu, .. } => *mu,
            // Pinsker-type bound in ||.||_2 on the simplex; conservative.
            AgentObjective::Entropy { .. } => 1.0,
            AgentObjective::Logistic { mu, .. } => *mu,
            AgentObjective::Regularized { base, modulus, .. } => base.mu() + modulus,
        }
    }

    /// Smoothness constant `L_i` (`+inf` for non-smooth variants).
    pub fn l_smooth(&self) -> f64 {
        match self {
            AgentObjective::Quadratic { scale, .. } => *scale,
            AgentObjective::Ridge { l_smooth, .. } => *l_smooth,
            AgentObjective::Entropy { .. } => f64::INFINITY,
            AgentObjective::Logistic { l_smooth, .. } => *l_smooth,
            AgentObjective::Regularized { base, modulus, .. } => base.l_smooth() + modulus,
        }
    }

    /// Lipschitz constant `M_i` on the relevant ball; `+inf` unless supplied
    /// at a higher level (the runner falls back to `||grad F(x*)||`).
    pub fn m_lipschitz(&self) -> f64 {
        f64::INFINITY
    }

    /// `argmax_x { <z,x> - f_i(x) }`, when available.
    pub fn conjugate_argmax(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            AgentObjective::Quadratic { center, scale } => Some(center + z / *scale),
            AgentObjective::Ridge { gram, lin, .. } => {
                let rhs = z + lin;
                solve_min_norm(gram, &rhs)
            }
            AgentObjective::Entropy { q } => Some(softmax_weighted(q, z)),
            AgentObjective::Logistic { .. } => None,
            AgentObjective::Regularized { base, modulus, center } => {
                regularized_conjugate(base, *modulus, center, z)
            }
        }
    }

    pub fn has_conjugate(&self) -> bool {
        match self {
            AgentObjective::Logistic { .. } => false,
            AgentObjective::Regularized { base, .. } => base.has_conjugate(),
            _ => true,
        }
    }
}

/// `argmax_x { <z,x> - f(x) - (modulus/2)||x - center||^2 }` for the bases
/// that admit it.
fn regularized_conjugate(
    base: &AgentObjective,
    modulus: f64,
    center: &DVector<f64>,
    z: &DVector<f64>,
) -> Option<DVector<f64>> {
    match base {
        AgentObjective::Quadratic { center: c0, scale } => {
            Some((z + c0 * *scale + center * modulus) / (scale + modulus))
        }
        AgentObjective::Ridge { gram, lin, .. } => {
            let n = gram.nrows();
            let shifted = gram + DMatrix::identity(n, n) * modulus;
            let rhs = z + lin + center * modulus;
            solve_min_norm(&shifted, &rhs)
        }
        AgentObjective::Entropy { q } => {
            // fixed point x = softmax(log q + z - modulus (x - center));
            // contraction for the small moduli used by the runners
            let mut x = softmax_weighted(q, z);
            for _ in 0..500 {
                let adj = z - (&x - center) * modulus;
                let next = softmax_weighted(q, &adj);
                let delta = (&next - &x).norm();
                x = next;
                if delta < 1e-14 {
                    break;
                }
            }
            Some(x)
        }
        _ => None,
    }
}

/// Solve `A x = rhs` for symmetric PSD `A`; falls back to the least-squares
/// minimum-norm solution when `A` is singular (consistent systems only,
/// e.g. a rank-deficient Gram matrix with `rhs` in its range).
fn solve_min_norm(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(x) = a.clone().lu().solve(rhs) {
        if (a * &x - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()) {
            return Some(x);
        }
    }
    a.clone().svd(true, true).solve(rhs, 1e-12).ok().map(|m| m.column(0).into_owned())
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn ln_1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `x_j = q_j e^{z_j} / sum_k q_k e^{z_k}` with max-subtraction.
fn softmax_weighted(q: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
    let n = q.len();
    let mut logits = DVector::from_fn(n, |j, _| q[j].ln() + z[j]);
    let max = logits.max();
    logits.apply(|v| *v = (*v - max).exp());
    let sum: f64 = logits.sum();
    logits / sum
}

/// `f(x) = (scale/2)||x - c||^2`, the simplest dual-friendly instance.
pub fn make_quadratic(center: DVector<f64>, scale: f64) -> Result<AgentObjective, Error> {
    if scale <= 0.0 {
        return Err(Error::Problem(format!("quadratic scale must be positive, got {scale}")));
    }
    Ok(AgentObjective::Quadratic { center, scale })
}

/// Per-agent ridge term of the shared regression problem:
/// `f_i(x) = (1/(2ml))||b_i - H_i x||^2 + (c/(2m))||x||^2`.
pub fn make_ridge(
    h: DMatrix<f64>,
    b: DVector<f64>,
    m: usize,
    l: usize,
    c: f64,
) -> Result<AgentObjective, Error> {
    if h.nrows() != b.len() {
        return Err(Error::Problem("H and b row counts differ".into()));
    }
    let n = h.ncols();
    let ml = (m * l) as f64;
    let hth = h.transpose() * &h;
    let eig = hth.clone().symmetric_eigen();
    let lam_min = eig.eigenvalues.min().max(0.0);
    let lam_max = eig.eigenvalues.max().max(0.0);
    // mu may legitimately be 0 (c = 0 with rank-deficient H'H); such agents
    // are only usable by the merely-smooth algorithm variants
    let mu = lam_min / ml + c / m as f64;
    let l_smooth = lam_max / ml + c / m as f64;
    let gram = hth / ml + DMatrix::identity(n, n) * (c / m as f64);
    let lin = h.transpose() * &b / ml;
    Ok(AgentObjective::Ridge {
        h,
        b,
        gram,
        lin,
        inv_2ml: 1.0 / (2.0 * ml),
        reg: c / m as f64,
        mu,
        l_smooth,
    })
}

/// `f_i(x) = KL(x || q_i)` on the unit simplex.
pub fn make_entropy(q: DVector<f64>) -> Result<AgentObjective, Error> {
    let sum: f64 = q.sum();
    if q.iter().any(|&v| v <= 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Problem("q must lie in the simplex interior".into()));
    }
    Ok(AgentObjective::Entropy { q })
}

/// Regularized logistic loss over the agent's data shard.
pub fn make_logistic(
    a: DMatrix<f64>,
    y: DVector<f64>,
    m: usize,
    l: usize,
    c: f64,
) -> Result<AgentObjective, Error> {
    if c <= 0.0 {
        return Err(Error::Problem("logistic regularization c must be positive".into()));
    }
    if a.nrows() != y.len() {
        return Err(Error::Problem("A and y row counts differ".into()));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Problem("labels must be in {-1,+1}".into()));
    }
    let ml = (m * l) as f64;
    let ata = a.transpose() * &a;
    let lam_max = ata.symmetric_eigen().eigenvalues.max().max(0.0);
    let l_smooth = lam_max / (8.0 * ml) + c / m as f64;
    let mu = c / m as f64;
    Ok(AgentObjective::Logistic { a, y, inv_2ml: 1.0 / (2.0 * ml), reg: c / m as f64, mu, l_smooth })
}

/// Add `(c/2)||x - center||^2` to a base objective.
pub fn regularize(base: AgentObjective, c: f64, center: DVector<f64>) -> Result<AgentObjective, Error> {
    if c <= 0.0 {
        return Err(Error::Problem("regularization modulus must be positive".into()));
    }
    if center.len() != base.dim() {
        return Err(Error::Dimension("regularization center dimension mismatch".into()));
    }
    Ok(AgentObjective::Regularized { base: Box::new(base), modulus: c, center })
}

/// Minimizer of a single agent objective: `conjugate_argmax(0)` when the
/// oracle exists, otherwise a gradient-tolerance FGM solve.
pub fn local_minimizer(agent: &AgentObjective, tol: f64) -> Result<DVector<f64>, Error> {
    if let Some(x) = agent.conjugate_argmax(&DVector::zeros(agent.dim())) {
        return Ok(x);
    }
    let mu = agent.mu();
    let l = agent.l_smooth();
    if mu <= 0.0 || !l.is_finite() {
        return Err(Error::Problem(
            "local minimizer needs a strongly convex smooth agent (regularize first)".into(),
        ));
    }
    let run = crate::fgm::fgm_minimize(
        |x| agent.gradient(x),
        crate::fgm::FgmParams { q: mu / l, step: 1.0 / l },
        &DVector::zeros(agent.dim()),
        crate::fgm::StopRule { max_iters: 200_000, grad_tol: Some(tol) },
    )?;
    Ok(run.x_final)
}

/// The network objective `F(x) = sum_i f_i(x_i)` with aggregate constants.
#[derive(Debug, Clone)]
pub struct SeparableObjective {
    agents: Vec<AgentObjective>,
    dim: usize,
    mu: f64,
    l_smooth: f64,
    mu_sum: f64,
}

impl SeparableObjective {
    pub fn new(agents: Vec<AgentObjective>) -> Result<Self, Error> {
        let first = agents.first().ok_or_else(|| Error::Problem("no agents".into()))?;
        let dim = first.dim();
        if agents.iter().any(|a| a.dim() != dim) {
            return Err(Error::Dimension("agents have differing dimensions".into()));
        }
        let mu = agents.iter().map(|a| a.mu()).fold(f64::INFINITY, f64::min);
        let l_smooth = agents.iter().map(|a| a.l_smooth()).fold(0.0, f64::max);
        let mu_sum = agents.iter().map(|a| a.mu()).sum();
        Ok(SeparableObjective { agents, dim, mu, l_smooth, mu_sum })
    }

    pub fn agents(&self) -> &[AgentObjective] {
        &self.agents
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn l_smooth(&self) -> f64 {
        self.l_smooth
    }

    pub fn mu_sum(&self) -> f64 {
        self.mu_sum
    }

    pub fn all_dual_friendly(&self) -> bool {
        self.agents.iter().all(|a| a.has_conjugate())
    }

    /// `F` at a stacked candidate (blockwise evaluation).
    pub fn value_stacked(&self, x: &DVector<f64>) -> Result<f64, Error> {
        let n = self.dim;
        if x.len() != n * self.agents.len() {
            return Err(Error::Dimension(format!(
                "stacked candidate has length {}, expected {}",
                x.len(),
                n * self.agents.len()
            )));
        }
        Ok(self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| a.value(&x.rows(i * n, n).into_owned()))
            .sum())
    }

    /// Value of the consensus objective `sum_i f_i(z)` at a shared point.
    pub fn value_consensus(&self, z: &DVector<f64>) -> f64 {
        self.agents.iter().map(|a| a.value(z)).sum()
    }

    /// Gradient of the consensus objective at a shared point.
    pub fn gradient_consensus(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for a in &self.agents {
            g += a.gradient(z);
        }
        g
    }
}

/// Load a numeric CSV (no header, last column a ±1 label) and shard it
/// contiguously into `m` as-equal-as-possible pieces.
pub fn load_csv_dataset(path: &Path, m: usize) -> Result<Vec<(DMatrix<f64>, DVector<f64>)>, Error> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("cannot open {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let fields = fields.map_err(|e| Error::Io(format!("line {}: {e}", lineno + 1)))?;
        if fields.len() < 2 {
            return Err(Error::Io(format!("line {}: need features plus a label", lineno + 1)));
        }
        let label = *fields.last().unwrap();
        if label != 1.0 && label != -1.0 {
            return Err(Error::Io(format!("line {}: label {} not in {{-1,+1}}", lineno + 1, label)));
        }
        labels.push(label);
        rows.push(fields[..fields.len() - 1].to_vec());
    }
    if rows.len() < m {
        return Err(Error::Io(format!("{} rows cannot be sharded over {m} agents", rows.len())));
    }
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Io("ragged rows in dataset".into()));
    }
    let total = rows.len();
    let base = total / m;
    let extra = total % m;
    let mut shards = Vec::with_capacity(m);
    let mut start = 0;
    for i in 0..m {
        let size = base + usize::from(i < extra);
        let a = DMatrix::from_fn(size, n, |r, c| rows[start + r][c]);
        let y = DVector::from_fn(size, |r, _| labels[start + r]);
        shards.push((a, y));
        start += size;
    }
    Ok(shards)
}
