//! Config-driven experiment runner: spectrum reports, single runs with
//! trace/summary emission, and size sweeps.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::certify::{
    algo_config, certificate, compare_to_bound, default_epsilon_tilde, reference_solve,
    ReferenceSolution, SolutionCertificate,
};
use crate::dualnet::{run, AlgoConfig, RunTrace, Variant};
use crate::graph::{build_graph, laplacian, spectral_summary, GraphKind, SpectralSummary, Topology};
use crate::problems::{
    load_csv_dataset, make_entropy, make_logistic, make_quadratic, make_ridge, SeparableObjective,
};
use crate::Error;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Per-agent `(s_i/2)||x - c_i||^2` with random centers and scales.
    Quadratic {
        n: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        spread: f64,
        #[serde(default = "one")]
        scale_min: f64,
        #[serde(default = "one")]
        scale_max: f64,
    },
    /// Per-agent KL divergence to a random interior simplex point.
    Entropy {
        n: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        spread: f64,
    },
    /// Shared-regressor least squares with `l` rows per agent.
    Ridge {
        n: usize,
        l: usize,
        c: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        feature_scale: f64,
    },
    /// Regularized logistic regression; synthetic shards unless a dataset
    /// CSV (features then a trailing ±1 label, no header) is given.
    Logistic {
        n: usize,
        l: usize,
        c: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        feature_scale: f64,
        #[serde(default)]
        dataset: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub family: GraphKind,
    pub m: usize,
    #[serde(default)]
    pub edge_prob: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    pub epsilon: f64,
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    #[serde(default, rename = "R_x")]
    pub r_x: Option<f64>,
    #[serde(default, rename = "N")]
    pub n: Option<usize>,
    #[serde(default, rename = "T")]
    pub t: Option<usize>,
    #[serde(default, rename = "M")]
    pub m: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default, rename = "L")]
    pub l: Option<f64>,
    #[serde(default)]
    pub epsilon_tilde: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub trace: Option<String>,
    #[serde(default)]
    pub summary: Option<String>,
    #[serde(default)]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub graph: GraphConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if cfg.algorithm.epsilon <= 0.0 {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    Ok(cfg)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Generate the per-agent objectives for `m` agents.
pub fn build_problem(cfg: &ProblemConfig, m: usize) -> Result<SeparableObjective, Error> {
    match cfg {
        ProblemConfig::Quadratic { n, seed, spread, scale_min, scale_max } => {
            if *scale_min <= 0.0 || scale_max < scale_min {
                return Err(Error::Config("need 0 < scale_min <= scale_max".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let agents = (0..m)
                .map(|_| {
                    let center = DVector::from_fn(*n, |_, _| uniform(&mut rng, -*spread, *spread));
                    let scale = uniform(&mut rng, *scale_min, *scale_max);
                    make_quadratic(center, scale)
                })
                .collect::<Result<Vec<_>, _>>()?;
            SeparableObjective::new(agents)
        }
        ProblemConfig::Entropy { n, seed, spread } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let agents = (0..m)
                .map(|_| {
                    let logits = DVector::from_fn(*n, |_, _| uniform(&mut rng, -*spread, *spread));
                    let max = logits.max();
                    let mut q = logits.map(|v| (v - max).exp());
                    let s: f64 = q.sum();
                    q /= s;
                    make_entropy(q)
                })
                .collect::<Result<Vec<_>, _>>()?;
            SeparableObjective::new(agents)
        }
        ProblemConfig::Ridge { n, l, c, seed, feature_scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let x_true = DVector::from_fn(*n, |_, _| uniform(&mut rng, -1.0, 1.0));
            let agents = (0..m)
                .map(|_| {
                    let h = nalgebra::DMatrix::from_fn(*l, *n, |_, _| {
                        uniform(&mut rng, -*feature_scale, *feature_scale)
                    });
                    let noise = DVector::from_fn(*l, |_, _| uniform(&mut rng, -0.1, 0.1));
                    let b = &h * &x_true + noise * *feature_scale;
                    make_ridge(h, b, m, *l, *c)
                })
                .collect::<Result<Vec<_>, _>>()?;
            SeparableObjective::new(agents)
        }
        ProblemConfig::Logistic { n, l, c, seed, feature_scale, dataset } => {
            let shards = match dataset {
                Some(path) => load_csv_dataset(path, m)?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    let w_true = DVector::from_fn(*n, |_, _| uniform(&mut rng, -1.0, 1.0));
                    (0..m)
                        .map(|_| {
                            let a = nalgebra::DMatrix::from_fn(*l, *n, |_, _| {
                                uniform(&mut rng, -*feature_scale, *feature_scale)
                            });
                            let y = DVector::from_fn(*l, |j, _| {
                                let margin =
                                    a.row(j).transpose().dot(&w_true) + 0.1 * uniform(&mut rng, -1.0, 1.0);
                                if margin >= 0.0 {
                                    1.0
                                } else {
                                    -1.0
                                }
                            });
                            (a, y)
                        })
                        .collect()
                }
            };
            let agents = shards
                .into_iter()
                .map(|(a, y)| {
                    let rows = a.nrows();
                    make_logistic(a, y, m, rows, *c)
                })
                .collect::<Result<Vec<_>, _>>()?;
            SeparableObjective::new(agents)
        }
    }
}

fn build_topology(g: &GraphConfig) -> Result<Topology, Error> {
    build_graph(g.family, g.m, g.edge_prob, g.seed)
}

/// `lambda_max=... lambda_min_plus=... chi=...` for the configured graph.
pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<String, Error> {
    let topo = build_topology(&cfg.graph)?;
    let s = spectral_summary(&laplacian(&topo))?;
    Ok(format!(
        "lambda_max={} lambda_min_plus={} chi={}",
        s.lambda_max, s.lambda_min_plus, s.chi
    ))
}

fn fmt17(v: f64) -> String {
    format!("{:.16e}", v)
}

const TRACE_HEADER: &str =
    "iteration,comm_rounds,oracle_calls_max,primal_gap,consensus_residual,dual_gap_witness";

fn write_trace_csv(path: &Path, trace: &RunTrace) -> Result<(), Error> {
    let mut out = String::with_capacity(trace.rows.len() * 120);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration,
            r.comm_rounds,
            r.oracle_calls_max,
            fmt17(r.primal_gap),
            fmt17(r.consensus_residual),
            fmt17(r.dual_gap_witness)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

/// One prepared experiment: graph, problem, reference, resolved run config.
struct Prepared {
    topo: Topology,
    problem: SeparableObjective,
    reference: ReferenceSolution,
    run_cfg: AlgoConfig,
    epsilon_tilde: f64,
    spectral: SpectralSummary,
}

fn prepare(cfg: &ExperimentConfig, m: usize) -> Result<Prepared, Error> {
    let mut graph_cfg = cfg.graph.clone();
    graph_cfg.m = m;
    let topo = build_topology(&graph_cfg)?;
    let problem = build_problem(&cfg.problem, m)?;
    let spectral = spectral_summary(&laplacian(&topo))?;
    let f0 = problem.value_consensus(&DVector::zeros(problem.dim()));
    let tol = 1e-12 * (1.0 + f0.abs());
    let reference = reference_solve(&problem, &topo, tol)?;
    let a = &cfg.algorithm;
    let mut run_cfg = algo_config(a.variant, a.epsilon, &reference);
    if let Some(r) = a.r {
        run_cfg.r = r;
    }
    if let Some(rx) = a.r_x {
        run_cfg.r_x = rx;
        run_cfg.r_w = rx + reference.x_star_stacked.norm();
    }
    run_cfg.m_lip = a.m.or(run_cfg.m_lip);
    run_cfg.mu_override = a.mu;
    run_cfg.l_override = a.l;
    run_cfg.n_override = a.n;
    run_cfg.t_override = a.t;
    let epsilon_tilde = match a.epsilon_tilde {
        Some(v) => v,
        None => default_epsilon_tilde(a.epsilon, run_cfg.r)?,
    };
    Ok(Prepared { topo, problem, reference, run_cfg, epsilon_tilde, spectral })
}

pub struct RunOutcome {
    pub certificate: SolutionCertificate,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Execute the configured run, writing `trace.csv` and `summary.json`
/// under `out_dir`.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, Error> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let p = prepare(cfg, cfg.graph.m)?;
    let trace = run(&p.problem, &p.topo, &p.run_cfg)?;
    let w = laplacian(&p.topo);
    let cert = certificate(
        &p.problem,
        &trace.final_candidate,
        &p.reference,
        &w,
        p.run_cfg.epsilon,
        p.epsilon_tilde,
    )?;
    let report = compare_to_bound(&trace, p.run_cfg.epsilon, p.epsilon_tilde, trace.n_used);

    let trace_path = out_dir.join(cfg.output.trace.as_deref().unwrap_or("trace.csv"));
    write_trace_csv(&trace_path, &trace)?;

    let summary = serde_json::json!({
        "config": cfg,
        "spectral": p.spectral,
        "f_star": p.reference.f_star,
        "R": p.run_cfg.r,
        "R_x": p.run_cfg.r_x,
        "R_w": p.run_cfg.r_w,
        "N": trace.n_used,
        "T": trace.t_used,
        "achieved_iteration": report.first_achieved,
        "certificate": cert,
        "comm_rounds_total": trace.comm_rounds_total,
        "oracle_calls": trace.oracle_calls,
        "violation_count": trace.violation_count,
    });
    let summary_path = out_dir.join(cfg.output.summary.as_deref().unwrap_or("summary.json"));
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&summary_path, text)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", summary_path.display())))?;
    Ok(RunOutcome { certificate: cert, trace_path, summary_path })
}

/// Run the experiment at every size in the sweep list and tabulate the
/// communication rounds needed to reach the certificate.
pub fn cmd_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf, Error> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep requires a sweep.sizes list".into()))?;
    if sweep.sizes.len() < 3 {
        return Err(Error::Config(format!(
            "sweep needs at least 3 sizes, got {}",
            sweep.sizes.len()
        )));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut sizes = sweep.sizes.clone();
    sizes.sort_unstable();
    let mut lines = vec!["m,chi,rounds_to_certificate".to_string()];
    for &m in &sizes {
        let p = prepare(cfg, m)?;
        let trace = run(&p.problem, &p.topo, &p.run_cfg)?;
        let rounds = rounds_to_certificate(&trace, p.run_cfg.epsilon, p.epsilon_tilde)
            .ok_or_else(|| {
                Error::Certify(format!("sweep member m={m} failed to reach the certificate"))
            })?;
        lines.push(format!("{},{},{}", m, fmt17(p.spectral.chi), rounds));
    }
    let path = out_dir.join(cfg.output.sweep.as_deref().unwrap_or("sweep.csv"));
    let mut file = std::fs::File::create(&path)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    for l in &lines {
        writeln!(file, "{l}").map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(path)
}

/// Communication rounds at the first recorded iterate meeting both
/// certificate inequalities; falls back to the run total when only the
/// final output candidate qualifies.
pub fn rounds_to_certificate(trace: &RunTrace, epsilon: f64, epsilon_tilde: f64) -> Option<usize> {
    trace
        .rows
        .iter()
        .find(|r| r.primal_gap <= epsilon && r.consensus_residual <= epsilon_tilde)
        .map(|r| r.comm_rounds)
        .or_else(|| {
            (trace.final_primal_gap <= epsilon && trace.final_consensus_residual <= epsilon_tilde)
                .then_some(trace.comm_rounds_total)
        })
}
