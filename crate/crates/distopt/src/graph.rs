//! Communication graphs, Laplacians and spectral summaries.
//!
//! The consensus constraint `x_1 = ... = x_m` is encoded as `sqrt(W) x = 0`
//! where `W` is the block Laplacian `W̄ ⊗ I_n`. The Kronecker product is
//! never materialized; all products act blockwise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use crate::Error;

/// Relative cutoff below which an eigenvalue is treated as zero.
pub const ZERO_EIG_TOL: f64 = 1e-9;

/// Graph families accepted by [`build_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Cycle,
    Path,
    Star,
    Complete,
    ErdosRenyi,
}

/// A connected undirected graph on `m` nodes, no self-loops.
#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Topology {
    /// Build from an edge list. Fails on self-loops, out-of-range indices
    /// or a disconnected graph.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, Error> {
        if node_count < 2 {
            return Err(Error::Graph(format!("need at least 2 nodes, got {node_count}")));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Graph(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::Graph(format!("edge ({a},{b}) out of range")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut neighbors = vec![Vec::new(); node_count];
        for &(a, b) in &set {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        let topo = Topology { node_count, edges: set, neighbors };
        if !topo.is_connected() {
            return Err(Error::Graph("graph is not connected".into()));
        }
        Ok(topo)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.node_count
    }
}

/// Dense symmetric graph Laplacian: degrees on the diagonal, -1 for edges.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    matrix: DMatrix<f64>,
}

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Extremal spectrum of a connected graph's Laplacian.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SpectralSummary {
    pub lambda_max: f64,
    pub lambda_min_plus: f64,
    /// Laplacian condition number `lambda_max / lambda_min_plus`.
    pub chi: f64,
}

/// Build a connected topology of the named family.
///
/// `edge_prob` is only consulted for `ErdosRenyi`; the random graph is
/// resampled with an incremented seed until it comes out connected.
pub fn build_graph(kind: GraphKind, m: usize, edge_prob: Option<f64>, seed: u64) -> Result<Topology, Error> {
    if m < 2 {
        return Err(Error::Graph(format!("need at least 2 nodes, got {m}")));
    }
    match kind {
        GraphKind::Cycle => {
            if m == 2 {
                // the 2-cycle degenerates to a single edge
                return Topology::new(2, [(0, 1)]);
            }
            Topology::new(m, (0..m).map(|i| (i, (i + 1) % m)))
        }
        GraphKind::Path => Topology::new(m, (0..m - 1).map(|i| (i, i + 1))),
        GraphKind::Star => Topology::new(m, (1..m).map(|i| (0, i))),
        GraphKind::Complete => {
            Topology::new(m, (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))))
        }
        GraphKind::ErdosRenyi => {
            let p = edge_prob.ok_or_else(|| Error::Graph("erdos_renyi requires edge_prob".into()))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Graph(format!("edge_prob must be in (0,1], got {p}")));
            }
            let mut s = seed;
            loop {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let mut edges = Vec::new();
                for i in 0..m {
                    for j in i + 1..m {
                        if rng.gen::<f64>() < p {
                            edges.push((i, j));
                        }
                    }
                }
                match Topology::new(m, edges) {
                    Ok(t) => return Ok(t),
                    Err(_) => s = s.wrapping_add(1),
                }
            }
        }
    }
}

/// Laplacian of a topology: `W̄_ij = -1` for edges, `deg(i)` on the diagonal.
pub fn laplacian(t: &Topology) -> LaplacianMatrix {
    let m = t.node_count();
    let mut w = DMatrix::zeros(m, m);
    for &(a, b) in t.edges() {
        w[(a, b)] = -1.0;
        w[(b, a)] = -1.0;
        w[(a, a)] += 1.0;
        w[(b, b)] += 1.0;
    }
    LaplacianMatrix { matrix: w }
}

fn sorted_eigen(w: &LaplacianMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let eig = w.matrix.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

/// Largest and smallest positive eigenvalues of the Laplacian.
///
/// Eigenvalues below `ZERO_EIG_TOL * lambda_max` are treated as zero; more
/// than one such eigenvalue signals a disconnected graph.
pub fn spectral_summary(w: &LaplacianMatrix) -> Result<SpectralSummary, Error> {
    let (vals, _) = sorted_eigen(w);
    let lambda_max = *vals.last().expect("nonempty spectrum");
    if lambda_max <= 0.0 {
        return Err(Error::Graph("Laplacian has no positive eigenvalue".into()));
    }
    let cutoff = ZERO_EIG_TOL * lambda_max;
    let zeros = vals.iter().filter(|&&v| v.abs() <= cutoff).count();
    if zeros != 1 {
        return Err(Error::Graph(format!(
            "expected exactly one zero eigenvalue, found {zeros} (disconnected graph?)"
        )));
    }
    let lambda_min_plus = vals.iter().copied().find(|&v| v > cutoff).unwrap();
    Ok(SpectralSummary { lambda_max, lambda_min_plus, chi: lambda_max / lambda_min_plus })
}

/// Symmetric PSD square root of the Laplacian, via spectral decomposition.
///
/// Used by test oracles and certification only; the distributed algorithms
/// never touch it.
pub fn sqrt_laplacian(w: &LaplacianMatrix) -> DMatrix<f64> {
    let (vals, vecs) = sorted_eigen(w);
    let m = vals.len();
    let mut s = DMatrix::zeros(m, m);
    for k in 0..m {
        let lam = vals[k].max(0.0);
        if lam > 0.0 {
            let v = vecs.column(k);
            s += v * v.transpose() * lam.sqrt();
        }
    }
    // symmetrize away roundoff
    let st = s.transpose();
    (s + st) * 0.5
}

/// Moore-Penrose pseudo-inverse of `sqrt(W̄)`, again spectral.
pub fn pinv_sqrt_laplacian(w: &LaplacianMatrix) -> DMatrix<f64> {
    let (vals, vecs) = sorted_eigen(w);
    let m = vals.len();
    let lambda_max = vals[m - 1];
    let cutoff = ZERO_EIG_TOL * lambda_max;
    let mut p = DMatrix::zeros(m, m);
    for k in 0..m {
        if vals[k] > cutoff {
            let v = vecs.column(k);
            p += v * v.transpose() / vals[k].sqrt();
        }
    }
    p
}

/// `sqrt(x' (W̄⊗I_n) x)`, the consensus residual `||sqrt(W) x||_2`.
///
/// Computed blockwise from the quadratic form; `x` holds `m` stacked blocks
/// of dimension `n`.
pub fn consensus_residual(x: &DVector<f64>, w: &LaplacianMatrix) -> Result<f64, Error> {
    let m = w.dim();
    if x.len() % m != 0 {
        return Err(Error::Dimension(format!(
            "stacked vector length {} not divisible by node count {m}",
            x.len()
        )));
    }
    let n = x.len() / m;
    let wm = w.matrix();
    let mut quad = 0.0;
    for i in 0..m {
        let xi = x.rows(i * n, n);
        for j in 0..m {
            let wij = wm[(i, j)];
            if wij != 0.0 {
                quad += wij * xi.dot(&x.rows(j * n, n));
            }
        }
    }
    Ok(quad.max(0.0).sqrt())
}

/// Apply the block Laplacian `W̄⊗I_n` to a stacked vector, blockwise.
pub fn apply_block_laplacian(x: &DVector<f64>, w: &LaplacianMatrix) -> Result<DVector<f64>, Error> {
    let m = w.dim();
    if x.len() % m != 0 {
        return Err(Error::Dimension(format!(
            "stacked vector length {} not divisible by node count {m}",
            x.len()
        )));
    }
    let n = x.len() / m;
    let wm = w.matrix();
    let mut out = DVector::zeros(x.len());
    for i in 0..m {
        let mut block = DVector::zeros(n);
        for j in 0..m {
            let wij = wm[(i, j)];
            if wij != 0.0 {
                block.axpy(wij, &x.rows(j * n, n).into_owned(), 1.0);
            }
        }
        out.rows_mut(i * n, n).copy_from(&block);
    }
    Ok(out)
}
