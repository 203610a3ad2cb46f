//! Dual-based distributed convex optimization over simulated networks.
//!
//! The crate builds communication graphs and their Laplacian spectra
//! ([`graph`]), defines per-agent objectives with conjugate oracles
//! ([`problems`]), runs Nesterov's fast gradient method ([`fgm`]), simulates
//! synchronous neighbor-to-neighbor message passing ([`simnet`]), drives the
//! distributed dual algorithms ([`dualnet`]), and checks approximate
//! optimality and consensus against reference solutions ([`certify`]).

pub mod certify;
pub mod cli;
pub mod dualnet;
pub mod fgm;
pub mod graph;
pub mod problems;
pub mod simnet;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("graph error: {0}")]
    Graph(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("fgm error: {0}")]
    Fgm(String),
    #[error("problem definition error: {0}")]
    Problem(String),
    #[error("network protocol error: {0}")]
    Network(String),
    #[error("algorithm error: {0}")]
    Algorithm(String),
    #[error("certification error: {0}")]
    Certify(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}
