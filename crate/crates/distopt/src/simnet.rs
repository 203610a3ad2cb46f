//! Synchronous round-based message passing with neighbor-only delivery.
//!
//! Every algorithm in this crate talks to the network exclusively through
//! [`NetworkSim`]; the simulator counts communication rounds, per-agent
//! oracle calls, and any attempt to read a non-neighbor's payload.

use nalgebra::DVector;
use std::collections::BTreeMap;

use crate::graph::Topology;
use crate::Error;

/// Which local oracle an agent invoked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Gradient,
    Conjugate,
}

/// Payloads one agent received in a round, keyed by sender id.
pub type Received = BTreeMap<usize, DVector<f64>>;

/// The network: topology plus accounting state.
#[derive(Debug)]
pub struct NetworkSim {
    topology: Topology,
    round_count: usize,
    oracle_call_counts: Vec<usize>,
    violation_count: usize,
}

impl NetworkSim {
    pub fn new(topology: Topology) -> Self {
        let m = topology.node_count();
        NetworkSim { topology, round_count: 0, oracle_call_counts: vec![0; m], violation_count: 0 }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn agent_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn round_count(&self) -> usize {
        self.round_count
    }

    pub fn oracle_call_counts(&self) -> &[usize] {
        &self.oracle_call_counts
    }

    pub fn max_oracle_calls(&self) -> usize {
        self.oracle_call_counts.iter().copied().max().unwrap_or(0)
    }

    pub fn violation_count(&self) -> usize {
        self.violation_count
    }

    pub fn record_oracle_call(&mut self, agent: usize, _kind: OracleKind) {
        self.oracle_call_counts[agent] += 1;
    }

    pub fn record_oracle_calls(&mut self, agent: usize, _kind: OracleKind, count: usize) {
        self.oracle_call_counts[agent] += count;
    }

    pub fn reset_counters(&mut self) {
        self.round_count = 0;
        self.violation_count = 0;
        self.oracle_call_counts.iter_mut().for_each(|c| *c = 0);
    }

    /// One synchronous round: every agent broadcasts its payload to its
    /// neighbors. Returns, per agent, the payloads it received.
    pub fn exchange(&mut self, payloads: &[DVector<f64>]) -> Result<Vec<Received>, Error> {
        let m = self.agent_count();
        if payloads.len() != m {
            return Err(Error::Network(format!(
                "got {} payloads for {m} agents",
                payloads.len()
            )));
        }
        for (i, p) in payloads.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Network(format!("non-finite payload from agent {i}")));
            }
        }
        let mut inboxes: Vec<Received> = vec![BTreeMap::new(); m];
        for i in 0..m {
            for &j in self.topology.neighbors(i) {
                inboxes[i].insert(j, payloads[j].clone());
            }
        }
        self.round_count += 1;
        Ok(inboxes)
    }

    /// `deg(i) * own - sum of neighbor payloads`: the i-th block of the
    /// block Laplacian applied to the stacked payloads.
    ///
    /// Payloads from non-neighbors are counted as protocol violations and
    /// ignored; a missing neighbor payload is an error.
    pub fn weighted_neighbor_sum(
        &mut self,
        agent: usize,
        own: &DVector<f64>,
        received: &Received,
    ) -> Result<DVector<f64>, Error> {
        for sender in received.keys() {
            if !self.topology.has_edge(agent, *sender) {
                self.violation_count += 1;
            }
        }
        let mut out = own * self.topology.degree(agent) as f64;
        for &j in self.topology.neighbors(agent) {
            let p = received.get(&j).ok_or_else(|| {
                Error::Network(format!("agent {agent} missing payload from neighbor {j}"))
            })?;
            if p.len() != own.len() {
                return Err(Error::Dimension(format!(
                    "payload from {j} has dim {}, expected {}",
                    p.len(),
                    own.len()
                )));
            }
            out -= p;
        }
        Ok(out)
    }
}
