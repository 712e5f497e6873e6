//! Slot-level Monte Carlo simulator of buffered FD/HD Aloha on a torus.
//!
//! Nodes are numbered so that cluster `i` owns node `2i` (the centre) and
//! node `2i + 1` (its peer); each node always addresses the other node of
//! its cluster.

mod reception;
mod replication;
mod rng;
mod torus;

pub use replication::{
    probe_stability, run_replication, run_replications, ProbeConfig, ReplicationSummary, RunConfig,
    StabilityVerdict, Verdict,
};
pub use rng::{Stream, StreamKey};
pub use torus::Torus;

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{Error, Result};
use crate::spatial::ChannelParams;
use crate::stability::{Duplex, IcModel, SystemParams};
use reception::{CellIndex, Kernel, Transmitters};

pub const DEFAULT_MIN_CLUSTERS: f64 = 500.0;

/// Size of the simulated torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionConfig {
    /// Edge length `L`; `None` sizes the torus from `λ` and the channel.
    pub side_length: Option<f64>,
    /// Expected number of clusters an auto-sized torus must hold.
    pub min_clusters: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            side_length: None,
            min_clusters: DEFAULT_MIN_CLUSTERS,
        }
    }
}

impl RegionConfig {
    pub fn fixed(side_length: f64) -> Self {
        Self {
            side_length: Some(side_length),
            ..Self::default()
        }
    }

    /// Edge length used for intensity `lambda`. An auto-sized torus holds at
    /// least `min_clusters` clusters on average and is at least
    /// `20·max(1, θ^(1/α))·r` wide.
    pub fn side_for(&self, lambda: f64, ch: &ChannelParams) -> Result<f64> {
        ch.validate()?;
        match self.side_length {
            Some(side) => {
                if side.is_finite() && side > 10.0 * ch.r {
                    Ok(side)
                } else {
                    Err(Error::invalid(
                        "side_length",
                        side,
                        "torus side must exceed 10 r",
                    ))
                }
            }
            None => {
                if !(self.min_clusters.is_finite() && self.min_clusters > 0.0) {
                    return Err(Error::invalid(
                        "min_clusters",
                        self.min_clusters,
                        "must be positive",
                    ));
                }
                let mut side = 20.0 * ch.r * ch.theta.powf(1.0 / ch.alpha).max(1.0);
                if lambda > 0.0 {
                    side = side.max((self.min_clusters / lambda).sqrt());
                }
                Ok(side)
            }
        }
    }
}

/// A cluster: centre `u` and peer `v = u + r·e^{jφ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterGeometry {
    pub center: [f64; 2],
    pub angle: f64,
}

impl ClusterGeometry {
    pub fn peer(&self, r: f64, torus: &Torus) -> [f64; 2] {
        torus.wrap_point([
            self.center[0] + r * self.angle.cos(),
            self.center[1] + r * self.angle.sin(),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ReceptionMode {
    /// One Bernoulli draw per link with the fades integrated out
    /// analytically. Same law as `Explicit`, much cheaper.
    #[default]
    Marginal,
    /// Exponential fades drawn for the signal and every interferer, and
    /// the SIR compared to `θ`.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub reception: ReceptionMode,
    /// Every node always has a packet; no arrivals, no queue bookkeeping.
    pub saturated: bool,
    /// Redraw the topology at the start of each slot. Switching it off
    /// freezes hand-placed geometries in tests.
    pub relocate: bool,
    /// Fill [`SlotReport::links`].
    pub record_links: bool,
    /// Settle marginal receptions from near-field products and far-field
    /// bounds when possible. Decisions are unchanged; only speed differs.
    pub cell_pruning: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            reception: ReceptionMode::Marginal,
            saturated: false,
            relocate: true,
            record_links: false,
            cell_pruning: true,
        }
    }
}

/// Outcome of one transmission, kept only when links are recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOutcome {
    pub tx: usize,
    pub rx: usize,
    pub success: bool,
    /// SIR at the receiver (explicit reception only).
    pub sir: Option<f64>,
    /// Success probability given the transmitter positions (marginal
    /// reception only).
    pub conditional_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotReport {
    pub slot: u64,
    pub attempts: usize,
    pub successes: usize,
    /// Clusters with both nodes transmitting.
    pub fd_links: usize,
    /// Clusters with exactly one node transmitting.
    pub hd_links: usize,
    /// Delays of the packets delivered in this slot.
    pub completed_delays: Vec<u64>,
    /// Fraction of nodes backlogged when the access decision is made.
    pub nonempty_fraction: f64,
    /// Mean queue length per node at access time (0 when saturated).
    pub mean_queue: f64,
    pub links: Vec<LinkOutcome>,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    positions: Vec<[f64; 2]>,
    tx_slot: Vec<usize>,
    txs: Transmitters,
    uniforms: Vec<f64>,
    delivered: Vec<bool>,
    cells: CellIndex,
}

const NOT_TRANSMITTING: usize = usize::MAX;

/// Cell edge of the pruning grid, in units of `(θrᵅ)^(1/α)`.
const CELL_EDGE: f64 = 1.5;

/// Cluster geometry, per-node FIFO queues of generation slots, and the
/// slot counter of one replication.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub clusters: Vec<ClusterGeometry>,
    pub queues: Vec<VecDeque<u64>>,
    pub slot_index: u64,
    torus: Torus,
    key: StreamKey,
    scratch: Scratch,
}

/// Draws a Poisson number of clusters with mean `λL²`, uniform centres and
/// uniform angles. Queues start empty.
pub fn sample_topology(lambda: f64, side: f64, key: StreamKey) -> Result<NetworkState> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(
            "lambda",
            lambda,
            "cluster intensity must be finite and >= 0",
        ));
    }
    let torus = Torus::new(side);
    let mut rng = key.rng(0, Stream::Topology, 0);
    let mean = lambda * torus.area();
    let count = if mean > 0.0 {
        let dist = Poisson::new(mean)
            .map_err(|_| Error::invalid("lambda", lambda, "Poisson mean out of range"))?;
        dist.sample(&mut rng) as usize
    } else {
        0
    };
    let clusters = (0..count)
        .map(|_| ClusterGeometry {
            center: [rng.random::<f64>() * side, rng.random::<f64>() * side],
            angle: rng.random::<f64>() * TAU,
        })
        .collect();
    Ok(NetworkState::new(clusters, torus, key))
}

impl NetworkState {
    pub fn new(clusters: Vec<ClusterGeometry>, torus: Torus, key: StreamKey) -> Self {
        let nodes = 2 * clusters.len();
        Self {
            clusters,
            queues: vec![VecDeque::new(); nodes],
            slot_index: 0,
            torus,
            key,
            scratch: Scratch::default(),
        }
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn node_count(&self) -> usize {
        2 * self.clusters.len()
    }

    pub fn queue_len(&self, node: usize) -> usize {
        self.queues[node].len()
    }

    /// Adds `packets` to every queue. They count as generated in slot 0.
    pub fn preload(&mut self, packets: usize) {
        for q in &mut self.queues {
            q.extend(std::iter::repeat_n(0, packets));
        }
    }

    /// Executes one slot: relocation, access, reception, then packet
    /// generation. `params.lambda` is not used; the cluster count was fixed
    /// when the topology was drawn.
    pub fn advance_slot(&mut self, params: &SystemParams, opts: &SimOptions) -> SlotReport {
        debug_assert!(params.validate().is_ok());
        let t = self.slot_index;
        let n = self.node_count();
        let ch = params.channel;
        let side = self.torus.side();

        if opts.relocate {
            let mut rng = self.key.rng(t, Stream::Relocation, 0);
            for c in &mut self.clusters {
                c.center = [rng.random::<f64>() * side, rng.random::<f64>() * side];
                c.angle = rng.random::<f64>() * TAU;
            }
        }
        let sc = &mut self.scratch;
        sc.positions.clear();
        for c in &self.clusters {
            sc.positions.push(c.center);
            sc.positions.push(c.peer(ch.r, &self.torus));
        }

        // Access. One uniform per node whatever its state, so a node's
        // decision does not shift the draws of the others.
        let mut report = SlotReport {
            slot: t,
            ..SlotReport::default()
        };
        let mut backlogged = 0usize;
        let mut queued = 0usize;
        sc.tx_slot.clear();
        sc.tx_slot.resize(n, NOT_TRANSMITTING);
        sc.txs.clear();
        let mut rng = self.key.rng(t, Stream::Access, 0);
        for node in 0..n {
            let u: f64 = rng.random();
            let len = self.queues[node].len();
            queued += len;
            let busy = opts.saturated || len > 0;
            backlogged += busy as usize;
            let allowed = match params.duplex {
                Duplex::Full => true,
                Duplex::Half => node.is_multiple_of(2) == t.is_multiple_of(2),
            };
            if busy && allowed && u < params.q {
                sc.tx_slot[node] = sc.txs.len();
                sc.txs.push(node, sc.positions[node]);
            }
        }
        if n > 0 {
            report.nonempty_fraction = backlogged as f64 / n as f64;
            report.mean_queue = if opts.saturated {
                0.0
            } else {
                queued as f64 / n as f64
            };
        }
        for i in 0..self.clusters.len() {
            let a = sc.tx_slot[2 * i] != NOT_TRANSMITTING;
            let b = sc.tx_slot[2 * i + 1] != NOT_TRANSMITTING;
            match (a, b) {
                (true, true) => report.fd_links += 1,
                (true, false) | (false, true) => report.hd_links += 1,
                _ => {}
            }
        }
        report.attempts = sc.txs.len();

        // Reception.
        let threshold = ch.link_threshold();
        let kernel = Kernel::new(self.torus, ch.alpha, threshold);
        let eta = params.effective_eta();
        sc.delivered.clear();
        sc.delivered.resize(sc.txs.len(), false);
        let stream = match opts.reception {
            ReceptionMode::Marginal => Stream::Reception,
            ReceptionMode::Explicit => Stream::SignalFading,
        };
        let mut rng = self.key.rng(t, stream, 0);
        sc.uniforms.clear();
        for _ in 0..n {
            let v: f64 = match opts.reception {
                ReceptionMode::Marginal => rng.random(),
                ReceptionMode::Explicit => rng.sample(Exp1),
            };
            sc.uniforms.push(v);
        }
        let signal_pow = kernel.dist_pow(ch.r * ch.r);
        let pruned = opts.reception == ReceptionMode::Marginal
            && opts.cell_pruning
            && !opts.record_links
            && threshold > 0.0
            && sc
                .cells
                .rebuild(side, CELL_EDGE * threshold.powf(1.0 / ch.alpha), &sc.txs);
        for k in 0..sc.txs.len() {
            let tx = sc.txs.nodes[k];
            let rx = tx ^ 1;
            let rx_k = sc.tx_slot[rx];
            let floor_noise = match params.ic_model {
                IcModel::Perfect => 0.0,
                IcModel::Bound => eta,
                IcModel::Actual if rx_k != NOT_TRANSMITTING => eta,
                IcModel::Actual => 0.0,
            };
            let rx_pos = sc.positions[rx];
            let skip = [k, rx_k];
            let (success, sir, conditional) = match opts.reception {
                ReceptionMode::Marginal => {
                    let u = sc.uniforms[tx];
                    let gate = (-threshold * floor_noise).exp();
                    if opts.record_links {
                        let p = gate * kernel.survival(&sc.txs, rx_pos, skip, 0.0);
                        (u < p, None, Some(p))
                    } else if u >= gate {
                        (false, None, None)
                    } else {
                        let floor = u / gate;
                        let decided = if pruned {
                            sc.cells.decide(&kernel, rx_pos, skip, floor)
                        } else {
                            None
                        };
                        let success = decided.unwrap_or_else(|| {
                            kernel.survival(&sc.txs, rx_pos, skip, floor) > floor
                        });
                        (success, None, None)
                    }
                }
                ReceptionMode::Explicit => {
                    let mut irng = self.key.rng(t, Stream::InterferenceFading, rx as u64);
                    let interference = kernel.interference(&sc.txs, rx_pos, skip, &mut irng);
                    let total = interference + floor_noise;
                    let sir = if total > 0.0 {
                        sc.uniforms[tx] / (signal_pow * total)
                    } else {
                        f64::INFINITY
                    };
                    (sir >= ch.theta, Some(sir), None)
                }
            };
            sc.delivered[k] = success;
            if opts.record_links {
                report.links.push(LinkOutcome {
                    tx,
                    rx,
                    success,
                    sir,
                    conditional_success: conditional,
                });
            }
        }
        for k in 0..sc.txs.len() {
            if !sc.delivered[k] {
                continue;
            }
            report.successes += 1;
            if !opts.saturated {
                let generated = self.queues[sc.txs.nodes[k]]
                    .pop_front()
                    .expect("a transmitting node has a packet");
                // A packet generated at the end of slot g is first eligible
                // in slot g + 1, so a delivery there counts as one slot.
                report.completed_delays.push(t - generated);
            }
        }

        // Generation.
        if !opts.saturated && params.a > 0.0 {
            let mut rng = self.key.rng(t, Stream::Arrivals, 0);
            for q in &mut self.queues {
                if rng.random::<f64>() < params.a {
                    q.push_back(t);
                }
            }
        }

        self.slot_index += 1;
        report
    }
}

#[cfg(test)]
mod tests;
