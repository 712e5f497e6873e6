//! Stability, success probability, delay and throughput of buffered
//! full-duplex and half-duplex Aloha networks under Poisson-clustered
//! interference, together with a slot-level simulator to check them.

pub mod error;
pub mod estimators;
pub mod netsim;
pub mod numerics;
pub mod spatial;
pub mod stability;

pub use error::{Error, Result};
pub use estimators::{aggregate, compare, ComparisonReport, Estimate, MetricEstimates};
pub use netsim::{
    probe_stability, run_replication, run_replications, ProbeConfig, ReceptionMode, RegionConfig,
    ReplicationSummary, RunConfig, StabilityVerdict, StreamKey, Verdict,
};
pub use spatial::{ChannelParams, QuadratureConfig, SpatialConstants};
pub use stability::{AnalyticalMetrics, Duplex, IcModel, StabilityPoint, SystemParams};
