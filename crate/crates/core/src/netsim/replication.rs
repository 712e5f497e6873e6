//! Replications, their summaries, and the queue-growth stability probe.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{
    sample_topology, NetworkState, ReceptionMode, RegionConfig, SimOptions, SlotReport, StreamKey,
};
use crate::error::{Error, Result};
use crate::numerics::student_t_quantile;
use crate::stability::SystemParams;

pub const DEFAULT_HORIZON: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub horizon: u64,
    /// Leading slots excluded from every estimate.
    pub warmup: u64,
    pub reception: ReceptionMode,
    pub saturated: bool,
    /// Packets queued at every node before the first slot.
    pub initial_backlog: usize,
}

impl RunConfig {
    /// `horizon` slots with the first quarter discarded.
    pub fn new(horizon: u64) -> Self {
        Self {
            horizon,
            warmup: horizon / 4,
            reception: ReceptionMode::Marginal,
            saturated: false,
            initial_backlog: 0,
        }
    }

    pub fn saturated(mut self) -> Self {
        self.saturated = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon <= self.warmup {
            return Err(Error::invalid(
                "horizon",
                self.horizon as f64,
                "horizon must exceed warmup",
            ));
        }
        Ok(())
    }

    fn options(&self) -> SimOptions {
        SimOptions {
            reception: self.reception,
            saturated: self.saturated,
            ..SimOptions::default()
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::new(DEFAULT_HORIZON)
    }
}

/// Post-warmup time averages of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    pub replication: u64,
    pub clusters: usize,
    pub side: f64,
    pub slots: u64,
    pub attempts: u64,
    pub successes: u64,
    /// `successes / attempts`; `None` when nothing was transmitted.
    pub ps: Option<f64>,
    pub nonempty: f64,
    /// Mean delay of the packets delivered after warmup; `None` when none
    /// was.
    pub mean_delay: Option<f64>,
    pub delivered: u64,
    /// Successful transmissions per slot per unit area.
    pub throughput_density: f64,
    /// Fractions of cluster-slots with zero, one and two transmissions.
    pub mode_freqs: [f64; 3],
    /// Set when no transmission happened after warmup.
    pub degenerate: bool,
}

fn simulate(
    params: &SystemParams,
    region: &RegionConfig,
    run: &RunConfig,
    key: StreamKey,
    mut observe: impl FnMut(&SlotReport),
) -> Result<NetworkState> {
    params.validate()?;
    run.validate()?;
    let side = region.side_for(params.lambda, &params.channel)?;
    let mut state = sample_topology(params.lambda, side, key)?;
    if !run.saturated {
        state.preload(run.initial_backlog);
    }
    let opts = run.options();
    for _ in 0..run.horizon {
        let report = state.advance_slot(params, &opts);
        observe(&report);
    }
    Ok(state)
}

pub fn run_replication(
    params: &SystemParams,
    region: &RegionConfig,
    run: &RunConfig,
    key: StreamKey,
) -> Result<ReplicationSummary> {
    let mut attempts = 0u64;
    let mut successes = 0u64;
    let mut nonempty = 0.0;
    let mut delay_sum = 0u64;
    let mut delivered = 0u64;
    let mut links = [0u64; 2];
    let state = simulate(params, region, run, key, |r| {
        if r.slot < run.warmup {
            return;
        }
        attempts += r.attempts as u64;
        successes += r.successes as u64;
        nonempty += r.nonempty_fraction;
        delivered += r.completed_delays.len() as u64;
        delay_sum += r.completed_delays.iter().sum::<u64>();
        links[0] += r.hd_links as u64;
        links[1] += r.fd_links as u64;
    })?;
    let slots = run.horizon - run.warmup;
    let clusters = state.clusters.len();
    let cluster_slots = (clusters as u64 * slots) as f64;
    let mode_freqs = if clusters == 0 {
        [1.0, 0.0, 0.0]
    } else {
        let p1 = links[0] as f64 / cluster_slots;
        let p2 = links[1] as f64 / cluster_slots;
        [1.0 - p1 - p2, p1, p2]
    };
    Ok(ReplicationSummary {
        replication: key.replication,
        clusters,
        side: state.torus().side(),
        slots,
        attempts,
        successes,
        ps: (attempts > 0).then(|| successes as f64 / attempts as f64),
        nonempty: if run.saturated {
            1.0
        } else {
            nonempty / slots as f64
        },
        mean_delay: (delivered > 0).then(|| delay_sum as f64 / delivered as f64),
        delivered,
        throughput_density: successes as f64 / (slots as f64 * state.torus().area()),
        mode_freqs,
        degenerate: attempts == 0,
    })
}

/// Evaluates `f` on `0..count` with up to `jobs` worker threads and returns
/// the results in index order.
fn fan_out<T: Send>(
    count: usize,
    jobs: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let jobs = jobs.clamp(1, count.max(1));
    if jobs == 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let r = f(i);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every index is visited"))
        .collect()
}

/// Replications `0..runs` of `master_seed`, in replication order whatever
/// the number of worker threads.
pub fn run_replications(
    params: &SystemParams,
    region: &RegionConfig,
    run: &RunConfig,
    master_seed: u64,
    runs: usize,
    jobs: usize,
) -> Result<Vec<ReplicationSummary>> {
    fan_out(runs, jobs, |i| {
        run_replication(params, region, run, StreamKey::new(master_seed, i as u64))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub horizon: u64,
    pub seeds: usize,
    /// Two-sided level of the slope interval.
    pub confidence: f64,
    /// Largest per-node mean queue over the second half still called
    /// bounded.
    pub max_mean_queue: f64,
    /// Packets queued at every node at the start. A loaded start keeps an
    /// overloaded network from lingering near a low-backlog equilibrium
    /// of the mean-field dynamics; a stable network drains it long before
    /// the fitted half begins.
    pub initial_backlog: usize,
    pub jobs: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            horizon: 40_000,
            seeds: 8,
            confidence: 0.99,
            max_mean_queue: 50.0,
            initial_backlog: 20,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// Across-seed mean of the fitted slope, packets per node per slot.
    pub slope: f64,
    pub slope_half_width: f64,
    /// Across-seed mean of the per-node queue length over the second half.
    pub mean_queue: f64,
    pub seeds: usize,
}

/// Least-squares slope of `ys` against `0, 1, 2, ...`.
fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Trend test on the per-node mean queue length. Each seed contributes the
/// least-squares slope over the second half of the horizon; the verdict
/// comes from a Student-t interval on those slopes.
pub fn probe_stability(
    params: &SystemParams,
    region: &RegionConfig,
    probe: &ProbeConfig,
    master_seed: u64,
) -> Result<StabilityVerdict> {
    if probe.seeds < 5 {
        return Err(Error::InsufficientRuns {
            needed: 5,
            got: probe.seeds,
        });
    }
    if !(probe.confidence > 0.0 && probe.confidence < 1.0) {
        return Err(Error::invalid(
            "confidence",
            probe.confidence,
            "must lie in (0, 1)",
        ));
    }
    let run = RunConfig {
        horizon: probe.horizon,
        warmup: probe.horizon / 2,
        initial_backlog: probe.initial_backlog,
        ..RunConfig::new(probe.horizon)
    };
    run.validate()?;
    if run.horizon - run.warmup < 2 {
        return Err(Error::invalid(
            "horizon",
            probe.horizon as f64,
            "too short for a trend fit",
        ));
    }
    let fits = fan_out(probe.seeds, probe.jobs, |i| {
        let mut trace = Vec::with_capacity((run.horizon - run.warmup) as usize);
        simulate(
            params,
            region,
            &run,
            StreamKey::new(master_seed, i as u64),
            |r| {
                if r.slot >= run.warmup {
                    trace.push(r.mean_queue);
                }
            },
        )?;
        let mean = trace.iter().sum::<f64>() / trace.len() as f64;
        Ok((ols_slope(&trace), mean))
    })?;
    let n = fits.len() as f64;
    let slope = fits.iter().map(|f| f.0).sum::<f64>() / n;
    let mean_queue = fits.iter().map(|f| f.1).sum::<f64>() / n;
    let var = fits.iter().map(|f| (f.0 - slope).powi(2)).sum::<f64>() / (n - 1.0);
    let t = student_t_quantile(0.5 + probe.confidence / 2.0, n - 1.0);
    let half = t * (var / n).sqrt();
    let verdict = if slope - half > 0.0 {
        Verdict::Unstable
    } else if slope + half >= 0.0 && mean_queue <= probe.max_mean_queue {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    Ok(StabilityVerdict {
        verdict,
        slope,
        slope_half_width: half,
        mean_queue,
        seeds: fits.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let ys: Vec<f64> = (0..100).map(|i| 3.0 + 0.25 * i as f64).collect();
        assert!((ols_slope(&ys) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fan_out_keeps_index_order() {
        let serial = fan_out(17, 1, |i| Ok(i * i)).unwrap();
        let parallel = fan_out(17, 4, |i| Ok(i * i)).unwrap();
        assert_eq!(serial, parallel);
    }
}
