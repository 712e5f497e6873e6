//! Across-replication estimates with Student-t confidence intervals, and
//! their comparison against the analytical model.

use crate::error::{Error, Result};
use crate::netsim::ReplicationSummary;
use crate::numerics::student_t_quantile;
use crate::stability::AnalyticalMetrics;

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Sample mean and the half-width of its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Estimate {
    /// Mean of `values` with a two-sided Student-t interval at `level`.
    /// The values are sorted before summation so the result does not depend
    /// on their order.
    pub fn from_samples(values: &[f64], level: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientRuns {
                needed: 2,
                got: values.len(),
            });
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(
                "level",
                level,
                "confidence level must lie in (0, 1)",
            ));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        if v[0] == v[v.len() - 1] {
            return Ok(Self {
                mean: v[0],
                half_width: 0.0,
                n: v.len(),
            });
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        sq.sort_by(f64::total_cmp);
        let var = sq.iter().sum::<f64>() / (n - 1.0);
        let t = student_t_quantile(0.5 + level / 2.0, n - 1.0);
        Ok(Self {
            mean,
            half_width: t * (var / n).sqrt(),
            n: v.len(),
        })
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo() <= x && x <= self.hi()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricEstimates {
    /// Success probability over the runs that transmitted at least once;
    /// `None` if fewer than two did.
    pub ps: Option<Estimate>,
    pub nonempty: Estimate,
    /// Pooled per-run mean delays; `None` if fewer than two runs delivered
    /// a packet.
    pub delay: Option<Estimate>,
    pub throughput_density: Estimate,
    /// Zero, one and two transmissions per cluster.
    pub mode_freqs: [Estimate; 3],
    pub n_runs: usize,
}

pub fn aggregate(summaries: &[ReplicationSummary]) -> Result<MetricEstimates> {
    aggregate_at(summaries, DEFAULT_CONFIDENCE)
}

pub fn aggregate_at(summaries: &[ReplicationSummary], level: f64) -> Result<MetricEstimates> {
    if summaries.len() < 2 {
        return Err(Error::InsufficientRuns {
            needed: 2,
            got: summaries.len(),
        });
    }
    let column = |f: &dyn Fn(&ReplicationSummary) -> f64| -> Result<Estimate> {
        let v: Vec<f64> = summaries.iter().map(f).collect();
        Estimate::from_samples(&v, level)
    };
    let optional = |f: &dyn Fn(&ReplicationSummary) -> Option<f64>| -> Result<Option<Estimate>> {
        let v: Vec<f64> = summaries.iter().filter_map(f).collect();
        if v.len() < 2 {
            Ok(None)
        } else {
            Estimate::from_samples(&v, level).map(Some)
        }
    };
    Ok(MetricEstimates {
        ps: optional(&|s| s.ps)?,
        nonempty: column(&|s| s.nonempty)?,
        delay: optional(&|s| s.mean_delay)?,
        throughput_density: column(&|s| s.throughput_density)?,
        mode_freqs: [
            column(&|s| s.mode_freqs[0])?,
            column(&|s| s.mode_freqs[1])?,
            column(&|s| s.mode_freqs[2])?,
        ],
        n_runs: summaries.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCheck {
    pub metric: &'static str,
    pub analytic: f64,
    pub estimate: Estimate,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub checks: Vec<MetricCheck>,
}

impl ComparisonReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, metric: &str) -> Option<&MetricCheck> {
        self.checks.iter().find(|c| c.metric == metric)
    }
}

/// `true` if `analytic` lies in the interval or within `rel_slack` of the
/// estimate relative to `analytic`.
pub fn agrees(estimate: &Estimate, analytic: f64, rel_slack: f64) -> bool {
    estimate.contains(analytic) || (estimate.mean - analytic).abs() <= rel_slack * analytic.abs()
}

/// Checks success probability, nonempty fraction and delay. An HD delay
/// is an upper bound and passes iff `bound ≥ estimate − half-width`.
pub fn compare(est: &MetricEstimates, ana: &AnalyticalMetrics, rel_slack: f64) -> ComparisonReport {
    let mut checks = Vec::new();
    if let Some(ps) = est.ps {
        checks.push(MetricCheck {
            metric: "ps",
            analytic: ana.ps,
            estimate: ps,
            pass: agrees(&ps, ana.ps, rel_slack),
        });
    }
    checks.push(MetricCheck {
        metric: "nonempty",
        analytic: ana.nonempty(),
        estimate: est.nonempty,
        pass: agrees(&est.nonempty, ana.nonempty(), rel_slack),
    });
    if let Some(d) = est.delay {
        let pass = if ana.delay_is_bound {
            ana.delay >= d.lo()
        } else {
            agrees(&d, ana.delay, rel_slack)
        };
        checks.push(MetricCheck {
            metric: "delay",
            analytic: ana.delay,
            estimate: d,
            pass,
        });
    }
    ComparisonReport { checks }
}
