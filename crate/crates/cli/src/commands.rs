//! The analytic, simulation and probe subcommands, each producing a table.

use fdaloha::estimators::{aggregate_at, MetricEstimates};
use fdaloha::spatial::{omega2_quadrature, SpatialConstants};
use fdaloha::stability::{
    analyze, fd_stability_bound, hd_stability_bound, saturated_success_prob, sweep_boundary,
    AnalyticalMetrics, BoundaryMode,
};
use fdaloha::{
    probe_stability, run_replications, Duplex, Error, IcModel, ProbeConfig, ReplicationSummary,
    StabilityVerdict, SystemParams, Verdict,
};

use crate::config::{duplex_name, ic_name, ExperimentConfig, SweepVar};
use crate::error::{CliError, CliResult};
use crate::output::{field, fmt_f64, Table};

/// Level of every simulation confidence interval in the outputs.
pub const SIM_CONFIDENCE: f64 = 0.95;

/// Constants seen by an FD analysis: `β` applies only with imperfect
/// cancellation.
pub fn fd_constants(params: &SystemParams, sc: &SpatialConstants) -> SpatialConstants {
    match params.ic_model {
        IcModel::Perfect => sc.ideal(),
        IcModel::Bound | IcModel::Actual => *sc,
    }
}

/// Largest stable arrival rate at `params.q`.
pub fn stability_bound(params: &SystemParams, sc: &SpatialConstants) -> CliResult<f64> {
    Ok(match params.duplex {
        Duplex::Full => fd_stability_bound(params.q, params.lambda, &fd_constants(params, sc))?,
        Duplex::Half => hd_stability_bound(params.q, params.lambda, sc.omega1)?,
    })
}

/// Success probability when every node is backlogged.
pub fn saturated_ps(params: &SystemParams, sc: &SpatialConstants) -> CliResult<f64> {
    Ok(match params.duplex {
        Duplex::Full => saturated_success_prob(params.q, params.lambda, &fd_constants(params, sc))?,
        Duplex::Half => (-params.lambda * params.q * sc.omega1).exp(),
    })
}

/// Stable-regime metrics, or `None` outside the stability region.
pub fn analytic_point(
    params: &SystemParams,
    sc: &SpatialConstants,
) -> CliResult<Option<AnalyticalMetrics>> {
    match analyze(params, sc) {
        Ok(m) => Ok(Some(m)),
        Err(Error::Unstable { .. } | Error::NoStableSolution { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub struct SimPoint {
    pub runs: Vec<ReplicationSummary>,
    pub estimates: MetricEstimates,
}

impl SimPoint {
    pub fn degenerate_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.degenerate).count()
    }
}

/// Replications of `params` under the run settings of `cfg`.
pub fn simulate_point(cfg: &ExperimentConfig, params: &SystemParams) -> CliResult<SimPoint> {
    let runs = run_replications(
        params,
        &cfg.region,
        &cfg.run_config(),
        cfg.master_seed,
        cfg.runs,
        cfg.jobs,
    )
    .map_err(|e| match e {
        Error::InvalidParameter { .. } | Error::InsufficientRuns { .. } => CliError::from(e),
        e => CliError::Runtime(format!("replication failed: {e}")),
    })?;
    let estimates = aggregate_at(&runs, SIM_CONFIDENCE)?;
    Ok(SimPoint { runs, estimates })
}

/// Configured parameters, once per grid value of the sweep if any.
fn sweep_points(cfg: &ExperimentConfig) -> CliResult<Vec<SystemParams>> {
    let Some(sweep) = &cfg.sweep else {
        return Ok(vec![cfg.params]);
    };
    Ok(sweep
        .grid
        .checked_values()?
        .into_iter()
        .map(|v| {
            let mut p = cfg.params;
            match sweep.var {
                SweepVar::Q => p.q = v,
                SweepVar::A => p.a = v,
                SweepVar::Lambda => p.lambda = v,
            }
            p
        })
        .collect())
}

fn param_fields(p: &SystemParams) -> Vec<String> {
    vec![
        duplex_name(p.duplex).to_string(),
        fmt_f64(p.lambda),
        fmt_f64(p.a),
        fmt_f64(p.q),
        fmt_f64(p.eta),
        ic_name(p.ic_model).to_string(),
    ]
}

const PARAM_COLUMNS: [&str; 6] = ["mode", "lambda", "a", "q", "eta", "ic"];

fn with_params(extra: &[&'static str]) -> Vec<&'static str> {
    PARAM_COLUMNS.iter().chain(extra).copied().collect()
}

pub fn omega(cfg: &ExperimentConfig) -> CliResult<Table> {
    let ch = cfg.channel();
    let sc = cfg.spatial()?;
    let quad = omega2_quadrature(ch, &cfg.quadrature())?;
    let mut t = Table::new(&[
        "alpha",
        "r",
        "theta",
        "eta",
        "omega1",
        "omega2",
        "beta",
        "omega2_error",
        "intervals",
        "evaluations",
    ]);
    t.push(vec![
        fmt_f64(ch.alpha),
        fmt_f64(ch.r),
        fmt_f64(ch.theta),
        fmt_f64(cfg.params.eta),
        fmt_f64(sc.omega1),
        fmt_f64(sc.omega2),
        fmt_f64(sc.beta),
        fmt_f64(quad.error),
        quad.intervals.to_string(),
        quad.outer_evaluations.to_string(),
    ]);
    Ok(t)
}

pub fn fixedpoint(cfg: &ExperimentConfig) -> CliResult<Table> {
    let sc = cfg.spatial()?;
    let mut t = Table::new(&with_params(&[
        "stability_bound",
        "ps",
        "pi0",
        "n_mean",
        "delay",
        "delay_is_bound",
    ]));
    for p in sweep_points(cfg)? {
        let bound = stability_bound(&p, &sc)?;
        let m = analyze(&p, &sc)?;
        let mut row = param_fields(&p);
        row.extend([
            fmt_f64(bound),
            fmt_f64(m.ps),
            fmt_f64(m.pi0),
            fmt_f64(m.n_mean),
            fmt_f64(m.delay),
            m.delay_is_bound.to_string(),
        ]);
        t.push(row);
    }
    Ok(t)
}

pub fn boundary(cfg: &ExperimentConfig) -> CliResult<Table> {
    cfg.expect_sweep(SweepVar::Lambda)?;
    let grid = cfg
        .sweep_grid(SweepVar::Lambda)
        .ok_or_else(|| CliError::Invalid("boundary needs a lambda grid".into()))?
        .checked_values()?;
    let sc = cfg.spatial()?;
    let ch = cfg.channel();
    let fd = sweep_boundary(BoundaryMode::Fd, &grid, ch, &sc)?;
    let hd = sweep_boundary(BoundaryMode::Hd, &grid, ch, &sc)?;
    let ic = sweep_boundary(BoundaryMode::FdBoundIc, &grid, ch, &sc)?;
    let mut t = Table::new(&[
        "lambda",
        "eta",
        "q_fd",
        "astar_fd",
        "tau_fd",
        "fd_link_frac",
        "q_hd",
        "astar_hd",
        "tau_hd",
        "q_fd_ic",
        "astar_fd_ic",
        "tau_fd_ic",
    ]);
    for ((f, h), i) in fd.iter().zip(&hd).zip(&ic) {
        t.push(vec![
            fmt_f64(f.lambda),
            fmt_f64(cfg.params.eta),
            fmt_f64(f.point.q_star),
            fmt_f64(f.point.a_star),
            fmt_f64(f.point.tau_star),
            fmt_f64(f.fd_link_frac),
            fmt_f64(h.point.q_star),
            fmt_f64(h.point.a_star),
            fmt_f64(h.point.tau_star),
            fmt_f64(i.point.q_star),
            fmt_f64(i.point.a_star),
            fmt_f64(i.point.tau_star),
        ]);
    }
    Ok(t)
}

pub struct SimulateOutput {
    pub table: Table,
    pub degenerate_runs: usize,
}

pub fn simulate(cfg: &ExperimentConfig) -> CliResult<SimulateOutput> {
    let sc = cfg.spatial()?;
    let mut degenerate_runs = 0;
    let mut t = if cfg.per_run {
        Table::new(&with_params(&[
            "replication",
            "clusters",
            "side",
            "slots",
            "attempts",
            "successes",
            "ps",
            "nonempty",
            "mean_delay",
            "delivered",
            "throughput_density",
            "p0",
            "p1",
            "p2",
            "degenerate",
        ]))
    } else {
        Table::new(&with_params(&[
            "saturated",
            "runs",
            "degenerate_runs",
            "ps",
            "ps_lo",
            "ps_hi",
            "ne",
            "ne_lo",
            "ne_hi",
            "delay",
            "delay_lo",
            "delay_hi",
            "tput",
            "tput_lo",
            "tput_hi",
            "p0",
            "p1",
            "p2",
            "ps_ana",
            "ne_ana",
            "delay_ana",
        ]))
    };
    for p in sweep_points(cfg)? {
        let sim = simulate_point(cfg, &p)?;
        degenerate_runs += sim.degenerate_runs();
        if cfg.per_run {
            for r in &sim.runs {
                let mut row = param_fields(&p);
                row.extend([
                    r.replication.to_string(),
                    r.clusters.to_string(),
                    fmt_f64(r.side),
                    r.slots.to_string(),
                    r.attempts.to_string(),
                    r.successes.to_string(),
                    field(r.ps),
                    fmt_f64(r.nonempty),
                    field(r.mean_delay),
                    r.delivered.to_string(),
                    fmt_f64(r.throughput_density),
                    fmt_f64(r.mode_freqs[0]),
                    fmt_f64(r.mode_freqs[1]),
                    fmt_f64(r.mode_freqs[2]),
                    r.degenerate.to_string(),
                ]);
                t.push(row);
            }
            continue;
        }
        let e = &sim.estimates;
        let (ps_ana, ne_ana, delay_ana) = if cfg.saturated {
            (Some(saturated_ps(&p, &sc)?), Some(1.0), None)
        } else {
            match analytic_point(&p, &sc)? {
                Some(m) => (Some(m.ps), Some(m.nonempty()), Some(m.delay)),
                None => (None, None, None),
            }
        };
        let mut row = param_fields(&p);
        row.extend([
            cfg.saturated.to_string(),
            e.n_runs.to_string(),
            sim.degenerate_runs().to_string(),
        ]);
        for est in [e.ps, Some(e.nonempty), e.delay, Some(e.throughput_density)] {
            row.extend([
                field(est.map(|x| x.mean)),
                field(est.map(|x| x.lo())),
                field(est.map(|x| x.hi())),
            ]);
        }
        row.extend(e.mode_freqs.iter().map(|m| fmt_f64(m.mean)));
        row.extend([field(ps_ana), field(ne_ana), field(delay_ana)]);
        t.push(row);
    }
    Ok(SimulateOutput {
        table: t,
        degenerate_runs,
    })
}

pub struct ProbeOutput {
    pub table: Table,
    pub verdict: StabilityVerdict,
}

/// Queue-growth probe at `a`, or at `a_mult` times the stability bound.
pub fn probe(cfg: &ExperimentConfig) -> CliResult<ProbeOutput> {
    let sc = cfg.spatial()?;
    let mut p = cfg.params;
    let bound = stability_bound(&p, &sc)?;
    if let Some(m) = cfg.a_mult {
        if !(m.is_finite() && m >= 0.0) {
            return Err(CliError::Invalid(format!(
                "`a_mult` = {m} must be finite and >= 0"
            )));
        }
        p.a = m * bound;
    }
    let probe = ProbeConfig {
        horizon: cfg.horizon,
        seeds: cfg.runs,
        confidence: cfg.confidence,
        max_mean_queue: cfg.max_mean_queue,
        initial_backlog: cfg.initial_backlog,
        jobs: cfg.jobs,
    };
    let verdict = probe_stability(&p, &cfg.region, &probe, cfg.master_seed)?;
    let mut t = Table::new(&with_params(&[
        "bound",
        "a_mult",
        "verdict",
        "slope",
        "slope_lo",
        "slope_hi",
        "mean_queue",
        "seeds",
    ]));
    let mut row = param_fields(&p);
    row.extend([
        fmt_f64(bound),
        field(cfg.a_mult),
        verdict.verdict.as_str().to_string(),
        fmt_f64(verdict.slope),
        fmt_f64(verdict.slope - verdict.slope_half_width),
        fmt_f64(verdict.slope + verdict.slope_half_width),
        fmt_f64(verdict.mean_queue),
        verdict.seeds.to_string(),
    ]);
    t.push(row);
    Ok(ProbeOutput { table: t, verdict })
}

impl ProbeOutput {
    pub fn inconclusive(&self) -> bool {
        self.verdict.verdict == Verdict::Inconclusive
    }
}
