//! Figure presets: success probability and backlog against `q`, optimal
//! arrival rates against `λ`, delay against `a`, and throughput density
//! against `λ`.

use std::path::{Path, PathBuf};

use fdaloha::estimators::Estimate;
use fdaloha::spatial::SpatialConstants;
use fdaloha::stability::{
    fd_optimal_access, hd_optimal_access, sweep_boundary, BoundaryMode, BoundaryRow,
};
use fdaloha::{Duplex, SystemParams};

use crate::commands::{analytic_point, fd_constants, saturated_ps, simulate_point};
use crate::config::{ExperimentConfig, SweepVar};
use crate::error::{CliError, CliResult};
use crate::output::{field, fmt_f64, Table};

pub const FIG1_COLUMNS: [&str; 9] = [
    "q", "ps_ana", "ne_ana", "ps_sim", "ps_lo", "ps_hi", "ne_sim", "ne_lo", "ne_hi",
];
pub const FIG2_COLUMNS: [&str; 5] = [
    "lambda",
    "astar_hd",
    "astar_fd",
    "astar_fd_ic",
    "fd_link_frac",
];
pub const FIG3_COLUMNS: [&str; 9] = [
    "a",
    "d_fd_ana",
    "d_fd_sim",
    "d_fd_lo",
    "d_fd_hi",
    "d_hd_bound",
    "d_hd_sim",
    "d_hd_lo",
    "d_hd_hi",
];
pub const FIG4_COLUMNS: [&str; 4] = ["lambda", "tput_hd", "tput_fd", "tput_fd_ic"];

/// Fractions of `a*_FD` used when the delay figure has no explicit grid.
pub const FIG3_DEFAULT_FRACTIONS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Defaults of figure `n` before any file, variable or flag is applied.
pub fn preset(n: u8) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    match n {
        1 => {
            cfg.params.lambda = 0.2;
            cfg.params.a = 0.13;
            cfg.set("q_grid", "0.05:1:20")?;
        }
        2 | 4 => {
            cfg.params.eta = 0.05;
            cfg.set("lambda_grid", "0.01:5:60:log")?;
        }
        3 => {}
        _ => return Err(CliError::Invalid(format!("no figure {n}; choose 1 to 4"))),
    }
    Ok(cfg)
}

fn interval(est: Option<Estimate>) -> [Option<f64>; 3] {
    match est {
        Some(e) => [Some(e.mean), Some(e.lo()), Some(e.hi())],
        None => [None; 3],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Row {
    pub q: f64,
    /// Stable-regime `p_s`, or the saturated value where the queues grow.
    pub ps_ana: f64,
    /// Stable-regime `1 − π₀`, or one where the queues grow.
    pub ne_ana: f64,
    pub stable: bool,
    pub ps_sim: Option<Estimate>,
    pub ne_sim: Option<Estimate>,
}

pub fn figure1(cfg: &ExperimentConfig) -> CliResult<Vec<Fig1Row>> {
    cfg.expect_sweep(SweepVar::Q)?;
    let qs = cfg
        .sweep_grid(SweepVar::Q)
        .ok_or_else(|| CliError::Invalid("figure 1 needs a q grid".into()))?
        .checked_values()?;
    let sc = cfg.spatial()?;
    qs.into_iter()
        .map(|q| {
            let p = SystemParams { q, ..cfg.params };
            let (ps_ana, ne_ana, stable) = match analytic_point(&p, &sc)? {
                Some(m) => (m.ps, m.nonempty(), true),
                None => (saturated_ps(&p, &sc)?, 1.0, false),
            };
            let (ps_sim, ne_sim) = if cfg.simulate {
                let sim = simulate_point(cfg, &p)?;
                (sim.estimates.ps, Some(sim.estimates.nonempty))
            } else {
                (None, None)
            };
            Ok(Fig1Row {
                q,
                ps_ana,
                ne_ana,
                stable,
                ps_sim,
                ne_sim,
            })
        })
        .collect()
}

pub fn figure1_table(rows: &[Fig1Row]) -> Table {
    let mut t = Table::new(&FIG1_COLUMNS);
    for r in rows {
        let mut row = vec![fmt_f64(r.q), fmt_f64(r.ps_ana), fmt_f64(r.ne_ana)];
        row.extend(interval(r.ps_sim).map(field));
        row.extend(interval(r.ne_sim).map(field));
        t.push(row);
    }
    t
}

/// Optimal operating points of HD, ideal FD and FD with the β-scaled
/// self-interference bound, over the configured λ grid.
pub struct BoundaryCurves {
    pub hd: Vec<BoundaryRow>,
    pub fd: Vec<BoundaryRow>,
    pub fd_ic: Vec<BoundaryRow>,
    pub constants: SpatialConstants,
}

pub fn boundary_curves(cfg: &ExperimentConfig) -> CliResult<BoundaryCurves> {
    cfg.expect_sweep(SweepVar::Lambda)?;
    let lambdas = cfg
        .sweep_grid(SweepVar::Lambda)
        .ok_or_else(|| CliError::Invalid("this figure needs a lambda grid".into()))?
        .checked_values()?;
    let sc = cfg.spatial()?;
    let ch = cfg.channel();
    Ok(BoundaryCurves {
        hd: sweep_boundary(BoundaryMode::Hd, &lambdas, ch, &sc)?,
        fd: sweep_boundary(BoundaryMode::Fd, &lambdas, ch, &sc)?,
        fd_ic: sweep_boundary(BoundaryMode::FdBoundIc, &lambdas, ch, &sc)?,
        constants: sc,
    })
}

pub fn figure2_table(c: &BoundaryCurves) -> Table {
    let mut t = Table::new(&FIG2_COLUMNS);
    for ((h, f), i) in c.hd.iter().zip(&c.fd).zip(&c.fd_ic) {
        t.push(vec![
            fmt_f64(h.lambda),
            fmt_f64(h.point.a_star),
            fmt_f64(f.point.a_star),
            fmt_f64(i.point.a_star),
            fmt_f64(f.fd_link_frac),
        ]);
    }
    t
}

pub fn figure4_table(c: &BoundaryCurves) -> Table {
    let mut t = Table::new(&FIG4_COLUMNS);
    for ((h, f), i) in c.hd.iter().zip(&c.fd).zip(&c.fd_ic) {
        t.push(vec![
            fmt_f64(h.lambda),
            fmt_f64(h.point.tau_star),
            fmt_f64(f.point.tau_star),
            fmt_f64(i.point.tau_star),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub a: f64,
    pub d_fd_ana: Option<f64>,
    pub d_fd_sim: Option<Estimate>,
    pub d_hd_bound: Option<f64>,
    pub d_hd_sim: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Curve {
    pub lambda: f64,
    /// FD and HD each run at their own stability-optimal access probability.
    pub q_fd: f64,
    pub q_hd: f64,
    pub a_star_fd: f64,
    pub a_star_hd: f64,
    pub rows: Vec<Fig3Row>,
}

/// Delay against `a` for one λ. Points outside a system's stability
/// region leave its columns empty.
pub fn figure3_curve(cfg: &ExperimentConfig, lambda: f64) -> CliResult<Fig3Curve> {
    cfg.expect_sweep(SweepVar::A)?;
    let sc = cfg.spatial()?;
    let fd_base = SystemParams {
        lambda,
        duplex: Duplex::Full,
        ..cfg.params
    };
    let fd_star = fd_optimal_access(lambda, &fd_constants(&fd_base, &sc))?;
    let hd_star = hd_optimal_access(lambda, sc.omega1)?;
    let grid = match cfg.sweep_grid(SweepVar::A) {
        Some(g) => g.checked_values()?,
        None => FIG3_DEFAULT_FRACTIONS
            .iter()
            .map(|f| f * fd_star.a_star)
            .collect(),
    };
    let fd = SystemParams {
        q: fd_star.q_star,
        ..fd_base
    };
    let hd = SystemParams {
        q: hd_star.q_star,
        duplex: Duplex::Half,
        ..fd_base
    };
    let delay_of = |base: &SystemParams, a: f64| -> CliResult<(Option<f64>, Option<Estimate>)> {
        let p = SystemParams { a, ..*base };
        let Some(m) = analytic_point(&p, &sc)? else {
            return Ok((None, None));
        };
        let sim = if cfg.simulate {
            simulate_point(cfg, &p)?.estimates.delay
        } else {
            None
        };
        Ok((Some(m.delay), sim))
    };
    let rows = grid
        .into_iter()
        .map(|a| {
            let (d_fd_ana, d_fd_sim) = delay_of(&fd, a)?;
            let (d_hd_bound, d_hd_sim) = delay_of(&hd, a)?;
            Ok(Fig3Row {
                a,
                d_fd_ana,
                d_fd_sim,
                d_hd_bound,
                d_hd_sim,
            })
        })
        .collect::<CliResult<_>>()?;
    Ok(Fig3Curve {
        lambda,
        q_fd: fd_star.q_star,
        q_hd: hd_star.q_star,
        a_star_fd: fd_star.a_star,
        a_star_hd: hd_star.a_star,
        rows,
    })
}

pub fn figure3_table(curve: &Fig3Curve) -> Table {
    let mut t = Table::new(&FIG3_COLUMNS);
    for r in &curve.rows {
        let mut row = vec![fmt_f64(r.a), field(r.d_fd_ana)];
        row.extend(interval(r.d_fd_sim).map(field));
        row.push(field(r.d_hd_bound));
        row.extend(interval(r.d_hd_sim).map(field));
        t.push(row);
    }
    t
}

/// File name of the delay figure for one λ.
pub fn figure3_file(lambda: f64) -> String {
    format!("fig3_lambda{lambda}.csv")
}

/// Runs figure `n` and writes its CSV files into `dir`, returning their
/// paths.
pub fn write_figure(n: u8, cfg: &ExperimentConfig, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let command = format!("figure {n}");
    let mut written = Vec::new();
    let mut save = |name: String, table: Table| -> CliResult<()> {
        let path = dir.join(name);
        table.save(Some(&path), &command, cfg)?;
        written.push(path);
        Ok(())
    };
    match n {
        1 => save("fig1.csv".into(), figure1_table(&figure1(cfg)?))?,
        2 => save("fig2.csv".into(), figure2_table(&boundary_curves(cfg)?))?,
        3 => {
            if cfg.lambdas.is_empty() {
                return Err(CliError::Invalid(
                    "figure 3 needs at least one lambda".into(),
                ));
            }
            for &lambda in &cfg.lambdas {
                let curve = figure3_curve(cfg, lambda)?;
                save(figure3_file(lambda), figure3_table(&curve))?;
            }
        }
        4 => save("fig4.csv".into(), figure4_table(&boundary_curves(cfg)?))?,
        _ => return Err(CliError::Invalid(format!("no figure {n}; choose 1 to 4"))),
    }
    Ok(written)
}
