//! Experiment configuration: preset defaults, then a `key=value` file, then
//! the `FDALOHA_SEED` environment variable, then command-line flags.

use std::path::{Path, PathBuf};

use fdaloha::spatial::{ChannelParams, QuadratureConfig, SpatialConstants};
use fdaloha::{Duplex, IcModel, ReceptionMode, RegionConfig, RunConfig, SystemParams};

use crate::error::{CliError, CliResult};
use crate::grid::Grid;

pub const SEED_ENV: &str = "FDALOHA_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Q,
    A,
    Lambda,
}

impl SweepVar {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVar::Q => "q",
            SweepVar::A => "a",
            SweepVar::Lambda => "lambda",
        }
    }

    fn parse(v: &str) -> Option<Self> {
        match v {
            "q" => Some(SweepVar::Q),
            "a" => Some(SweepVar::A),
            "lambda" => Some(SweepVar::Lambda),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub grid: Grid,
}

/// Everything a command needs to reproduce its output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub region: RegionConfig,
    pub horizon: u64,
    /// `None` discards the first quarter of the horizon.
    pub warmup: Option<u64>,
    pub runs: usize,
    pub master_seed: u64,
    pub reception: ReceptionMode,
    pub saturated: bool,
    /// Packets queued at every node before the first slot.
    pub initial_backlog: usize,
    /// One output row per replication instead of across-run estimates.
    pub per_run: bool,
    pub sweep: Option<Sweep>,
    /// Run the Monte Carlo columns of figure presets.
    pub simulate: bool,
    /// Cluster intensities of the per-intensity delay figure.
    pub lambdas: Vec<f64>,
    /// Scales `a` to this multiple of the stability bound when set.
    pub a_mult: Option<f64>,
    pub confidence: f64,
    pub max_mean_queue: f64,
    pub quad_tol: f64,
    /// Worker threads. Affects speed only, so it is not echoed.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            region: RegionConfig::default(),
            horizon: 20_000,
            warmup: None,
            runs: 40,
            master_seed: DEFAULT_SEED,
            reception: ReceptionMode::Marginal,
            saturated: false,
            initial_backlog: 0,
            per_run: false,
            sweep: None,
            simulate: true,
            lambdas: vec![0.05, 0.15, 0.3],
            a_mult: None,
            confidence: 0.99,
            max_mean_queue: 50.0,
            quad_tol: QuadratureConfig::default().rel_tol,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("`{key}`: `{v}` is not a number")))
}

fn parse_u64(key: &str, v: &str) -> CliResult<u64> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("`{key}`: `{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Invalid(format!(
            "`{key}`: `{v}` is not a boolean"
        ))),
    }
}

fn choice<T>(key: &str, v: &str, options: &[(&str, T)]) -> CliResult<T>
where
    T: Copy,
{
    options
        .iter()
        .find(|(name, _)| *name == v.trim())
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<_> = options.iter().map(|(n, _)| *n).collect();
            CliError::Invalid(format!("`{key}`: `{v}` is not one of {}", names.join(", ")))
        })
}

const DUPLEX: [(&str, Duplex); 2] = [("fd", Duplex::Full), ("hd", Duplex::Half)];
const IC: [(&str, IcModel); 3] = [
    ("perfect", IcModel::Perfect),
    ("bound", IcModel::Bound),
    ("actual", IcModel::Actual),
];
const RECEPTION: [(&str, ReceptionMode); 2] = [
    ("marginal", ReceptionMode::Marginal),
    ("explicit", ReceptionMode::Explicit),
];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], value: &T) -> &'static str {
    options
        .iter()
        .find(|(_, t)| t == value)
        .map(|(n, _)| *n)
        .expect("every variant is named")
}

pub fn duplex_name(d: Duplex) -> &'static str {
    name_of(&DUPLEX, &d)
}

pub fn ic_name(ic: IcModel) -> &'static str {
    name_of(&IC, &ic)
}

impl ExperimentConfig {
    /// Applies one setting. Keys are those printed by [`Self::entries`],
    /// plus `sweep`/`grid` pairs given as `q_grid`, `a_grid` or
    /// `lambda_grid`, and `jobs`.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let p = &mut self.params;
        match key {
            "lambda" => p.lambda = parse_f64(key, value)?,
            "a" => p.a = parse_f64(key, value)?,
            "q" => p.q = parse_f64(key, value)?,
            "alpha" => p.channel.alpha = parse_f64(key, value)?,
            "r" => p.channel.r = parse_f64(key, value)?,
            "theta" => p.channel.theta = parse_f64(key, value)?,
            "eta" => p.eta = parse_f64(key, value)?,
            "mode" => p.duplex = choice(key, value, &DUPLEX)?,
            "ic" => p.ic_model = choice(key, value, &IC)?,
            "side" => {
                self.region.side_length = match value.trim() {
                    "auto" => None,
                    v => Some(parse_f64(key, v)?),
                }
            }
            "min_clusters" => self.region.min_clusters = parse_f64(key, value)?,
            "horizon" => self.horizon = parse_u64(key, value)?,
            "warmup" => {
                self.warmup = match value.trim() {
                    "auto" => None,
                    v => Some(parse_u64(key, v)?),
                }
            }
            "runs" => self.runs = parse_u64(key, value)? as usize,
            "seed" => self.master_seed = parse_u64(key, value)?,
            "reception" => self.reception = choice(key, value, &RECEPTION)?,
            "saturated" => self.saturated = parse_bool(key, value)?,
            "initial_backlog" => self.initial_backlog = parse_u64(key, value)? as usize,
            "per_run" => self.per_run = parse_bool(key, value)?,
            "simulate" => self.simulate = parse_bool(key, value)?,
            "sweep" => {
                if value.trim() == "none" {
                    self.sweep = None;
                } else {
                    let var = SweepVar::parse(value.trim()).ok_or_else(|| {
                        CliError::Invalid(format!(
                            "`sweep`: `{value}` is not one of q, a, lambda, none"
                        ))
                    })?;
                    let grid = self.sweep.take().map(|s| s.grid).unwrap_or_default();
                    self.sweep = Some(Sweep { var, grid });
                }
            }
            "grid" => {
                let grid: Grid = value.parse()?;
                match &mut self.sweep {
                    Some(s) => s.grid = grid,
                    None => {
                        return Err(CliError::Invalid(
                            "`grid` needs a sweep variable; set `sweep` first".into(),
                        ))
                    }
                }
            }
            "q_grid" | "a_grid" | "lambda_grid" => {
                let var = SweepVar::parse(&key[..key.len() - 5]).expect("known prefix");
                self.sweep = Some(Sweep {
                    var,
                    grid: value.parse()?,
                });
            }
            "lambdas" => {
                self.lambdas = value
                    .split(',')
                    .map(|v| parse_f64(key, v))
                    .collect::<CliResult<_>>()?;
            }
            "a_mult" => {
                self.a_mult = match value.trim() {
                    "none" => None,
                    v => Some(parse_f64(key, v)?),
                }
            }
            "confidence" => self.confidence = parse_f64(key, value)?,
            "max_mean_queue" => self.max_mean_queue = parse_f64(key, value)?,
            "quad_tol" => self.quad_tol = parse_f64(key, value)?,
            "jobs" => self.jobs = parse_u64(key, value)?.max(1) as usize,
            _ => return Err(CliError::Invalid(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("line {}: expected key=value", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Applies `FDALOHA_SEED` when it is set.
    pub fn apply_env(&mut self) -> CliResult<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.set("seed", &v)
                .map_err(|e| CliError::Invalid(format!("{SEED_ENV}: {e}")))?;
        }
        Ok(())
    }

    pub fn warmup(&self) -> u64 {
        self.warmup.unwrap_or(self.horizon / 4)
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            horizon: self.horizon,
            warmup: self.warmup(),
            reception: self.reception,
            saturated: self.saturated,
            initial_backlog: self.initial_backlog,
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.quad_tol,
            ..QuadratureConfig::default()
        }
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.params.channel
    }

    /// `Ω₁`, `Ω₂` and `β` for the configured channel and `η`.
    pub fn spatial(&self) -> CliResult<SpatialConstants> {
        Ok(SpatialConstants::compute(
            &self.params.channel,
            self.params.eta,
            &self.quadrature(),
        )?)
    }

    pub fn sweep_grid(&self, var: SweepVar) -> Option<&Grid> {
        self.sweep
            .as_ref()
            .filter(|s| s.var == var)
            .map(|s| &s.grid)
    }

    /// Rejects a sweep over a variable other than `var`.
    pub fn expect_sweep(&self, var: SweepVar) -> CliResult<()> {
        match &self.sweep {
            Some(s) if s.var != var => Err(CliError::Invalid(format!(
                "this command sweeps `{}`, not `{}`",
                var.as_str(),
                s.var.as_str()
            ))),
            _ => Ok(()),
        }
    }

    /// Resolved settings in a fixed order, as echoed into output headers.
    /// Numbers use the shortest form that parses back to the same value.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let f = |x: f64| x.to_string();
        let mut out = vec![
            ("mode", duplex_name(p.duplex).to_string()),
            ("lambda", f(p.lambda)),
            ("a", f(p.a)),
            ("q", f(p.q)),
            ("alpha", f(p.channel.alpha)),
            ("r", f(p.channel.r)),
            ("theta", f(p.channel.theta)),
            ("eta", f(p.eta)),
            ("ic", ic_name(p.ic_model).to_string()),
            (
                "side",
                self.region
                    .side_length
                    .map_or_else(|| "auto".to_string(), f),
            ),
            ("min_clusters", f(self.region.min_clusters)),
            ("horizon", self.horizon.to_string()),
            ("warmup", self.warmup().to_string()),
            ("runs", self.runs.to_string()),
            ("seed", self.master_seed.to_string()),
            (
                "reception",
                name_of(&RECEPTION, &self.reception).to_string(),
            ),
            ("saturated", self.saturated.to_string()),
            ("initial_backlog", self.initial_backlog.to_string()),
            ("per_run", self.per_run.to_string()),
            ("simulate", self.simulate.to_string()),
        ];
        match &self.sweep {
            Some(s) => {
                out.push(("sweep", s.var.as_str().to_string()));
                out.push(("grid", s.grid.to_string()));
            }
            None => out.push(("sweep", "none".to_string())),
        }
        out.push((
            "lambdas",
            self.lambdas
                .iter()
                .map(|&l| f(l))
                .collect::<Vec<_>>()
                .join(","),
        ));
        out.push(("a_mult", self.a_mult.map_or_else(|| "none".to_string(), f)));
        out.push(("confidence", f(self.confidence)));
        out.push(("max_mean_queue", f(self.max_mean_queue)));
        out.push(("quad_tol", f(self.quad_tol)));
        out
    }
}

/// Builds a configuration from `preset`, an optional file, the seed
/// variable and flag overrides, in increasing order of precedence.
pub fn resolve(
    preset: ExperimentConfig,
    file: Option<&PathBuf>,
    flags: &[(&str, String)],
) -> CliResult<ExperimentConfig> {
    let mut cfg = preset;
    if let Some(path) = file {
        cfg.apply_file(path)?;
    }
    cfg.apply_env()?;
    for (key, value) in flags {
        cfg.set(key, value)?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echoed_entries_parse_back() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "lambda=0.3\nmode=hd\nic=bound\neta=0.05\nq_grid=0.1:0.9:5\nside=40\nwarmup=7",
        )
        .unwrap();
        let text: String = cfg
            .entries()
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        let mut again = ExperimentConfig::default();
        again.apply_text(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn bad_settings_are_invalid() {
        let mut cfg = ExperimentConfig::default();
        for bad in [
            "lambda=x",
            "mode=full",
            "colour=red",
            "grid=0.1:0.2:3",
            "noequals",
        ] {
            assert!(
                matches!(cfg.apply_text(bad), Err(CliError::Invalid(_))),
                "{bad}"
            );
        }
    }
}
