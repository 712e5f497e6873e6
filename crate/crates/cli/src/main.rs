use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdaloha_cli::commands;
use fdaloha_cli::config::{resolve, ExperimentConfig};
use fdaloha_cli::figures;
use fdaloha_cli::{CliError, CliResult};

/// Stability, delay and throughput of full-duplex and half-duplex buffered
/// slotted-Aloha networks.
#[derive(Parser)]
#[command(name = "fdaloha", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interference functionals Ω₁, Ω₂ and the cancellation penalty β.
    Omega(Common),
    /// Stable-regime success probability, backlog and delay.
    Fixedpoint(Common),
    /// Maximum stable arrival rates and throughput densities over λ.
    Boundary(Common),
    /// Monte Carlo replications with confidence intervals.
    Simulate(Common),
    /// Queue-growth stability test; exits 4 when inconclusive.
    Probe(Common),
    /// Figure preset 1 to 4, written as CSV files.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        n: u8,
        /// Directory for the CSV files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// Settings shared by every subcommand. Each flag overrides the key of the
/// same name (dashes read as underscores) in the `--config` file.
#[derive(Args, Default)]
struct Common {
    /// File of `key=value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// fd or hd.
    #[arg(long)]
    mode: Option<String>,
    /// perfect, bound or actual self-interference cancellation.
    #[arg(long)]
    ic: Option<String>,
    /// Torus side, or `auto`.
    #[arg(long)]
    side: Option<String>,
    #[arg(long)]
    min_clusters: Option<f64>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Discarded leading slots, or `auto` for a quarter of the horizon.
    #[arg(long)]
    warmup: Option<String>,
    /// Replications, or probe seeds.
    #[arg(long)]
    runs: Option<u64>,
    /// Master seed; overrides FDALOHA_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// marginal or explicit.
    #[arg(long)]
    reception: Option<String>,
    /// Keep every node backlogged.
    #[arg(long)]
    saturated: bool,
    /// One row per replication.
    #[arg(long)]
    per_run: bool,
    /// Skip the Monte Carlo columns of figure presets.
    #[arg(long)]
    no_sim: bool,
    /// Grid as `v1,v2,...`, `lo:hi:n` or `lo:hi[:n]:log`.
    #[arg(long)]
    q_grid: Option<String>,
    #[arg(long)]
    a_grid: Option<String>,
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Comma-separated intensities of figure 3.
    #[arg(long)]
    lambdas: Option<String>,
    /// Set `a` to this multiple of the stability bound.
    #[arg(long)]
    a_mult: Option<f64>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long)]
    max_mean_queue: Option<f64>,
    /// Packets queued at every node before the first slot.
    #[arg(long)]
    initial_backlog: Option<u64>,
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<u64>,
    /// Any setting as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> CliResult<Vec<(&str, String)>> {
        let mut out: Vec<(&str, String)> = Vec::new();
        let mut put = |key, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        let num = |x: Option<f64>| x.map(|v| v.to_string());
        let int = |x: Option<u64>| x.map(|v| v.to_string());
        put("lambda", num(self.lambda));
        put("a", num(self.a));
        put("q", num(self.q));
        put("alpha", num(self.alpha));
        put("r", num(self.r));
        put("theta", num(self.theta));
        put("eta", num(self.eta));
        put("mode", self.mode.clone());
        put("ic", self.ic.clone());
        put("side", self.side.clone());
        put("min_clusters", num(self.min_clusters));
        put("horizon", int(self.horizon));
        put("warmup", self.warmup.clone());
        put("runs", int(self.runs));
        put("seed", int(self.seed));
        put("reception", self.reception.clone());
        put("saturated", self.saturated.then(|| "true".into()));
        put("per_run", self.per_run.then(|| "true".into()));
        put("simulate", self.no_sim.then(|| "false".into()));
        put("q_grid", self.q_grid.clone());
        put("a_grid", self.a_grid.clone());
        put("lambda_grid", self.lambda_grid.clone());
        put("lambdas", self.lambdas.clone());
        put("a_mult", num(self.a_mult));
        put("confidence", num(self.confidence));
        put("max_mean_queue", num(self.max_mean_queue));
        put("initial_backlog", int(self.initial_backlog));
        put("quad_tol", num(self.quad_tol));
        put("jobs", int(self.jobs));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("--set `{kv}`: expected key=value")))?;
            out.push((k.trim(), v.trim().to_string()));
        }
        Ok(out)
    }

    fn resolve(&self, preset: ExperimentConfig) -> CliResult<ExperimentConfig> {
        resolve(preset, self.config.as_ref(), &self.overrides()?)
    }
}

fn probe_preset() -> ExperimentConfig {
    let defaults = fdaloha::ProbeConfig::default();
    ExperimentConfig {
        horizon: defaults.horizon,
        runs: defaults.seeds,
        confidence: defaults.confidence,
        max_mean_queue: defaults.max_mean_queue,
        initial_backlog: defaults.initial_backlog,
        ..ExperimentConfig::default()
    }
}

fn boundary_preset() -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    cfg.set("lambda_grid", "0.01:5:60:log")?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Omega(c) => {
            let cfg = c.resolve(ExperimentConfig::default())?;
            commands::omega(&cfg)?.save(c.out.as_deref(), "omega", &cfg)
        }
        Command::Fixedpoint(c) => {
            let cfg = c.resolve(ExperimentConfig::default())?;
            commands::fixedpoint(&cfg)?.save(c.out.as_deref(), "fixedpoint", &cfg)
        }
        Command::Boundary(c) => {
            let cfg = c.resolve(boundary_preset()?)?;
            commands::boundary(&cfg)?.save(c.out.as_deref(), "boundary", &cfg)
        }
        Command::Simulate(c) => {
            let cfg = c.resolve(ExperimentConfig::default())?;
            let out = commands::simulate(&cfg)?;
            out.table.save(c.out.as_deref(), "simulate", &cfg)?;
            if out.degenerate_runs > 0 {
                eprintln!(
                    "warning: {} replication(s) are degenerate: nothing was transmitted after warmup",
                    out.degenerate_runs
                );
            }
            Ok(())
        }
        Command::Probe(c) => {
            let cfg = c.resolve(probe_preset())?;
            let out = commands::probe(&cfg)?;
            out.table.save(c.out.as_deref(), "probe", &cfg)?;
            eprintln!("verdict: {}", out.verdict.verdict.as_str());
            if out.inconclusive() {
                return Err(CliError::Inconclusive);
            }
            Ok(())
        }
        Command::Figure { n, out_dir, common } => {
            if common.out.is_some() {
                return Err(CliError::Invalid(
                    "figure writes into --out-dir, not --out".into(),
                ));
            }
            let cfg = common.resolve(figures::preset(n)?)?;
            for path in figures::write_figure(n, &cfg, &out_dir)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Inconclusive) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
