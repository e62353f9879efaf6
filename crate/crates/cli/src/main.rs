use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use f2bp::sim::config::IntegratorKind;
use f2bp::sim::scenarios::scenario;
use f2bp::sim::{read_states, RunConfig, Simulation};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Integrator {
    Lgvi,
    Rkf78,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Simulate two gravitating polyhedra with a Lie group variational
/// integrator or an adaptive RKF7(8) reference integrator.
#[derive(Debug, Parser)]
#[command(name = "f2bp", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Start from a built-in scenario (1-4) instead of a config file.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    scenario: Option<u8>,
    #[arg(long, value_enum)]
    integrator: Option<Integrator>,
    /// Fixed step size for the LGVI (s).
    #[arg(long)]
    h: Option<f64>,
    /// Local error tolerance for RKF7(8).
    #[arg(long)]
    tol: Option<f64>,
    /// Series truncation order.
    #[arg(long)]
    order: Option<usize>,
    /// Start time (s).
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
    /// End time (s).
    #[arg(long, allow_hyphen_values = true)]
    tf: Option<f64>,
    /// States CSV path.
    #[arg(long)]
    out_states: Option<PathBuf>,
    /// Diagnostics CSV path (energy, momentum, orthogonality, Newton data).
    #[arg(long)]
    out_diag: Option<PathBuf>,
    /// Also write the run summary to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Write every n-th step.
    #[arg(long)]
    every: Option<usize>,
    /// Bit-reproducible parallel reduction.
    #[arg(long, value_enum)]
    deterministic: Option<Switch>,
    /// Continue from the last row of a states CSV.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(args: &Args) -> Result<RunConfig> {
    let mut cfg = match (&args.config, args.scenario) {
        (Some(path), _) => RunConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(n)) => scenario(n as usize).expect("range-checked"),
        (None, None) => bail!("give --config PATH or --scenario N"),
    };
    let it = &mut cfg.integrator;
    if let Some(kind) = args.integrator {
        it.kind = match kind {
            Integrator::Lgvi => IntegratorKind::Lgvi,
            Integrator::Rkf78 => IntegratorKind::Rkf78,
        };
    }
    match it.kind {
        IntegratorKind::Lgvi => {
            it.tolerance = None;
            it.h = args.h.or(it.h);
            if it.h.is_none() {
                it.h = Some(1.0);
            }
        }
        IntegratorKind::Rkf78 => {
            if args.h.is_some() {
                bail!("--h applies to the LGVI; use --tol for rkf78");
            }
            it.h = None;
            it.tolerance = args.tol.or(it.tolerance);
        }
    }
    if args.tol.is_some() && it.kind == IntegratorKind::Lgvi {
        bail!("--tol applies to rkf78; use --h for the LGVI");
    }
    if let Some(v) = args.order {
        it.order = v;
    }
    if let Some(v) = args.t0 {
        it.t0 = v;
    }
    if let Some(v) = args.tf {
        it.tf = v;
    }
    if let Some(d) = args.deterministic {
        it.deterministic = matches!(d, Switch::On);
    }
    let out = &mut cfg.output;
    if args.out_states.is_some() {
        out.states = args.out_states.clone();
    }
    if args.out_diag.is_some() {
        out.diagnostics = args.out_diag.clone();
    }
    if args.summary.is_some() {
        out.summary = args.summary.clone();
    }
    if let Some(v) = args.every {
        out.every = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cfg = load(&args)?;
    if args.print_config {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    let mut sim = Simulation::new(cfg)?;
    if let Some(path) = &args.resume {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let rows = read_states(file)?;
        let last = rows.last().with_context(|| format!("{} has no state rows", path.display()))?;
        sim.resume_from(last);
    }
    let summary = sim.run_to_files()?;
    print!("{}", summary.to_text());
    Ok(())
}
