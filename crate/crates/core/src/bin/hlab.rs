use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heisenberg_lab::cli::{cmd_cascade, cmd_hardy, cmd_kernel, cmd_report, cmd_verify, ExperimentConfig, RunDir};
use heisenberg_lab::par;

/// Heat flow with Hardy potentials on the Heisenberg group.
#[derive(Parser)]
#[command(name = "hlab", version)]
struct Cli {
    /// TOML configuration; defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Dotted `KEY=VALUE` override, e.g. `cascade.c=4`; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gauge identities, covariance, radial reduction, Sobolev, Moser, divergence.
    Verify,
    /// Rayleigh minima of the Hardy quotient under refinement.
    Hardy,
    /// Heat-kernel Gaussian fits.
    Kernel,
    /// Truncated-potential cascade and its verdict.
    Cascade,
    /// Summary of a finished cascade in the output directory.
    Report,
}

fn run(cli: Cli) -> heisenberg_lab::Result<i32> {
    let mut overrides = cli.overrides;
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(t) = cli.threads {
        overrides.push(format!("threads={t}"));
    }
    if let Some(o) = &cli.out {
        overrides.push(format!("out_dir={}", toml_string(&o.display().to_string())));
    }
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    par::init_threads(cfg.threads);
    if let Command::Report = cli.command {
        let outcome = cmd_report(&cfg.out_dir)?;
        print!("{}", outcome.summary);
        return Ok(outcome.exit_code);
    }
    let dir = RunDir::prepare(&cfg, &cfg.out_dir)?;
    log::info!("config hash {}", dir.hash);
    let outcome = match cli.command {
        Command::Verify => cmd_verify(&cfg, &dir)?,
        Command::Hardy => cmd_hardy(&cfg, &dir)?,
        Command::Kernel => cmd_kernel(&cfg, &dir)?,
        Command::Cascade => cmd_cascade(&cfg, &dir)?,
        Command::Report => unreachable!(),
    };
    print!("{}", outcome.summary);
    for f in &outcome.files {
        log::info!("wrote {}", f.display());
    }
    Ok(outcome.exit_code)
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
