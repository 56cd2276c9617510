//! Command-line driver: loads a run configuration, executes the requested
//! experiment, and reports progress. Exits nonzero when the run fails.

use std::error::Error;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use memphase::config::{InitialCondition, RunConfig};
use memphase::sim::{self, SweepStatus};

#[derive(Parser)]
#[command(
    name = "memphase",
    about = "Phase-field simulation on implicitly defined surfaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Use the published full-scale resolutions and horizons (hours of compute)
    #[arg(long, global = true)]
    full: bool,
    /// Override the configured output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Start from random initial data with this seed
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured run
    Run {
        /// Path to a config file (`section.key = value` lines)
        config: PathBuf,
    },
    /// Convergence study against the exact benchmark solution
    Validate {
        config: PathBuf,
        /// Inclusive refinement-level range, e.g. 2..4
        #[arg(long, default_value = "2..4")]
        levels: String,
    },
    /// Run the config once per stabilization value, concurrently
    Sweep {
        config: PathBuf,
        /// Comma-separated stabilization values
        #[arg(long, default_value = "0,0.1,0.2,0.5,1,10")]
        beta: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli, path: &PathBuf) -> Result<RunConfig, Box<dyn Error>> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut cfg = RunConfig::from_text(&text, cli.full)?;
    if let Some(dir) = &cli.out {
        cfg.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.ic = InitialCondition::Random { seed };
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn Error>> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load_config(&cli, config)?;
            let summary = sim::run(&cfg)?;
            let last = summary.records.last();
            println!(
                "completed {} steps to t = {}; E_lyap = {}",
                summary.steps,
                summary.final_time,
                last.map_or(f64::NAN, |r| r.e_lyap),
            );
            println!("wrote {}", summary.out_dir.join("diagnostics.csv").display());
        }
        Command::Validate { config, levels } => {
            let cfg = load_config(&cli, config)?;
            let range = parse_levels(levels)?;
            let rows = sim::run_validation(&cfg, range)?;
            println!("level        h       dt    dofs   u_linf_l2     u_l2_l2   mu_linf_l2     mu_l2_l2");
            let mut prev: Option<&sim::LevelRow> = None;
            for r in &rows {
                let fmt_opt =
                    |v: Option<f64>| v.map_or("-".repeat(12), |x| format!("{x:12.4e}"));
                println!(
                    "{:>5} {:8.4} {:8.4} {:>7} {:12.4e} {:12.4e} {} {}",
                    r.level,
                    r.h,
                    r.dt,
                    r.dofs,
                    r.u_linf_l2,
                    r.u_l2_l2,
                    fmt_opt(r.mu_linf_l2),
                    fmt_opt(r.mu_l2_l2),
                );
                if let Some(p) = prev {
                    let rate = |a: f64, b: f64| (a / b).log2();
                    print!(
                        "      rates: u {:4.2} / {:4.2}",
                        rate(p.u_linf_l2, r.u_linf_l2),
                        rate(p.u_l2_l2, r.u_l2_l2)
                    );
                    if let (Some(pm), Some(cm), Some(pl), Some(cl)) =
                        (p.mu_linf_l2, r.mu_linf_l2, p.mu_l2_l2, r.mu_l2_l2)
                    {
                        print!(", mu {:4.2} / {:4.2}", rate(pm, cm), rate(pl, cl));
                    }
                    println!();
                }
                prev = Some(r);
            }
            println!("wrote {}", cfg.out_dir.join("convergence.csv").display());
        }
        Command::Sweep { config, beta } => {
            let cfg = load_config(&cli, config)?;
            let betas = parse_betas(beta)?;
            let outcomes = sim::run_beta_sweep(&cfg, &betas)?;
            let mut failures = 0;
            for o in &outcomes {
                match &o.status {
                    SweepStatus::Completed { final_time } => println!(
                        "beta_s = {}: completed to t = {final_time}, peak energy {}",
                        o.beta, o.peak_energy
                    ),
                    SweepStatus::Diverged { t } => {
                        println!("beta_s = {}: diverged at t = {t}", o.beta)
                    }
                    SweepStatus::Failed { reason } => {
                        failures += 1;
                        println!("beta_s = {}: failed ({reason})", o.beta)
                    }
                }
            }
            println!("wrote {}", cfg.out_dir.join("sweep_summary.csv").display());
            if failures > 0 {
                return Err(format!("{failures} sweep run(s) failed").into());
            }
        }
    }
    Ok(())
}

fn parse_levels(s: &str) -> Result<std::ops::RangeInclusive<u32>, Box<dyn Error>> {
    let (a, b) = s
        .split_once("..")
        .ok_or("levels must look like a..b (inclusive)")?;
    let a: u32 = a.trim().parse().map_err(|_| "bad start level")?;
    let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| "bad end level")?;
    if a > b {
        return Err("empty level range".into());
    }
    Ok(a..=b)
}

fn parse_betas(s: &str) -> Result<Vec<f64>, Box<dyn Error>> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse()).collect();
    let vals = vals.map_err(|_| "beta list must be comma-separated numbers")?;
    if vals.is_empty() {
        return Err("beta list is empty".into());
    }
    Ok(vals)
}
