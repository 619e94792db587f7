use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use copyreg::verify::{certificate_suite, protection_audit, DEFAULT_EPS1};
use copyreg::DenseVector;
use copyreg_harness::data::generate_dataset;
use copyreg_harness::solution::{read_solution, write_solution};
use copyreg_harness::sweep::{cell_seed, hyperparameters, run_sweep, solve_instance};
use copyreg_harness::{ExperimentConfig, ModeChoice};

#[derive(Parser)]
#[command(
    name = "copyreg",
    version,
    about = "Copyright-regularized softmax regression experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (CSV for `sweep`, solution vector for `solve`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    d: Option<usize>,
    /// One value, or a comma-separated list for `sweep`.
    #[arg(long, global = true)]
    n1: Option<String>,
    /// One value, or a comma-separated list for `sweep`.
    #[arg(long = "gamma-c", global = true)]
    gamma_c: Option<String>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `exact` or `approx`.
    #[arg(long, global = true)]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance (first n1 and gamma_c of the config) and print a summary.
    Solve,
    /// Run the configured (gamma_c, n1) sweep and write the CSV.
    Sweep,
    /// Protection audit of a saved solution.
    Audit {
        #[arg(long)]
        solution: PathBuf,
    },
    /// Certificate suite at a saved solution, or at the origin.
    Verify {
        #[arg(long)]
        solution: Option<PathBuf>,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::from_file(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    let mut set = |key: &str, value: Option<String>| -> Result<()> {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
        Ok(())
    };
    set("seed", c.seed.map(|v| v.to_string()))?;
    set("n", c.n.map(|v| v.to_string()))?;
    set("d", c.d.map(|v| v.to_string()))?;
    set("n1", c.n1.clone())?;
    set("gamma_c", c.gamma_c.clone())?;
    set("workers", c.workers.map(|v| v.to_string()))?;
    set("mode", c.mode.clone())?;
    if let Some(out) = &c.out {
        cfg.output_path = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The single instance addressed by `solve`, `audit` and `verify`.
fn single_instance(cfg: &ExperimentConfig) -> Result<(copyreg::Dataset, f64, u64)> {
    let n1 = cfg.n1_values[0];
    let gamma_c = cfg.gamma_c_values[0];
    let seed = cell_seed(cfg.seed, n1, 0);
    Ok((generate_dataset(cfg.n, cfg.d, n1, seed)?, gamma_c, seed))
}

fn check_dim(x: &DenseVector, d: usize) -> Result<()> {
    if x.len() != d {
        bail!("solution has d = {} but the config has d = {d}", x.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Solve => {
            let (ds, gamma_c, seed) = single_instance(&cfg)?;
            let report = solve_instance(&cfg, &ds, gamma_c, seed)?;
            let ev = copyreg::kernel::eval_kernel(&ds, report.final_x())?;
            let mode = match cfg.mode {
                ModeChoice::Exact => "exact",
                ModeChoice::Approx => "approx",
            };
            println!(
                "mode={mode} n={} d={} n1={} gamma_c={gamma_c} seed={seed}",
                ds.n(),
                ds.d(),
                ds.n1()
            );
            println!(
                "converged={} iters={} wall_time={:?}",
                report.converged, report.iters_used, report.wall_time
            );
            println!(
                "final_grad_norm={:e} stop_threshold={:e}",
                report.final_grad_norm(),
                report.stop_threshold
            );
            println!(
                "loss={:e} ell1={:e} ell2={:e}",
                report.losses.last().unwrap(),
                ev.ell1,
                ev.ell2
            );
            if let Some(reason) = &report.abort_reason {
                println!("abort_reason={reason}");
            }
            if let Some(out) = &cli.common.out {
                write_solution(out, report.final_x())?;
                println!("solution written to {}", out.display());
            }
        }
        Command::Sweep => {
            let rows = run_sweep(&cfg)?;
            let converged = rows.iter().filter(|r| r.converged).count();
            println!(
                "{} rows ({converged} converged) written to {}",
                rows.len(),
                cfg.output_path.display()
            );
        }
        Command::Audit { solution } => {
            let (ds, gamma_c, _) = single_instance(&cfg)?;
            let x = read_solution(&solution)?;
            check_dim(&x, ds.d())?;
            let hp = hyperparameters(&cfg, gamma_c)?;
            let a = protection_audit(&ds, &hp, &x)?;
            println!(
                "ell1={:e} ell2={:e} n1={} n2={}",
                a.ell1, a.ell2, a.n1, a.n2
            );
            println!(
                "ell1_per_row={:e} ell2_per_row={:e}",
                a.ell1_per_row, a.ell2_per_row
            );
            println!("tau_c={:e} eps2={:e}", a.tau_c, a.eps2);
            println!(
                "eps1={:e} barrier_near_optimal={} (tolerance {DEFAULT_EPS1})",
                a.eps1,
                a.barrier_near_optimal(DEFAULT_EPS1)
            );
            println!("satisfied={}", a.satisfied);
        }
        Command::Verify { solution } => {
            let (ds, gamma_c, _) = single_instance(&cfg)?;
            let x = match solution {
                Some(path) => read_solution(&path)?,
                None => DenseVector::zeros(ds.d()),
            };
            check_dim(&x, ds.d())?;
            let hp = hyperparameters(&cfg, gamma_c)?;
            print!("{}", certificate_suite(&ds, &hp, &x)?);
        }
    }
    Ok(())
}
