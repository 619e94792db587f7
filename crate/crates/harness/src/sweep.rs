//! `(γ_c, n₁)` sweeps and their CSV form.

use std::io::Write;
use std::path::Path;

use copyreg::solver::solve;
use copyreg::{Dataset, DenseVector, Hyperparameters, SolveReport};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::data::generate_dataset;
use crate::error::{HarnessError, Result};
use crate::metrics::{metrics, random_baseline_mean, SplitMetrics};

pub const CSV_HEADER: [&str; 14] = [
    "gamma_c",
    "n1",
    "seed",
    "mae_copyright",
    "mae_other",
    "mse_copyright",
    "mse_other",
    "tau_mae",
    "tau_mse",
    "baseline_mse_copyright",
    "ell1",
    "ell2",
    "iters",
    "converged",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub gamma_c: f64,
    pub n1: usize,
    /// Seed of the row's dataset.
    pub seed: u64,
    pub mae_copyright: f64,
    pub mae_other: f64,
    pub mse_copyright: f64,
    pub mse_other: f64,
    pub tau_mae: f64,
    pub tau_mse: f64,
    pub baseline_mse_copyright: f64,
    pub ell1: f64,
    pub ell2: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Everything computed for one sweep cell.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: MetricsRow,
    pub baseline: SplitMetrics,
    pub x: DenseVector,
    pub abort_reason: Option<String>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dataset seed for a cell. γ_c is deliberately not mixed in, so every γ_c
/// at a given `(n₁, repetition)` sees the same data.
pub fn cell_seed(base: u64, n1: usize, repetition: usize) -> u64 {
    mix(mix(base ^ (n1 as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93)) ^ repetition as u64)
}

pub fn hyperparameters(cfg: &ExperimentConfig, gamma_c: f64) -> Result<Hyperparameters> {
    Ok(Hyperparameters::uniform(gamma_c, cfg.n, cfg.reg_weight)?)
}

/// Newton from the origin on one dataset.
pub fn solve_instance(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    gamma_c: f64,
    seed: u64,
) -> Result<SolveReport> {
    let hp = hyperparameters(cfg, gamma_c)?;
    let x0 = DenseVector::zeros(ds.d());
    Ok(solve(
        ds,
        &hp,
        &x0,
        &cfg.solver,
        cfg.solve_mode(mix(seed ^ 0xA5A5)),
    )?)
}

fn run_cell(
    cfg: &ExperimentConfig,
    gamma_c: f64,
    n1: usize,
    repetition: usize,
) -> Result<CellOutcome> {
    let seed = cell_seed(cfg.seed, n1, repetition);
    let ds = generate_dataset(cfg.n, cfg.d, n1, seed)?;
    let report = solve_instance(cfg, &ds, gamma_c, seed)?;
    let x = report.final_x().clone();
    let ev = copyreg::kernel::eval_kernel(&ds, &x)?;
    let m = metrics(&ds, &x)?;
    let baseline = random_baseline_mean(&ds, mix(seed ^ 0x5EED), cfg.baseline_draws)?;
    Ok(CellOutcome {
        row: MetricsRow {
            gamma_c,
            n1,
            seed,
            mae_copyright: m.mae_copyright,
            mae_other: m.mae_other,
            mse_copyright: m.mse_copyright,
            mse_other: m.mse_other,
            tau_mae: m.tau_mae,
            tau_mse: m.tau_mse,
            baseline_mse_copyright: baseline.mse_copyright,
            ell1: ev.ell1,
            ell2: ev.ell2,
            iters: report.iters_used,
            converged: report.converged,
        },
        baseline,
        x,
        abort_reason: report.abort_reason,
    })
}

/// Runs every cell, `n₁`-major then γ_c then repetition, on up to
/// `cfg.workers` threads. Output order does not depend on scheduling.
pub fn run_cells(cfg: &ExperimentConfig) -> Result<Vec<CellOutcome>> {
    cfg.validate()?;
    let cells: Vec<(f64, usize, usize)> = cfg
        .n1_values
        .iter()
        .flat_map(|&n1| {
            cfg.gamma_c_values
                .iter()
                .flat_map(move |&g| (0..cfg.repetitions).map(move |r| (g, n1, r)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    pool.install(|| {
        cells
            .par_iter()
            .map(|&(g, n1, r)| run_cell(cfg, g, n1, r))
            .collect()
    })
}

/// Runs the sweep and writes the CSV to `cfg.output_path`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    let rows: Vec<MetricsRow> = run_cells(cfg)?.into_iter().map(|c| c.row).collect();
    write_csv(&cfg.output_path, &rows)?;
    Ok(rows)
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn record(row: &MetricsRow) -> [String; 14] {
    [
        real(row.gamma_c),
        row.n1.to_string(),
        row.seed.to_string(),
        real(row.mae_copyright),
        real(row.mae_other),
        real(row.mse_copyright),
        real(row.mse_other),
        real(row.tau_mae),
        real(row.tau_mse),
        real(row.baseline_mse_copyright),
        real(row.ell1),
        real(row.ell2),
        row.iters.to_string(),
        row.converged.to_string(),
    ]
}

pub fn csv_bytes(rows: &[MetricsRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| HarnessError::Io(e.error))?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| HarnessError::Parse(format!("column {}: {raw:?}", CSV_HEADER[i])))
}

pub fn parse_csv(bytes: &[u8]) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(MetricsRow {
            gamma_c: field(&rec, 0)?,
            n1: field(&rec, 1)?,
            seed: field(&rec, 2)?,
            mae_copyright: field(&rec, 3)?,
            mae_other: field(&rec, 4)?,
            mse_copyright: field(&rec, 5)?,
            mse_other: field(&rec, 6)?,
            tau_mae: field(&rec, 7)?,
            tau_mse: field(&rec, 8)?,
            baseline_mse_copyright: field(&rec, 9)?,
            ell1: field(&rec, 10)?,
            ell2: field(&rec, 11)?,
            iters: field(&rec, 12)?,
            converged: field(&rec, 13)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    parse_csv(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> MetricsRow {
        MetricsRow {
            gamma_c: 0.225,
            n1: 200,
            seed: u64::MAX,
            mae_copyright: v,
            mae_other: 1.0 / 3.0,
            mse_copyright: v * v,
            mse_other: 1e-300,
            tau_mae: v - 1.0 / 3.0,
            tau_mse: -0.0,
            baseline_mse_copyright: std::f64::consts::PI,
            ell1: 0.1 + 0.2,
            ell2: -5e-17,
            iters: 37,
            converged: false,
        }
    }

    #[test]
    fn header_and_round_trip() {
        let rows = vec![row(0.123_456_789_012_345_68), row(7.0e-9)];
        let bytes = csv_bytes(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with(
            "gamma_c,n1,seed,mae_copyright,mae_other,mse_copyright,mse_other,tau_mae,tau_mse,baseline_mse_copyright,ell1,ell2,iters,converged\n"
        ));
        assert_eq!(parse_csv(&bytes).unwrap(), rows);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(parse_csv(b"gamma_c,n1\n0.1,2\n").is_err());
    }

    #[test]
    fn seeds_ignore_gamma_but_not_split() {
        assert_ne!(cell_seed(7, 200, 0), cell_seed(7, 400, 0));
        assert_ne!(cell_seed(7, 200, 0), cell_seed(7, 200, 1));
        assert_eq!(cell_seed(7, 200, 0), cell_seed(7, 200, 0));
    }
}
