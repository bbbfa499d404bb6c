//! Sample-count sweeps: one hyper-reduced ROM per (algorithm, n) pair.

use std::path::PathBuf;

use hyperrom::burgers::nonlinear_snapshots;
use hyperrom::hyperreduction::ErrorAnalyzer;
use hyperrom::snapshots::{format_f64, PodBasis, SnapshotMatrix};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::pipeline::{build_bases, evaluate_rom, rom_config, select, solve};
use crate::CliError;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_HEADER: &str =
    "algorithm,n_samples,e_max,oblique_err_mean,orth_err_mean,wall_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: String,
    pub n_samples: usize,
    /// Infinite when the ROM failed numerically.
    pub e_max: f64,
    /// Mean of `‖f − f̃‖ / ‖f‖` over the logged right-hand-side snapshots.
    pub oblique_err_mean: f64,
    /// Mean of `‖(I − QQᵀ) f‖ / ‖f‖` over the same snapshots.
    pub orth_err_mean: f64,
    pub wall_seconds: f64,
}

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.algorithm,
            self.n_samples,
            format_f64(self.e_max),
            format_f64(self.oblique_err_mean),
            format_f64(self.orth_err_mean),
            format_f64(self.wall_seconds)
        )
    }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

struct Shared {
    reference: SnapshotMatrix,
    basis: PodBasis,
    nonlinear: PodBasis,
    /// Right-hand-side snapshots used for the projection-error columns.
    logged: Vec<nalgebra::DVector<f64>>,
}

fn mean_relative_errors(
    nonlinear: &PodBasis,
    samples: &hyperrom::sampling::SampleSet,
    logged: &[nalgebra::DVector<f64>],
) -> (f64, f64) {
    let Ok(analyzer) = ErrorAnalyzer::new(&nonlinear.modes, samples) else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let (mut oblique, mut orth, mut count) = (0.0, 0.0, 0usize);
    for f in logged {
        let norm = f.norm();
        if norm == 0.0 {
            continue;
        }
        match analyzer.report(f) {
            Ok(r) => {
                oblique += r.oblique_error / norm;
                orth += r.orthogonal_error / norm;
                count += 1;
            }
            Err(_) => return (f64::INFINITY, f64::INFINITY),
        }
    }
    if count == 0 {
        return (0.0, 0.0);
    }
    (oblique / count as f64, orth / count as f64)
}

fn run_one(
    cfg: &ExperimentConfig,
    shared: &Shared,
    algorithm: &str,
    n: usize,
) -> Result<SweepRow, CliError> {
    let samples = select(&shared.nonlinear, algorithm, n)?;
    let (oblique_err_mean, orth_err_mean) =
        mean_relative_errors(&shared.nonlinear, &samples, &shared.logged);
    let rc = rom_config(cfg, &shared.basis, Some(&shared.nonlinear), Some(&samples));
    let (e_max, wall) = match evaluate_rom(cfg, &rc, &shared.reference) {
        Ok((out, _, e)) => (e, out.wall_seconds),
        Err(e) if e.is_numeric() => (f64::INFINITY, 0.0),
        Err(e) => {
            return Err(CliError::Stage {
                stage: "sweep",
                source: e,
            })
        }
    };
    Ok(SweepRow {
        algorithm: algorithm.to_string(),
        n_samples: n,
        e_max,
        oblique_err_mean,
        orth_err_mean,
        wall_seconds: if cfg.io.timing { wall } else { 0.0 },
    })
}

/// Solves the FOM, builds both bases and runs every (algorithm, n) pair of the sweep.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<SweepRow>, CliError> {
    let fom = solve(cfg)?;
    let (basis, nonlinear) = build_bases(cfg, &fom.trajectory)?;
    let (lo, hi) = (*cfg.sample.sweep.start(), *cfg.sample.sweep.end());
    let (p, rows) = (nonlinear.rank(), nonlinear.dim());
    if lo < p || hi > rows {
        return Err(CliError::Config(format!(
            "sweep range {lo}..={hi} must lie within [{p}, {rows}]"
        )));
    }
    let f =
        nonlinear_snapshots(&cfg.fom.model(), &fom.trajectory).map_err(CliError::stage("sweep"))?;
    let logged = (0..f.ncols())
        .step_by(cfg.sample.log_stride)
        .map(|j| f.column(j))
        .collect();
    let shared = Shared {
        reference: fom.trajectory,
        basis,
        nonlinear,
        logged,
    };

    let tasks: Vec<(&str, usize)> = cfg
        .sample
        .sweep_algorithms
        .iter()
        .flat_map(|a| cfg.sample.sweep.clone().map(move |n| (a.as_str(), n)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let mut results = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(a, n)| run_one(cfg, &shared, a, n))
            .collect::<Result<Vec<_>, _>>()
    })?;
    results.sort_by(|a, b| (&a.algorithm, a.n_samples).cmp(&(&b.algorithm, b.n_samples)));
    Ok(results)
}

/// Runs the sweep and writes `sweep.csv`.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    jobs: usize,
) -> Result<(PathBuf, Vec<SweepRow>), CliError> {
    let rows = run_sweep(cfg, jobs)?;
    std::fs::create_dir_all(&cfg.io.out).map_err(|source| CliError::Io {
        path: cfg.io.out.clone(),
        source,
    })?;
    let path = cfg.io.out.join(SWEEP_FILE);
    std::fs::write(&path, to_csv(&rows)).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok((path, rows))
}
