//! Individual stages and the artifact layout they share.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hyperrom::burgers::{nonlinear_snapshots, solve_fom, FomSolution};
use hyperrom::rom::{
    max_in_time_relative_error, run_rom, HyperReduction, RomConfig, RomTrajectory,
};
use hyperrom::sampling::{prefix_s_values, SampleSet, SelectorRegistry};
use hyperrom::snapshots::{
    compute_pod, format_f64, read_basis, read_matrix, sns_nonlinear_basis, write_basis,
    write_matrix, PodBasis, SnapshotMatrix, SubspaceMap, Truncation,
};
use nalgebra::DVector;

use crate::config::{ExperimentConfig, NonlinearSource, ReferenceState};
use crate::CliError;

pub const FOM_FILE: &str = "fom_trajectory.txt";
pub const BASIS_DIR: &str = "basis";
pub const NONLINEAR_BASIS_DIR: &str = "nl_basis";
pub const SAMPLES_FILE: &str = "samples.txt";
pub const S_VALUES_FILE: &str = "s_values.csv";
pub const ROM_FILE: &str = "rom_trajectory.txt";
pub const ROM_ERROR_FILE: &str = "rom_error.csv";
pub const ROM_ERROR_HEADER: &str = "algorithm,n_samples,e_max,wall_seconds";

fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.io.out.join(name)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Fails with the artifact path when an earlier stage has not produced it.
fn require(path: PathBuf) -> Result<PathBuf, CliError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::Io {
            path,
            source: std::io::ErrorKind::NotFound.into(),
        })
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn solve(cfg: &ExperimentConfig) -> Result<FomSolution, CliError> {
    solve_fom(&cfg.fom).map_err(CliError::stage("fom"))
}

/// Solves the full-order model and writes its trajectory.
pub fn cmd_fom(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let sol = solve(cfg)?;
    ensure_dir(&cfg.io.out)?;
    let path = out_path(cfg, FOM_FILE);
    write_matrix(&path, &sol.trajectory).map_err(CliError::stage("fom"))?;
    Ok(path)
}

/// State basis and hyper-reduction basis from a state trajectory.
pub fn build_bases(
    cfg: &ExperimentConfig,
    trajectory: &SnapshotMatrix,
) -> Result<(PodBasis, PodBasis), CliError> {
    let u_ref = match cfg.pod.reference {
        ReferenceState::Initial => trajectory.column(0),
        ReferenceState::Mean => trajectory.mean_column(),
        ReferenceState::Zero => DVector::zeros(trajectory.nrows()),
    };
    let basis =
        compute_pod(trajectory, &u_ref, cfg.pod.truncation).map_err(CliError::stage("pod"))?;
    let nonlinear = match cfg.pod.nonlinear_source {
        NonlinearSource::Sns => sns_nonlinear_basis(&basis, &SubspaceMap::Identity),
        NonlinearSource::NonlinearPod => {
            let f = nonlinear_snapshots(&cfg.fom.model(), trajectory)
                .map_err(CliError::stage("pod"))?;
            compute_pod(
                &f,
                &DVector::zeros(f.nrows()),
                Truncation::Count(cfg.pod.nonlinear_modes),
            )
        }
    }
    .map_err(CliError::stage("pod"))?;
    Ok((basis, nonlinear))
}

fn read_trajectory(
    cfg: &ExperimentConfig,
    stage: &'static str,
) -> Result<SnapshotMatrix, CliError> {
    read_matrix(require(out_path(cfg, FOM_FILE))?).map_err(CliError::stage(stage))
}

/// Computes both bases from the stored trajectory and writes them.
pub fn cmd_pod(cfg: &ExperimentConfig) -> Result<(PodBasis, PodBasis), CliError> {
    let trajectory = read_trajectory(cfg, "pod")?;
    let (basis, nonlinear) = build_bases(cfg, &trajectory)?;
    write_basis(out_path(cfg, BASIS_DIR), &basis).map_err(CliError::stage("pod"))?;
    write_basis(out_path(cfg, NONLINEAR_BASIS_DIR), &nonlinear).map_err(CliError::stage("pod"))?;
    Ok((basis, nonlinear))
}

pub fn select(modes: &PodBasis, algorithm: &str, n: usize) -> Result<SampleSet, CliError> {
    let registry = SelectorRegistry::default();
    let selector = registry
        .get(algorithm)
        .map_err(|e| CliError::Config(e.to_string()))?;
    selector
        .select(&modes.modes, n)
        .map_err(CliError::stage("sample"))
}

/// `n,s_value` for every prefix of the selection.
pub fn s_value_log(modes: &PodBasis, samples: &SampleSet) -> String {
    let mut out = String::from("n,s_value\n");
    for (j, s) in prefix_s_values(&modes.modes, samples).iter().enumerate() {
        let _ = writeln!(out, "{},{}", j + 1, format_f64(*s));
    }
    out
}

/// Selects sample rows from the stored hyper-reduction basis.
pub fn cmd_sample(cfg: &ExperimentConfig) -> Result<SampleSet, CliError> {
    let nonlinear = read_basis(require(out_path(cfg, NONLINEAR_BASIS_DIR))?)
        .map_err(CliError::stage("sample"))?;
    let samples = select(&nonlinear, &cfg.sample.algorithm, cfg.sample.n)?;
    samples
        .write(out_path(cfg, SAMPLES_FILE))
        .map_err(CliError::stage("sample"))?;
    write_text(
        &out_path(cfg, S_VALUES_FILE),
        &s_value_log(&nonlinear, &samples),
    )?;
    Ok(samples)
}

pub fn rom_config(
    cfg: &ExperimentConfig,
    basis: &PodBasis,
    nonlinear: Option<&PodBasis>,
    samples: Option<&SampleSet>,
) -> RomConfig {
    RomConfig {
        basis: basis.clone(),
        projection: cfg.rom.projection.clone(),
        hyper: cfg.rom.hyper,
        nonlinear_basis: nonlinear.cloned(),
        samples: samples.cloned(),
        dt: cfg.fom.dt,
        n_steps: cfg.fom.n_steps,
        initial_state: cfg.fom.initial_state(),
    }
}

/// ROM trajectory and its error against a reference trajectory.
pub fn evaluate_rom(
    cfg: &ExperimentConfig,
    rc: &RomConfig,
    reference: &SnapshotMatrix,
) -> Result<(RomTrajectory, SnapshotMatrix, f64), hyperrom::Error> {
    let out = run_rom(&cfg.fom.model(), rc)?;
    let states = out.reconstruct(&rc.basis, rc.dt)?;
    let e_max = max_in_time_relative_error(reference.data(), states.data())?;
    Ok((out, states, e_max))
}

/// Runs the ROM from stored artifacts; returns the error against the stored FOM.
pub fn cmd_rom(cfg: &ExperimentConfig) -> Result<f64, CliError> {
    let stage = CliError::stage;
    let basis = read_basis(require(out_path(cfg, BASIS_DIR))?).map_err(stage("rom"))?;
    let (nonlinear, samples) = match cfg.rom.hyper {
        HyperReduction::None => (None, None),
        HyperReduction::Collocation => (
            None,
            Some(SampleSet::read(require(out_path(cfg, SAMPLES_FILE))?).map_err(stage("rom"))?),
        ),
        HyperReduction::GappyPod => (
            Some(read_basis(require(out_path(cfg, NONLINEAR_BASIS_DIR))?).map_err(stage("rom"))?),
            Some(SampleSet::read(require(out_path(cfg, SAMPLES_FILE))?).map_err(stage("rom"))?),
        ),
    };
    let reference = read_trajectory(cfg, "rom")?;
    let rc = rom_config(cfg, &basis, nonlinear.as_ref(), samples.as_ref());
    let (out, states, e_max) = evaluate_rom(cfg, &rc, &reference).map_err(stage("rom"))?;
    write_matrix(out_path(cfg, ROM_FILE), &states).map_err(stage("rom"))?;
    let (algorithm, n) = match &samples {
        Some(s) => (s.algorithm.as_str(), s.len()),
        None => ("none", cfg.fom.n),
    };
    let wall = if cfg.io.timing { out.wall_seconds } else { 0.0 };
    let csv = format!(
        "{ROM_ERROR_HEADER}\n{algorithm},{n},{},{}\n",
        format_f64(e_max),
        format_f64(wall)
    );
    write_text(&out_path(cfg, ROM_ERROR_FILE), &csv)?;
    Ok(e_max)
}
