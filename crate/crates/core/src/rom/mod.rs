//! Projection-based reduced-order models with optional hyper-reduction.
//!
//! The state is approximated as `u ≈ u_ref + Φ y`. Each backward-Euler step
//! is solved either by Galerkin projection (Newton on the `k × k` system) or
//! by least-squares Petrov-Galerkin (Gauss-Newton on the residual). Schemes
//! are registered by name in a [`ProjectionRegistry`].

mod galerkin;
mod lspg;
mod system;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

pub use galerkin::Galerkin;
pub use lspg::Lspg;
pub use system::{RomSystem, SampledRhs};

use crate::error::{Error, Result};
use crate::model::StencilModel;
use crate::sampling::SampleSet;
use crate::snapshots::{PodBasis, SnapshotKind, SnapshotMatrix};

/// Nonlinear solver limits shared by both schemes.
pub const UPDATE_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 25;
/// Consecutive growing updates that count as divergence.
pub const DIVERGENCE_STREAK: usize = 5;
/// Updates below `STAGNATION_FLOOR · (1 + ‖y‖)` are roundoff noise and never
/// count toward the divergence streak.
pub const STAGNATION_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperReduction {
    None,
    GappyPod,
    Collocation,
}

impl HyperReduction {
    pub fn as_str(&self) -> &'static str {
        match self {
            HyperReduction::None => "none",
            HyperReduction::GappyPod => "gappy_pod",
            HyperReduction::Collocation => "collocation",
        }
    }
}

impl std::str::FromStr for HyperReduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(HyperReduction::None),
            "gappy_pod" | "gappy" => Ok(HyperReduction::GappyPod),
            "collocation" => Ok(HyperReduction::Collocation),
            other => Err(Error::InvalidArgument(format!(
                "unknown hyper-reduction '{other}' (expected none, gappy_pod or collocation)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RomConfig {
    /// State basis `Φ` and reference state.
    pub basis: PodBasis,
    /// Registered scheme name, `"galerkin"` or `"lspg"`.
    pub projection: String,
    pub hyper: HyperReduction,
    /// Basis used by gappy POD: `Φ_f` for Galerkin, `Φ_r` for LSPG.
    pub nonlinear_basis: Option<PodBasis>,
    pub samples: Option<SampleSet>,
    pub dt: f64,
    pub n_steps: usize,
    /// Full initial state; projected onto the basis.
    pub initial_state: DVector<f64>,
}

impl RomConfig {
    pub fn validate(&self, model_dim: usize) -> Result<()> {
        let n = self.basis.modes.nrows();
        if n != model_dim || self.initial_state.len() != n {
            return Err(Error::Dimension(format!(
                "model has {model_dim} rows, basis {n}, initial state {}",
                self.initial_state.len()
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if self.hyper == HyperReduction::None {
            return Ok(());
        }
        let samples = self.samples.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("{} requires a sample set", self.hyper.as_str()))
        })?;
        if samples.full_dim() != n {
            return Err(Error::Dimension(format!(
                "sample set indexes {} rows, basis has {n}",
                samples.full_dim()
            )));
        }
        if self.hyper == HyperReduction::GappyPod {
            let nl = self.nonlinear_basis.as_ref().ok_or_else(|| {
                Error::InvalidArgument("gappy_pod requires a nonlinear basis".into())
            })?;
            if nl.modes.nrows() != n {
                return Err(Error::Dimension(format!(
                    "nonlinear basis has {} rows, state basis {n}",
                    nl.modes.nrows()
                )));
            }
            if samples.len() < nl.rank() {
                return Err(Error::InvalidArgument(format!(
                    "{} samples cannot determine {} nonlinear modes",
                    samples.len(),
                    nl.rank()
                )));
            }
        }
        Ok(())
    }

    pub fn initial_coordinates(&self) -> DVector<f64> {
        self.basis.project(&self.initial_state)
    }
}

/// Result of one implicit step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub y: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub last_update_norm: f64,
}

pub trait ProjectionScheme: Send + Sync {
    fn name(&self) -> &'static str;

    /// Advances the reduced coordinates by one backward-Euler step.
    fn step(
        &self,
        system: &RomSystem<'_>,
        y_prev: &DVector<f64>,
        step: usize,
    ) -> Result<StepOutcome>;
}

#[derive(Clone)]
pub struct ProjectionRegistry {
    schemes: BTreeMap<&'static str, Arc<dyn ProjectionScheme>>,
}

impl ProjectionRegistry {
    pub fn empty() -> Self {
        Self {
            schemes: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, scheme: Arc<dyn ProjectionScheme>) {
        self.schemes.insert(scheme.name(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ProjectionScheme>> {
        self.schemes.get(name).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown projection '{name}' (available: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.schemes.keys().copied().collect()
    }
}

impl Default for ProjectionRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Galerkin));
        r.register(Arc::new(Lspg));
        r
    }
}

#[derive(Debug, Clone)]
pub struct RomTrajectory {
    /// Reduced coordinates, `k × (n_steps + 1)`.
    pub coordinates: DMatrix<f64>,
    /// Nonlinear iterations per step.
    pub iterations: Vec<usize>,
    /// Steps that hit the iteration cap without meeting the update tolerance.
    pub unconverged_steps: usize,
    pub wall_seconds: f64,
    /// Rows evaluated per residual evaluation and the sample-mesh size.
    pub evaluated_rows: usize,
    pub mesh_size: usize,
}

impl RomTrajectory {
    /// Full states `u_ref + Φ y` as a snapshot matrix.
    pub fn reconstruct(&self, basis: &PodBasis, dt: f64) -> Result<SnapshotMatrix> {
        let mut states = &basis.modes * &self.coordinates;
        for mut c in states.column_iter_mut() {
            c += &basis.u_ref;
        }
        SnapshotMatrix::new(states, SnapshotKind::State, dt)
    }
}

/// Runs the scheme named in `cfg.projection` from the default registry.
pub fn run_rom(model: &dyn StencilModel, cfg: &RomConfig) -> Result<RomTrajectory> {
    let scheme = ProjectionRegistry::default().get(&cfg.projection)?;
    run_rom_with(model, cfg, scheme.as_ref())
}

pub fn run_rom_with(
    model: &dyn StencilModel,
    cfg: &RomConfig,
    scheme: &dyn ProjectionScheme,
) -> Result<RomTrajectory> {
    let system = RomSystem::new(model, cfg)?;
    let k = system.reduced_dim();
    let start = Instant::now();
    let mut coordinates = DMatrix::zeros(k, cfg.n_steps + 1);
    let mut y = cfg.initial_coordinates();
    coordinates.set_column(0, &y);
    let mut iterations = Vec::with_capacity(cfg.n_steps);
    let mut unconverged_steps = 0;
    for step in 1..=cfg.n_steps {
        let out = scheme.step(&system, &y, step)?;
        iterations.push(out.iterations);
        if !out.converged {
            unconverged_steps += 1;
        }
        y = out.y;
        coordinates.set_column(step, &y);
    }
    Ok(RomTrajectory {
        coordinates,
        iterations,
        unconverged_steps,
        wall_seconds: start.elapsed().as_secs_f64(),
        evaluated_rows: system.evaluated_rows().len(),
        mesh_size: system.sample_mesh().len(),
    })
}

/// Shared iteration loop: `solve` returns the update for the current iterate.
pub(crate) fn iterate(
    y_prev: &DVector<f64>,
    step: usize,
    mut solve: impl FnMut(&DVector<f64>) -> Result<DVector<f64>>,
) -> Result<StepOutcome> {
    let mut v = y_prev.clone();
    let mut prev_norm = f64::INFINITY;
    let mut streak = 0;
    let mut last = f64::NAN;
    for it in 1..=MAX_ITERATIONS {
        let delta = solve(&v)?;
        let norm = delta.norm();
        v += &delta;
        last = norm;
        if !norm.is_finite() {
            return Err(Error::Diverged {
                step,
                update_norm: norm,
            });
        }
        system::check_finite(&v, step, norm)?;
        if norm <= UPDATE_TOL {
            return Ok(StepOutcome {
                y: v,
                iterations: it,
                converged: true,
                last_update_norm: norm,
            });
        }
        if norm > prev_norm && norm > STAGNATION_FLOOR * (1.0 + v.norm()) {
            streak += 1;
            if streak >= DIVERGENCE_STREAK {
                return Err(Error::Diverged {
                    step,
                    update_norm: norm,
                });
            }
        } else {
            streak = 0;
        }
        prev_norm = norm;
    }
    Ok(StepOutcome {
        y: v,
        iterations: MAX_ITERATIONS,
        converged: false,
        last_update_norm: last,
    })
}

/// `max_n ‖u^n − ũ^n‖ / max_n ‖u^n‖` over `n = 1..`, skipping the initial column.
pub fn max_in_time_relative_error(reference: &DMatrix<f64>, approx: &DMatrix<f64>) -> Result<f64> {
    if reference.shape() != approx.shape() {
        return Err(Error::Dimension(format!(
            "reference is {:?}, approximation {:?}",
            reference.shape(),
            approx.shape()
        )));
    }
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for n in 1..reference.ncols() {
        let r = reference.column(n);
        let e = (r - approx.column(n)).norm();
        if e.is_nan() {
            return Ok(f64::INFINITY);
        }
        err = err.max(e);
        scale = scale.max(r.norm());
    }
    Ok(err / scale)
}
