//! One-dimensional inviscid Burgers equation on a periodic grid.
//!
//! The semi-discretization is `du/dt = −(1/Δx) (D u) ⊙ u` with `D` the
//! periodic backward difference, `(Du)_i = u_i − u_{i−1}` and `u_{−1} ≡ u_{N−1}`.
//! Time stepping is backward Euler; each step is solved by Newton iteration
//! against the analytic Jacobian, which is lower bidiagonal with one periodic
//! corner entry and is solved in O(N).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::StencilModel;
use crate::snapshots::{SnapshotKind, SnapshotMatrix};

pub const NEWTON_MAX_ITERS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `u(0, x) = 1 + ½ (sin(2πx − π/2) + 1)`
    Sine,
    Constant(f64),
    Custom(DVector<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersConfig {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub domain_length: f64,
    pub init: InitialCondition,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            dx: 0.002,
            dt: 0.001,
            n_steps: 500,
            domain_length: 2.0,
            init: InitialCondition::Sine,
        }
    }
}

impl BurgersConfig {
    /// Uniform grid of `n` cells on `[0, domain_length]`.
    pub fn with_grid(n: usize, domain_length: f64, dt: f64, n_steps: usize) -> Self {
        Self {
            n,
            dx: domain_length / n as f64,
            dt,
            n_steps,
            domain_length,
            init: InitialCondition::Sine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one point".into(),
            ));
        }
        if !(self.dx > 0.0) || !(self.domain_length > 0.0) {
            return Err(Error::InvalidArgument(
                "dx and domain length must be positive".into(),
            ));
        }
        let span = self.n as f64 * self.dx;
        if (span - self.domain_length).abs() > 1e-9 * self.domain_length {
            return Err(Error::InvalidArgument(format!(
                "n * dx = {span} does not match domain length {}",
                self.domain_length
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        if let InitialCondition::Custom(u) = &self.init {
            if u.len() != self.n {
                return Err(Error::Dimension(format!(
                    "custom initial condition has length {}, grid has {}",
                    u.len(),
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// Grid coordinates `x_i = i Δx`, `i = 1..=N`.
    pub fn grid(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| (i + 1) as f64 * self.dx)
    }

    pub fn initial_state(&self) -> DVector<f64> {
        match &self.init {
            InitialCondition::Sine => self
                .grid()
                .map(|x| 1.0 + 0.5 * ((2.0 * PI * x - PI / 2.0).sin() + 1.0)),
            InitialCondition::Constant(c) => DVector::from_element(self.n, *c),
            InitialCondition::Custom(u) => u.clone(),
        }
    }

    pub fn model(&self) -> Burgers {
        Burgers {
            n: self.n,
            dx: self.dx,
        }
    }
}

/// The semi-discrete Burgers operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Burgers {
    pub n: usize,
    pub dx: f64,
}

impl Burgers {
    #[inline]
    fn left(&self, i: usize) -> usize {
        if i == 0 {
            self.n - 1
        } else {
            i - 1
        }
    }

    /// `(Du)_i = u_i − u_{i−1}` with periodic wrap.
    pub fn backward_difference(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| u[i] - u[self.left(i)])
    }
}

impl StencilModel for Burgers {
    fn dim(&self) -> usize {
        self.n
    }

    fn stencil(&self, i: usize) -> Vec<usize> {
        vec![i, self.left(i)]
    }

    #[inline]
    fn rhs_entry(&self, _i: usize, values: &[f64]) -> f64 {
        let (ui, ul) = (values[0], values[1]);
        -(ui - ul) * ui / self.dx
    }

    #[inline]
    fn rhs_entry_gradient(&self, _i: usize, values: &[f64], grad: &mut [f64]) {
        let (ui, ul) = (values[0], values[1]);
        grad[0] = -(2.0 * ui - ul) / self.dx;
        grad[1] = ui / self.dx;
    }

    fn rhs(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            let (ui, ul) = (u[i], u[self.left(i)]);
            -(ui - ul) * ui / self.dx
        })
    }
}

/// `−(1/Δx) (Du) ⊙ u`.
pub fn rhs(u: &DVector<f64>, cfg: &BurgersConfig) -> DVector<f64> {
    cfg.model().rhs(u)
}

/// Backward-Euler residual `(u_new − u_old) − Δt f(u_new)`.
pub fn be_residual(
    u_new: &DVector<f64>,
    u_old: &DVector<f64>,
    cfg: &BurgersConfig,
) -> DVector<f64> {
    u_new - u_old - rhs(u_new, cfg) * cfg.dt
}

/// Matrix with nonzeros on the diagonal and at `(i, i−1)`, with
/// `(0, N−1)` as the wrapped sub-diagonal entry of row 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicBidiagonal {
    pub diag: DVector<f64>,
    pub sub: DVector<f64>,
}

impl CyclicBidiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(n, |i, _| {
            let l = if i == 0 { n - 1 } else { i - 1 };
            self.diag[i] * x[i] + self.sub[i] * x[l]
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let l = if i == 0 { n - 1 } else { i - 1 };
            m[(i, i)] += self.diag[i];
            m[(i, l)] += self.sub[i];
        }
        m
    }

    /// Solves `A x = b` by forward substitution with the wrapped unknown
    /// `x_{N−1}` carried symbolically, then closing the cycle.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        // x_i = a_i + c_i x_{N-1}
        let mut a = DVector::zeros(n);
        let mut c = DVector::zeros(n);
        for i in 0..n {
            let d = self.diag[i];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular);
            }
            if i == 0 {
                a[0] = b[0] / d;
                c[0] = -self.sub[0] / d;
            } else {
                a[i] = (b[i] - self.sub[i] * a[i - 1]) / d;
                c[i] = -self.sub[i] * c[i - 1] / d;
            }
        }
        let denom = 1.0 - c[n - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Singular);
        }
        let last = a[n - 1] / denom;
        Ok(DVector::from_fn(n, |i, _| a[i] + c[i] * last))
    }
}

/// `I − Δt ∂f/∂u` at `u`.
pub fn be_jacobian(u: &DVector<f64>, cfg: &BurgersConfig) -> CyclicBidiagonal {
    let n = u.len();
    let ratio = cfg.dt / cfg.dx;
    let mut diag = DVector::zeros(n);
    let mut sub = DVector::zeros(n);
    for i in 0..n {
        let l = if i == 0 { n - 1 } else { i - 1 };
        diag[i] = 1.0 + ratio * (2.0 * u[i] - u[l]);
        sub[i] = -ratio * u[i];
    }
    if n == 1 {
        // the single entry is its own left neighbor
        diag[0] += sub[0];
        sub[0] = 0.0;
    }
    CyclicBidiagonal { diag, sub }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FomState {
    pub u: DVector<f64>,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct FomSolution {
    /// `n_steps + 1` state columns, the initial condition first.
    pub trajectory: SnapshotMatrix,
    pub final_state: FomState,
    /// Residual norms of every Newton iterate, per time step (initial guess first).
    pub newton_residuals: Vec<Vec<f64>>,
}

/// Residual tolerance used by the FOM Newton loop.
pub fn newton_tolerance(n: usize) -> f64 {
    1e-10 * (n as f64).sqrt()
}

/// One backward-Euler step from `u_old`, starting Newton at `u_old`.
pub fn be_step(
    u_old: &DVector<f64>,
    cfg: &BurgersConfig,
    step: usize,
) -> Result<(DVector<f64>, Vec<f64>)> {
    let tol = newton_tolerance(u_old.len());
    let mut u = u_old.clone();
    let mut history = Vec::with_capacity(4);
    let mut r = be_residual(&u, u_old, cfg);
    let mut norm = r.norm();
    history.push(norm);
    for _ in 0..NEWTON_MAX_ITERS {
        if norm <= tol {
            return Ok((u, history));
        }
        let delta = be_jacobian(&u, cfg)
            .solve(&r)
            .map_err(|_| Error::NewtonNotConverged {
                step,
                residual: norm,
            })?;
        u -= delta;
        r = be_residual(&u, u_old, cfg);
        norm = r.norm();
        history.push(norm);
        if !norm.is_finite() {
            break;
        }
    }
    if norm <= tol {
        Ok((u, history))
    } else {
        Err(Error::NewtonNotConverged {
            step,
            residual: norm,
        })
    }
}

/// Integrates the full-order model over `n_steps` backward-Euler steps.
pub fn solve_fom(cfg: &BurgersConfig) -> Result<FomSolution> {
    cfg.validate()?;
    let mut u = cfg.initial_state();
    let mut columns = Vec::with_capacity(cfg.n_steps + 1);
    let mut residuals = Vec::with_capacity(cfg.n_steps);
    columns.push(u.clone());
    for step in 1..=cfg.n_steps {
        let (next, history) = be_step(&u, cfg, step)?;
        u = next;
        columns.push(u.clone());
        residuals.push(history);
    }
    let trajectory = SnapshotMatrix::from_columns(&columns, SnapshotKind::State, cfg.dt)?
        .with_description(format!(
            "burgers fom n={} dx={} dt={} steps={}",
            cfg.n, cfg.dx, cfg.dt, cfg.n_steps
        ));
    Ok(FomSolution {
        trajectory,
        final_state: FomState {
            u,
            t: cfg.n_steps as f64 * cfg.dt,
        },
        newton_residuals: residuals,
    })
}

/// `f(u^n)` for every state column.
pub fn nonlinear_snapshots(
    model: &dyn StencilModel,
    states: &SnapshotMatrix,
) -> Result<SnapshotMatrix> {
    let cols: Vec<DVector<f64>> = (0..states.ncols())
        .map(|j| model.rhs(&states.column(j)))
        .collect();
    Ok(
        SnapshotMatrix::from_columns(&cols, SnapshotKind::NonlinearTerm, states.dt)?
            .with_description("right-hand side snapshots"),
    )
}

/// Grid coordinates whose backward difference magnitude is within
/// `rel_tol` of the largest one, in increasing order.
pub fn shock_locations(u: &DVector<f64>, cfg: &BurgersConfig, rel_tol: f64) -> Vec<f64> {
    let du = cfg.model().backward_difference(u).map(f64::abs);
    let peak = du.max();
    let x = cfg.grid();
    (0..u.len())
        .filter(|&i| du[i] >= peak * (1.0 - rel_tol))
        .map(|i| x[i])
        .collect()
}
