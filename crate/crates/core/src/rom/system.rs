use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::{HyperReduction, RomConfig};
use crate::error::{Error, Result};
use crate::hyperreduction::{GappyOperator, HyperMode};
use crate::linalg;
use crate::model::StencilModel;

/// Precomputed data for one evaluated residual row.
#[derive(Debug, Clone)]
struct RowData {
    row: usize,
    /// Basis rows at the stencil, `|stencil| × k`.
    phi_stencil: DMatrix<f64>,
    uref_stencil: Vec<f64>,
    /// Basis row at `row` itself.
    phi_row: DVector<f64>,
}

/// Everything the online phase needs, restricted to the sample mesh.
///
/// Only `rows` (all rows without hyper-reduction, otherwise the samples) are
/// ever evaluated, and only state entries on their stencils are formed.
pub struct RomSystem<'m> {
    model: &'m dyn StencilModel,
    rows: Vec<RowData>,
    mesh: Vec<usize>,
    k: usize,
    dt: f64,
    hyper: HyperReduction,
    /// `(ZᵀΦ_r)†` for gappy LSPG, `n_r × n`.
    residual_weights: Option<DMatrix<f64>>,
    /// Galerkin front matter mapping sampled `f` to reduced coordinates, `k × n`.
    galerkin_weights: DMatrix<f64>,
}

/// Values of `f` on the evaluated rows and their derivatives in `v`.
pub struct SampledRhs {
    pub values: DVector<f64>,
    /// `∂f/∂v`, `rows × k`.
    pub jacobian: DMatrix<f64>,
}

impl<'m> RomSystem<'m> {
    pub fn new(model: &'m dyn StencilModel, cfg: &RomConfig) -> Result<Self> {
        cfg.validate(model.dim())?;
        let phi = &cfg.basis.modes;
        let u_ref = &cfg.basis.u_ref;
        let (n_full, k) = phi.shape();
        let row_ids: Vec<usize> = match (&cfg.hyper, &cfg.samples) {
            (HyperReduction::None, _) => (0..n_full).collect(),
            (_, Some(s)) => s.indices().to_vec(),
            (_, None) => unreachable!("validated"),
        };

        let mut mesh = BTreeSet::new();
        let rows: Vec<RowData> = row_ids
            .iter()
            .map(|&row| {
                let stencil = model.stencil(row);
                mesh.insert(row);
                mesh.extend(stencil.iter().copied());
                RowData {
                    row,
                    phi_stencil: linalg::gather_rows(phi, &stencil),
                    uref_stencil: stencil.iter().map(|&s| u_ref[s]).collect(),
                    phi_row: phi.row(row).transpose(),
                }
            })
            .collect();

        let (residual_weights, galerkin_weights) = match cfg.hyper {
            HyperReduction::None => (None, phi.transpose()),
            HyperReduction::Collocation => {
                let sampled = linalg::gather_rows(phi, &row_ids);
                (None, sampled.transpose())
            }
            HyperReduction::GappyPod => {
                let nl = cfg.nonlinear_basis.as_ref().expect("validated");
                let samples = cfg.samples.as_ref().expect("validated");
                let op = GappyOperator::new(&nl.modes, samples, HyperMode::GappyPod)?;
                let pinv = op
                    .sampled_pseudo_inverse()
                    .expect("gappy operator is factored");
                let front = phi.tr_mul(&nl.modes) * &pinv;
                (Some(pinv), front)
            }
        };

        Ok(Self {
            model,
            rows,
            mesh: mesh.into_iter().collect(),
            k,
            dt: cfg.dt,
            hyper: cfg.hyper,
            residual_weights,
            galerkin_weights,
        })
    }

    pub fn reduced_dim(&self) -> usize {
        self.k
    }

    /// Rows at which the residual (or `f`) is evaluated.
    pub fn evaluated_rows(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.row).collect()
    }

    /// Evaluated rows plus their stencil neighbors.
    pub fn sample_mesh(&self) -> &[usize] {
        &self.mesh
    }

    pub fn hyper(&self) -> HyperReduction {
        self.hyper
    }

    /// `f` and `∂f/∂v` on the evaluated rows at `u = u_ref + Φ v`.
    pub fn sampled_rhs(&self, v: &DVector<f64>) -> SampledRhs {
        let m = self.rows.len();
        let mut values = DVector::zeros(m);
        let mut jacobian = DMatrix::zeros(m, self.k);
        let mut vals = Vec::new();
        let mut grad = Vec::new();
        for (r, data) in self.rows.iter().enumerate() {
            vals.clear();
            vals.extend(
                data.uref_stencil
                    .iter()
                    .enumerate()
                    .map(|(s, u0)| u0 + data.phi_stencil.row(s).dot(&v.transpose())),
            );
            grad.clear();
            grad.resize(vals.len(), 0.0);
            values[r] = self.model.rhs_entry(data.row, &vals);
            self.model.rhs_entry_gradient(data.row, &vals, &mut grad);
            for (s, g) in grad.iter().enumerate() {
                let mut jrow = jacobian.row_mut(r);
                jrow += data.phi_stencil.row(s) * *g;
            }
        }
        SampledRhs { values, jacobian }
    }

    /// LSPG least-squares operand and its Jacobian in `v`:
    /// `r̂` (no hyper-reduction), `Zᵀr̂` (collocation) or `(ZᵀΦ_r)†Zᵀr̂` (gappy).
    pub fn lspg_operand(
        &self,
        v: &DVector<f64>,
        y_prev: &DVector<f64>,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let SampledRhs { values, jacobian } = self.sampled_rhs(v);
        let dv = v - y_prev;
        let m = self.rows.len();
        let mut res = DVector::zeros(m);
        let mut jac = jacobian * (-self.dt);
        for (r, data) in self.rows.iter().enumerate() {
            res[r] = data.phi_row.dot(&dv) - self.dt * values[r];
            let mut jrow = jac.row_mut(r);
            jrow += data.phi_row.transpose();
        }
        match &self.residual_weights {
            Some(w) => (w * res, w * jac),
            None => (res, jac),
        }
    }

    /// Galerkin backward-Euler operand `v − y_prev − Δt F f(v)` and its Jacobian.
    pub fn galerkin_operand(
        &self,
        v: &DVector<f64>,
        y_prev: &DVector<f64>,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let SampledRhs { values, jacobian } = self.sampled_rhs(v);
        let g = v - y_prev - &self.galerkin_weights * values * self.dt;
        let jac = DMatrix::identity(self.k, self.k) - &self.galerkin_weights * jacobian * self.dt;
        (g, jac)
    }
}

pub(crate) fn check_finite(v: &DVector<f64>, step: usize, update_norm: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { step, update_norm })
    }
}
