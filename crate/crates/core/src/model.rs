//! Semi-discrete models `du/dt = f(u)` whose entries depend on a few neighbors.
//!
//! Hyper-reduced ROMs only evaluate `f` at sampled rows, so models expose
//! each entry through its stencil rather than only as a full vector.

use nalgebra::{DMatrix, DVector};

pub trait StencilModel: Send + Sync {
    fn dim(&self) -> usize;

    /// State rows entering `f_i`, in the order `rhs_entry` expects them.
    fn stencil(&self, i: usize) -> Vec<usize>;

    /// `f_i` from the stencil values.
    fn rhs_entry(&self, i: usize, values: &[f64]) -> f64;

    /// `∂f_i/∂values`, written into `grad` (same length as the stencil).
    fn rhs_entry_gradient(&self, i: usize, values: &[f64], grad: &mut [f64]);

    /// Full right-hand side.
    fn rhs(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        let mut vals = Vec::new();
        for i in 0..self.dim() {
            vals.clear();
            vals.extend(self.stencil(i).into_iter().map(|s| u[s]));
            out[i] = self.rhs_entry(i, &vals);
        }
        out
    }

    /// Dense Jacobian of `f`; for tests and small problems.
    fn rhs_jacobian_dense(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut jac = DMatrix::zeros(n, n);
        let mut vals = Vec::new();
        let mut grad = Vec::new();
        for i in 0..n {
            let st = self.stencil(i);
            vals.clear();
            vals.extend(st.iter().map(|&s| u[s]));
            grad.clear();
            grad.resize(st.len(), 0.0);
            self.rhs_entry_gradient(i, &vals, &mut grad);
            for (&s, g) in st.iter().zip(&grad) {
                jac[(i, s)] += g;
            }
        }
        jac
    }
}

/// `f(u) = L u` with a dense `L`; every entry depends on the whole state.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub operator: DMatrix<f64>,
}

impl StencilModel for LinearModel {
    fn dim(&self) -> usize {
        self.operator.nrows()
    }

    fn stencil(&self, _i: usize) -> Vec<usize> {
        (0..self.dim()).collect()
    }

    fn rhs_entry(&self, i: usize, values: &[f64]) -> f64 {
        self.operator
            .row(i)
            .iter()
            .zip(values)
            .map(|(a, v)| a * v)
            .sum()
    }

    fn rhs_entry_gradient(&self, i: usize, _values: &[f64], grad: &mut [f64]) {
        for (g, a) in grad.iter_mut().zip(self.operator.row(i).iter()) {
            *g = *a;
        }
    }
}
