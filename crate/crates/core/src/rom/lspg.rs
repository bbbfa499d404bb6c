use nalgebra::DVector;

use super::{iterate, ProjectionScheme, RomSystem, StepOutcome};
use crate::error::Result;
use crate::linalg::LeastSquares;

/// Least-squares Petrov-Galerkin: Gauss-Newton on the (weighted) residual.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lspg;

impl ProjectionScheme for Lspg {
    fn name(&self) -> &'static str {
        "lspg"
    }

    fn step(
        &self,
        system: &RomSystem<'_>,
        y_prev: &DVector<f64>,
        step: usize,
    ) -> Result<StepOutcome> {
        iterate(y_prev, step, |v| {
            let (res, jac) = system.lspg_operand(v, y_prev);
            Ok(LeastSquares::new(&jac).solve(&(-res)))
        })
    }
}
