use nalgebra::DVector;

use super::{iterate, ProjectionScheme, RomSystem, StepOutcome};
use crate::error::{Error, Result};

/// Galerkin projection: Newton on `y − y_prev − Δt F f(u_ref + Φ y) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Galerkin;

impl ProjectionScheme for Galerkin {
    fn name(&self) -> &'static str {
        "galerkin"
    }

    fn step(
        &self,
        system: &RomSystem<'_>,
        y_prev: &DVector<f64>,
        step: usize,
    ) -> Result<StepOutcome> {
        iterate(y_prev, step, |v| {
            let (g, jac) = system.galerkin_operand(v, y_prev);
            jac.lu().solve(&(-g)).ok_or(Error::Singular)
        })
    }
}
