//! Gappy-POD and collocation reconstruction from sampled entries, and the
//! oblique/orthogonal projection error decomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, LeastSquares};
use crate::sampling::SampleSet;

/// Largest condition number accepted for the sampled basis `ZᵀM`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperMode {
    /// `M (ZᵀM)† Zᵀ b`
    GappyPod,
    /// `Z Zᵀ b`
    Collocation,
}

impl HyperMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            HyperMode::GappyPod => "gappy_pod",
            HyperMode::Collocation => "collocation",
        }
    }
}

/// Factored reconstruction operator for one basis and one sample set.
#[derive(Debug, Clone)]
pub struct GappyOperator {
    basis: DMatrix<f64>,
    samples: SampleSet,
    mode: HyperMode,
    sampled_factor: Option<LeastSquares>,
    condition: f64,
}

/// Output of [`GappyOperator::reconstruct`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Basis coefficients; `None` for collocation.
    pub coords: Option<DVector<f64>>,
    pub full: DVector<f64>,
}

impl GappyOperator {
    pub fn new(basis: &DMatrix<f64>, samples: &SampleSet, mode: HyperMode) -> Result<Self> {
        if samples.full_dim() != basis.nrows() {
            return Err(Error::Dimension(format!(
                "sample set indexes {} rows, basis has {}",
                samples.full_dim(),
                basis.nrows()
            )));
        }
        let (sampled_factor, condition) = match mode {
            HyperMode::Collocation => (None, 1.0),
            HyperMode::GappyPod => {
                let p = basis.ncols();
                let sampled = samples.apply_rows(basis)?;
                if samples.len() < p {
                    return Err(Error::SampledBasisRank {
                        rank: samples.len(),
                        cols: p,
                        condition: f64::INFINITY,
                    });
                }
                let (smax, smin) = linalg::singular_value_range(&sampled);
                let condition = if smin > 0.0 {
                    smax / smin
                } else {
                    f64::INFINITY
                };
                let factor = LeastSquares::new(&sampled);
                if !factor.is_full_column_rank() || !(condition <= MAX_CONDITION) {
                    return Err(Error::SampledBasisRank {
                        rank: factor.rank(),
                        cols: p,
                        condition,
                    });
                }
                (Some(factor), condition)
            }
        };
        Ok(Self {
            basis: basis.clone(),
            samples: samples.clone(),
            mode,
            sampled_factor,
            condition,
        })
    }

    pub fn mode(&self) -> HyperMode {
        self.mode
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// 2-norm condition number of `ZᵀM` (1 for collocation).
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// `(ZᵀM)†` applied to sampled values.
    pub fn coefficients(&self, sampled_values: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(sampled_values)?;
        match &self.sampled_factor {
            Some(f) => Ok(f.solve(sampled_values)),
            None => Err(Error::InvalidArgument(
                "collocation has no basis coefficients".into(),
            )),
        }
    }

    /// Explicit `(ZᵀM)†`, `p × n`.
    pub fn sampled_pseudo_inverse(&self) -> Option<DMatrix<f64>> {
        self.sampled_factor.as_ref().map(|f| f.pseudo_inverse())
    }

    pub fn reconstruct(&self, sampled_values: &DVector<f64>) -> Result<Reconstruction> {
        self.check_len(sampled_values)?;
        match &self.sampled_factor {
            Some(f) => {
                let coords = f.solve(sampled_values);
                let full = &self.basis * &coords;
                Ok(Reconstruction {
                    coords: Some(coords),
                    full,
                })
            }
            None => Ok(Reconstruction {
                coords: None,
                full: self.samples.scatter(sampled_values)?,
            }),
        }
    }

    /// Samples `b` and reconstructs it.
    pub fn approximate(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.reconstruct(&self.samples.apply(b)?)?.full)
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.samples.len() {
            return Err(Error::Dimension(format!(
                "{} sampled values for {} samples",
                v.len(),
                self.samples.len()
            )));
        }
        Ok(())
    }
}

/// Error decomposition of a gappy reconstruction of one vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionErrorReport {
    /// `‖b − b̃(Z)‖`
    pub oblique_error: f64,
    /// `‖(I − QQᵀ) b‖`
    pub orthogonal_error: f64,
    /// `‖ε(Z)‖`, the sampled least-squares fit of the orthogonal remainder.
    pub epsilon_norm: f64,
    /// `‖(ZᵀQ)†‖ · ‖(I − QQᵀ) b‖`
    pub bound: f64,
    /// `‖b‖`, for relative reporting.
    pub target_norm: f64,
}

impl ProjectionErrorReport {
    /// Discrepancy of `oblique² = orthogonal² + ε²` relative to the largest of
    /// its two sides and `‖b‖²`; when `b` lies in the basis range both sides
    /// are pure roundoff and only `‖b‖²` gives a meaningful scale.
    pub fn equality_defect(&self) -> f64 {
        let lhs = self.oblique_error.powi(2);
        let rhs = self.orthogonal_error.powi(2) + self.epsilon_norm.powi(2);
        let scale = lhs.max(rhs).max(self.target_norm.powi(2));
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }

    /// Amount by which the oblique error exceeds the bound (≤ 0 when it holds).
    pub fn bound_excess(&self) -> f64 {
        self.oblique_error - self.bound
    }

    /// `n,oblique,orthogonal,epsilon,bound`
    pub fn csv_row(&self, n: usize) -> String {
        use crate::snapshots::format_f64;
        format!(
            "{n},{},{},{},{}",
            format_f64(self.oblique_error),
            format_f64(self.orthogonal_error),
            format_f64(self.epsilon_norm),
            format_f64(self.bound)
        )
    }

    pub const CSV_HEADER: &'static str = "n,oblique,orthogonal,epsilon,bound";
}

/// Precomputed pieces for evaluating [`ProjectionErrorReport`]s of many vectors.
#[derive(Debug, Clone)]
pub struct ErrorAnalyzer {
    operator: GappyOperator,
    q: DMatrix<f64>,
    sampled_q: LeastSquares,
    pinv_norm: f64,
}

impl ErrorAnalyzer {
    pub fn new(basis: &DMatrix<f64>, samples: &SampleSet) -> Result<Self> {
        let operator = GappyOperator::new(basis, samples, HyperMode::GappyPod)?;
        let q = if linalg::orthonormality_deviation(basis) <= 1e-12 {
            basis.clone()
        } else {
            linalg::thin_q(basis)
        };
        let sampled = samples.apply_rows(&q)?;
        let (_, smin) = linalg::singular_value_range(&sampled);
        Ok(Self {
            operator,
            sampled_q: LeastSquares::new(&sampled),
            pinv_norm: 1.0 / smin,
            q,
        })
    }

    pub fn report(&self, b: &DVector<f64>) -> Result<ProjectionErrorReport> {
        let samples = self.operator.samples();
        let approx = self.operator.approximate(b)?;
        let remainder = b - &self.q * self.q.tr_mul(b);
        let epsilon = self.sampled_q.solve(&samples.apply(&remainder)?);
        let orthogonal_error = remainder.norm();
        Ok(ProjectionErrorReport {
            oblique_error: (b - approx).norm(),
            orthogonal_error,
            epsilon_norm: epsilon.norm(),
            bound: self.pinv_norm * orthogonal_error,
            target_norm: b.norm(),
        })
    }
}

/// One-shot error decomposition for `b` against basis `M` sampled at `samples`.
pub fn error_report(
    basis: &DMatrix<f64>,
    samples: &SampleSet,
    b: &DVector<f64>,
) -> Result<ProjectionErrorReport> {
    ErrorAnalyzer::new(basis, samples)?.report(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SamplingAlgorithm;

    fn manual(idx: &[usize], n: usize) -> SampleSet {
        SampleSet::new(idx.to_vec(), n, SamplingAlgorithm::Manual).unwrap()
    }

    #[test]
    fn identity_columns_have_unit_condition() {
        let m = DMatrix::<f64>::identity(5, 2);
        let op = GappyOperator::new(&m, &manual(&[0, 1], 5), HyperMode::GappyPod).unwrap();
        assert!((op.condition_number() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rows_give_rank_error() {
        let m = DMatrix::<f64>::identity(5, 2);
        let err = GappyOperator::new(&m, &manual(&[2, 3, 4], 5), HyperMode::GappyPod).unwrap_err();
        assert!(
            matches!(
                err,
                Error::SampledBasisRank {
                    rank: 0,
                    cols: 2,
                    ..
                }
            ),
            "{err}"
        );
        let err = GappyOperator::new(&m, &manual(&[0, 3], 5), HyperMode::GappyPod).unwrap_err();
        assert!(
            matches!(err, Error::SampledBasisRank { rank: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn collocation_scatters() {
        let m = DMatrix::<f64>::identity(4, 1);
        let op = GappyOperator::new(&m, &manual(&[3, 1], 4), HyperMode::Collocation).unwrap();
        let r = op
            .reconstruct(&DVector::from_row_slice(&[5.0, 6.0]))
            .unwrap();
        assert!(r.coords.is_none());
        assert_eq!(r.full.as_slice(), &[0.0, 6.0, 0.0, 5.0]);
    }

    #[test]
    fn length_mismatch_rejected() {
        let m = DMatrix::<f64>::identity(4, 1);
        let op = GappyOperator::new(&m, &manual(&[0, 1], 4), HyperMode::GappyPod).unwrap();
        assert!(op.reconstruct(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn in_span_vector_has_zero_errors() {
        let m = linalg::thin_q(&DMatrix::from_fn(6, 2, |i, j| {
            (i as f64 + 1.0).powi(j as i32)
        }));
        let b = &m * DVector::from_row_slice(&[0.3, -1.2]);
        let r = error_report(&m, &manual(&[0, 2, 5], 6), &b).unwrap();
        assert!(r.oblique_error < 1e-13);
        assert!(r.orthogonal_error < 1e-13);
        assert!(r.epsilon_norm < 1e-13);
    }
}
