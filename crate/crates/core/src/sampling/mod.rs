//! Row-index selection for hyper-reduction.
//!
//! Every selector implements [`Selector`] and is looked up by name through a
//! [`SelectorRegistry`], so the CLI and the sweep pick algorithms from
//! configuration strings. The built-in selectors are greedy S-optimal
//! selection (`s_opt`) and oversampled DEIM (`deim`).

mod deim;
mod s_opt;

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

pub use deim::DeimOversampled;
pub use s_opt::{SOpt, SOptStep, TIE_TOL};

/// Orthonormality tolerance for selector inputs.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplingAlgorithm {
    SOpt,
    DeimOversampled,
    Manual,
}

impl SamplingAlgorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingAlgorithm::SOpt => "s_opt",
            SamplingAlgorithm::DeimOversampled => "deim_oversampled",
            SamplingAlgorithm::Manual => "manual",
        }
    }
}

impl fmt::Display for SamplingAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SamplingAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s_opt" | "sopt" => Ok(SamplingAlgorithm::SOpt),
            "deim" | "deim_oversampled" => Ok(SamplingAlgorithm::DeimOversampled),
            "manual" => Ok(SamplingAlgorithm::Manual),
            other => Err(Error::InvalidArgument(format!(
                "unknown sampling algorithm {other:?}"
            ))),
        }
    }
}

/// Ordered set of selected rows; stands in for the sampling matrix `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    indices: Vec<usize>,
    full_dim: usize,
    pub algorithm: SamplingAlgorithm,
}

impl SampleSet {
    pub fn new(indices: Vec<usize>, full_dim: usize, algorithm: SamplingAlgorithm) -> Result<Self> {
        let mut seen = vec![false; full_dim];
        for &i in &indices {
            if i >= full_dim {
                return Err(Error::InvalidArgument(format!(
                    "sample index {i} out of range for dimension {full_dim}"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate sample index {i}"
                )));
            }
        }
        Ok(Self {
            indices,
            full_dim,
            algorithm,
        })
    }

    /// Every row, in natural order.
    pub fn all(full_dim: usize) -> Self {
        Self {
            indices: (0..full_dim).collect(),
            full_dim,
            algorithm: SamplingAlgorithm::Manual,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    /// First `n` selections. Greedy selectors produce nested prefixes.
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            indices: self.indices[..n.min(self.len())].to_vec(),
            full_dim: self.full_dim,
            algorithm: self.algorithm,
        }
    }

    /// `Zᵀ v`.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.full_dim {
            return Err(Error::Dimension(format!(
                "vector has length {}, sample set expects {}",
                v.len(),
                self.full_dim
            )));
        }
        Ok(linalg::gather(v, &self.indices))
    }

    /// `Zᵀ M`.
    pub fn apply_rows(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.full_dim {
            return Err(Error::Dimension(format!(
                "matrix has {} rows, sample set expects {}",
                m.nrows(),
                self.full_dim
            )));
        }
        Ok(linalg::gather_rows(m, &self.indices))
    }

    /// `Z s`: sampled values placed at their rows, zeros elsewhere.
    pub fn scatter(&self, values: &DVector<f64>) -> Result<DVector<f64>> {
        if values.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} sampled values for {} samples",
                values.len(),
                self.len()
            )));
        }
        let mut out = DVector::zeros(self.full_dim);
        for (&i, &v) in self.indices.iter().zip(values.iter()) {
            out[i] = v;
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        format!(
            "{} {} {}\n{}\n",
            self.len(),
            self.full_dim,
            self.algorithm,
            idx.join(" ")
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Parse {
            line: 1,
            msg: format!("malformed header {header:?}, expected \"<n> <N> <algorithm>\""),
        };
        if parts.len() != 3 {
            return Err(bad_header());
        }
        let n: usize = parts[0].parse().map_err(|_| bad_header())?;
        let full: usize = parts[1].parse().map_err(|_| bad_header())?;
        let algorithm: SamplingAlgorithm = parts[2].parse().map_err(|_| bad_header())?;
        let body = lines.next().unwrap_or("");
        let indices = body
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line: 2,
                    msg: format!("non-integer index {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if indices.len() != n {
            return Err(Error::Parse {
                line: 2,
                msg: format!("header announces {n} indices, found {}", indices.len()),
            });
        }
        Self::new(indices, full, algorithm)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// The S quantity of a matrix together with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct SValue {
    pub value: f64,
    /// `log det(AᵀA)`; `-inf` when singular.
    pub log_det_gram: f64,
    pub column_norms: Vec<f64>,
}

/// `(√det(AᵀA) / Π‖αᵢ‖)^(1/p)`, evaluated in the log domain from a QR of `A`.
///
/// Equals one exactly when the columns are orthonormal and lies in `[0, 1]`
/// by Hadamard's inequality.
pub fn s_quantity(a: &DMatrix<f64>) -> Result<SValue> {
    let (n, p) = a.shape();
    if p == 0 {
        return Err(Error::Dimension("matrix has no columns".into()));
    }
    if n < p {
        return Err(Error::Dimension(format!(
            "S quantity needs at least as many rows as columns, got {n}x{p}"
        )));
    }
    let column_norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = column_norms.iter().position(|&c| c == 0.0) {
        return Err(Error::DegenerateColumn(j));
    }
    let r = a.clone().qr().unpack_r();
    let log_det_gram: f64 = (0..p).map(|i| 2.0 * r[(i, i)].abs().ln()).sum();
    let log_norms: f64 = column_norms.iter().map(|c| c.ln()).sum();
    let value = ((0.5 * log_det_gram - log_norms) / p as f64).exp();
    // only roundoff can push the value past one
    let value = value.clamp(0.0, 1.0);
    Ok(SValue {
        value,
        log_det_gram,
        column_norms,
    })
}

/// A row-selection strategy.
pub trait Selector: Send + Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    /// Alternative registry keys.
    fn aliases(&self) -> &'static [&'static str] {
        &[]
    }

    fn algorithm(&self) -> SamplingAlgorithm;

    /// Picks `n` rows of the orthonormal `modes` (N×p, p ≤ n ≤ N).
    fn select(&self, modes: &DMatrix<f64>, n: usize) -> Result<SampleSet>;
}

/// Named collection of selectors.
pub struct SelectorRegistry {
    selectors: Vec<Box<dyn Selector>>,
}

impl SelectorRegistry {
    pub fn empty() -> Self {
        Self {
            selectors: Vec::new(),
        }
    }

    pub fn register(&mut self, selector: Box<dyn Selector>) {
        self.selectors.retain(|s| s.name() != selector.name());
        self.selectors.push(selector);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Selector> {
        self.selectors
            .iter()
            .find(|s| s.name() == name || s.aliases().contains(&name))
            .map(|s| s.as_ref())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown selector {name:?}; available: {}",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.selectors.iter().map(|s| s.name()).collect()
    }
}

impl Default for SelectorRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(SOpt::default()));
        reg.register(Box::new(DeimOversampled));
        reg
    }
}

/// Shared precondition check for selectors.
pub(crate) fn check_selection_input(modes: &DMatrix<f64>, n: usize) -> Result<()> {
    let (rows, p) = modes.shape();
    if p == 0 {
        return Err(Error::Dimension("basis has no columns".into()));
    }
    if n < p || n > rows {
        return Err(Error::InvalidArgument(format!(
            "sample count {n} must lie in [{p}, {rows}]"
        )));
    }
    let dev = linalg::orthonormality_deviation(modes);
    if dev > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    Ok(())
}

/// Index of the largest `score` among rows with `eligible[i]`; ties keep the
/// smallest index.
pub(crate) fn argmax_eligible(
    scores: impl Iterator<Item = f64>,
    eligible: &[bool],
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        if !eligible[i] {
            continue;
        }
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// S quantity of every greedy prefix `Z_{1:j}ᵀ Q_{1:min(j,p)}`, for logging.
pub fn prefix_s_values(modes: &DMatrix<f64>, samples: &SampleSet) -> Vec<f64> {
    let p = modes.ncols();
    (1..=samples.len())
        .map(|j| {
            let k = j.min(p);
            let sub =
                linalg::gather_rows(&linalg::leading_columns(modes, k), &samples.indices[..j]);
            s_quantity(&sub).map(|s| s.value).unwrap_or(0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_columns_have_unit_s() {
        for p in 1..5 {
            let a = DMatrix::<f64>::identity(6, p);
            assert!((s_quantity(&a).unwrap().value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_example() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let s = s_quantity(&a).unwrap();
        // det(AᵀA) = 1, norms 1 and √2
        let expected = (1.0 / 2f64.sqrt()).sqrt();
        assert!((s.value - expected).abs() < 1e-14);
        assert!((s.value - 0.840896).abs() < 1e-6);
        assert!(s.log_det_gram.abs() < 1e-14);
    }

    #[test]
    fn zero_column_is_degenerate() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let err = s_quantity(&a).unwrap_err();
        assert!(err.to_string().contains("degenerate column"));
    }

    #[test]
    fn wide_matrix_rejected() {
        assert!(s_quantity(&DMatrix::<f64>::identity(2, 3)).is_err());
    }

    #[test]
    fn s_value_identity_with_log_parts() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, -0.5, 1.0, 0.3, 0.7]);
        let s = s_quantity(&a).unwrap();
        let log_norms: f64 = s.column_norms.iter().map(|c| c.ln()).sum();
        let rebuilt = ((0.5 * s.log_det_gram - log_norms) / 2.0).exp();
        assert!((rebuilt - s.value).abs() < 1e-15);
    }

    #[test]
    fn apply_selects_in_order() {
        let s = SampleSet::new(vec![2, 0], 3, SamplingAlgorithm::Manual).unwrap();
        let v = DVector::from_row_slice(&[10.0, 20.0, 30.0]);
        assert_eq!(s.apply(&v).unwrap().as_slice(), &[30.0, 10.0]);
        assert_eq!(SampleSet::all(3).apply(&v).unwrap(), v);
        assert!(s.apply(&DVector::zeros(4)).is_err());
    }

    #[test]
    fn scatter_inverts_apply_on_samples() {
        let s = SampleSet::new(vec![3, 1], 5, SamplingAlgorithm::Manual).unwrap();
        let v = s.scatter(&DVector::from_row_slice(&[7.0, 8.0])).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 8.0, 0.0, 7.0, 0.0]);
    }

    #[test]
    fn sample_set_rejects_duplicates_and_range() {
        assert!(SampleSet::new(vec![1, 1], 3, SamplingAlgorithm::Manual).is_err());
        assert!(SampleSet::new(vec![3], 3, SamplingAlgorithm::Manual).is_err());
    }

    #[test]
    fn sample_file_round_trip() {
        let s = SampleSet::new(vec![4, 0, 2], 6, SamplingAlgorithm::SOpt).unwrap();
        let text = s.to_text();
        assert_eq!(text, "3 6 s_opt\n4 0 2\n");
        assert_eq!(SampleSet::parse(&text).unwrap(), s);
        assert!(SampleSet::parse("2 6 s_opt\n1\n").is_err());
        assert!(SampleSet::parse("").is_err());
    }

    #[test]
    fn registry_lookup() {
        let reg = SelectorRegistry::default();
        assert_eq!(reg.get("s_opt").unwrap().name(), "s_opt");
        assert_eq!(reg.get("deim").unwrap().name(), "deim");
        assert_eq!(
            reg.get("deim_oversampled").unwrap().algorithm(),
            SamplingAlgorithm::DeimOversampled
        );
        let err = reg.get("qdeim").err().unwrap().to_string();
        assert!(err.contains("s_opt") && err.contains("deim"));
    }

    #[test]
    fn argmax_prefers_smallest_index_on_ties() {
        let eligible = [true, false, true, true];
        let scores = [1.0, 5.0, 2.0, 2.0];
        assert_eq!(argmax_eligible(scores.into_iter(), &eligible), Some(2));
    }
}
