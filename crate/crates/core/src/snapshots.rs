//! Snapshot collections, POD bases and the plain-text matrix format.
//!
//! Matrix files are UTF-8 text. Optional `#` comment lines come first, then a
//! `<rows> <cols>` header, then one line per row with entries printed to 17
//! significant digits. Snapshot metadata rides along in `# key = value`
//! comments so a write/read cycle preserves it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg;

/// What a snapshot (or basis) column represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotKind {
    State,
    NonlinearTerm,
    Residual,
}

impl SnapshotKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SnapshotKind::State => "state",
            SnapshotKind::NonlinearTerm => "nonlinear_term",
            SnapshotKind::Residual => "residual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "state" | "solution" => Some(SnapshotKind::State),
            "nonlinear_term" => Some(SnapshotKind::NonlinearTerm),
            "residual" => Some(SnapshotKind::Residual),
            _ => None,
        }
    }
}

/// Column-wise collection of full-order vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<f64>,
    pub kind: SnapshotKind,
    /// Uniform time step between consecutive columns.
    pub dt: f64,
    pub description: String,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<f64>, kind: SnapshotKind, dt: f64) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "snapshot matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            data,
            kind,
            dt,
            description: String::new(),
        })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn from_columns(columns: &[DVector<f64>], kind: SnapshotKind, dt: f64) -> Result<Self> {
        let first = columns
            .first()
            .ok_or_else(|| Error::Dimension("no snapshot columns".into()))?;
        if let Some(bad) = columns.iter().position(|c| c.len() != first.len()) {
            return Err(Error::Dimension(format!(
                "column {bad} has length {}, expected {}",
                columns[bad].len(),
                first.len()
            )));
        }
        Self::new(DMatrix::from_columns(columns), kind, dt)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.data.column(j).into_owned()
    }

    /// Column mean, one candidate reference state.
    pub fn mean_column(&self) -> DVector<f64> {
        self.data.column_mean()
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Orthonormal basis with its singular values and reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub modes: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub u_ref: DVector<f64>,
    pub kind: SnapshotKind,
}

impl PodBasis {
    /// Wraps an externally built orthonormal basis. Singular values default to ones.
    pub fn from_modes(
        modes: DMatrix<f64>,
        u_ref: DVector<f64>,
        kind: SnapshotKind,
    ) -> Result<Self> {
        if u_ref.len() != modes.nrows() {
            return Err(Error::Dimension(format!(
                "reference state has length {}, basis has {} rows",
                u_ref.len(),
                modes.nrows()
            )));
        }
        let dev = linalg::orthonormality_deviation(&modes);
        if dev > 1e-8 {
            return Err(Error::NotOrthonormal(dev));
        }
        let k = modes.ncols();
        Ok(Self {
            modes,
            singular_values: DVector::from_element(k, 1.0),
            u_ref,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.modes.nrows()
    }

    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    /// Basis restricted to its leading `k` modes.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.rank() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate a {}-mode basis to {k} modes",
                self.rank()
            )));
        }
        Ok(Self {
            modes: linalg::leading_columns(&self.modes, k),
            singular_values: self.singular_values.rows(0, k).into_owned(),
            u_ref: self.u_ref.clone(),
            kind: self.kind,
        })
    }

    /// Generalized coordinates `Φᵀ(u − u_ref)`.
    pub fn project(&self, u: &DVector<f64>) -> DVector<f64> {
        self.modes.tr_mul(&(u - &self.u_ref))
    }

    /// `u_ref + Φ y`.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.u_ref + &self.modes * y
    }
}

/// How many leading modes to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Count(usize),
    /// Smallest `k` whose cumulative squared singular values reach this fraction.
    Energy(f64),
}

/// Relative singular value cutoff used to decide numerical rank.
fn rank_cutoff(sigma: &DVector<f64>, rows: usize, cols: usize) -> f64 {
    sigma.max() * (rows.max(cols) as f64) * f64::EPSILON
}

/// Number of leading modes that capture at least `eta` of the snapshot energy.
pub fn energy_rank(singular_values: &[f64], eta: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        acc += s * s;
        // tolerate roundoff in the running sum so eta = 1 stops at the last nonzero mode
        if acc / total >= eta - 1e-14 {
            return i + 1;
        }
    }
    singular_values.len()
}

/// Leading left singular vectors of the centered snapshot matrix.
pub fn compute_pod(
    snaps: &SnapshotMatrix,
    u_ref: &DVector<f64>,
    truncation: Truncation,
) -> Result<PodBasis> {
    let (rows, cols) = (snaps.nrows(), snaps.ncols());
    if u_ref.len() != rows {
        return Err(Error::Dimension(format!(
            "reference state has length {}, snapshots have {rows} rows",
            u_ref.len()
        )));
    }
    check_finite(snaps.data())?;
    for (i, v) in u_ref.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
    }
    let max_rank = rows.min(cols);
    match truncation {
        Truncation::Count(k) if k == 0 || k > max_rank => {
            return Err(Error::InvalidArgument(format!(
                "mode count {k} must lie in [1, {max_rank}]"
            )))
        }
        Truncation::Energy(eta) if !(eta > 0.0 && eta <= 1.0) => {
            return Err(Error::InvalidArgument(format!(
                "energy fraction {eta} must lie in (0, 1]"
            )))
        }
        _ => {}
    }

    let mut centered = snaps.data().clone();
    for mut col in centered.column_iter_mut() {
        col -= u_ref;
    }
    let svd = SVD::new(centered, true, false);
    let sigma = svd.singular_values;
    let cutoff = rank_cutoff(&sigma, rows, cols);
    let achievable = sigma.iter().filter(|&&s| s > cutoff).count();

    let k = match truncation {
        Truncation::Count(k) => k,
        Truncation::Energy(eta) if eta >= 1.0 => achievable,
        Truncation::Energy(eta) => energy_rank(sigma.as_slice(), eta),
    };
    if k == 0 || k > achievable {
        return Err(Error::RankDeficient {
            requested: k.max(1),
            achievable,
        });
    }
    let u = svd.u.expect("left singular vectors requested");
    let mut modes = u.columns(0, k).into_owned();
    // Deterministic sign: largest-magnitude entry of each mode is positive.
    for mut col in modes.column_iter_mut() {
        let i = col.iamax();
        if col[i] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(PodBasis {
        modes,
        singular_values: sigma.rows(0, k).into_owned(),
        u_ref: u_ref.clone(),
        kind: snaps.kind,
    })
}

/// Linear operator relating solution and nonlinear-term subspaces.
#[derive(Debug, Clone)]
pub enum SubspaceMap {
    Identity,
    Dense(DMatrix<f64>),
}

/// Nonlinear-term basis from the solution basis through `Φ_f = A Φ`.
pub fn sns_nonlinear_basis(solution: &PodBasis, map: &SubspaceMap) -> Result<PodBasis> {
    match map {
        SubspaceMap::Identity => Ok(PodBasis {
            kind: SnapshotKind::NonlinearTerm,
            ..solution.clone()
        }),
        SubspaceMap::Dense(a) => {
            let n = solution.dim();
            if a.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "map is {}x{}, basis has {n} rows",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if !a.clone().lu().is_invertible() {
                return Err(Error::Singular);
            }
            let mapped = a * &solution.modes;
            let ls = linalg::LeastSquares::new(&mapped);
            if !ls.is_full_column_rank() {
                return Err(Error::Singular);
            }
            Ok(PodBasis {
                modes: linalg::thin_q(&mapped),
                singular_values: solution.singular_values.clone(),
                u_ref: solution.u_ref.clone(),
                kind: SnapshotKind::NonlinearTerm,
            })
        }
    }
}

/// `%.17g`-style rendering: 17 significant digits, C-style exponent.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        // "inf", "-inf" and "NaN" all parse back
        return x.to_string();
    }
    let s = format!("{x:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn format_matrix(m: &DMatrix<f64>, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Parses the matrix text format, returning the matrix and its comment lines.
pub fn parse_matrix(text: &str) -> Result<(DMatrix<f64>, Vec<String>)> {
    let mut comments = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = None;
    for (no, line) in lines.by_ref() {
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if t.is_empty() {
            continue;
        } else {
            header = Some((no, t));
            break;
        }
    }
    let (header_line, header) = header.ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: header_line,
            msg: format!("malformed header {header:?}"),
        })
    };
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: header_line,
            msg: format!("malformed header {header:?}, expected \"<rows> <cols>\""),
        });
    }
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut data = Vec::with_capacity(rows * cols);
    let mut last_line = header_line;
    for r in 0..rows {
        let (no, line) = lines.next().ok_or(Error::Parse {
            line: last_line + 1,
            msg: format!("expected {rows} data rows, found {r}"),
        })?;
        last_line = no;
        let mut count = 0;
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: no,
                msg: format!("non-numeric token {tok:?}"),
            })?;
            data.push(v);
            count += 1;
        }
        if count != cols {
            return Err(Error::Parse {
                line: no,
                msg: format!("row has {count} entries, expected {cols}"),
            });
        }
    }
    if let Some((no, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Parse {
            line: no,
            msg: format!("unexpected trailing content {:?}", extra.trim()),
        });
    }
    Ok((DMatrix::from_row_slice(rows, cols, &data), comments))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &SnapshotMatrix) -> Result<()> {
    let mut comments = vec![
        format!("kind = {}", m.kind.as_str()),
        format!("dt = {}", format_f64(m.dt)),
    ];
    if !m.description.is_empty() {
        comments.push(format!(
            "description = {}",
            m.description.replace('\n', " ")
        ));
    }
    fs::write(path, format_matrix(m.data(), &comments))?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SnapshotMatrix> {
    let text = fs::read_to_string(path)?;
    let (data, comments) = parse_matrix(&text)?;
    let mut kind = SnapshotKind::State;
    let mut dt = 0.0;
    let mut description = String::new();
    for c in &comments {
        let Some((key, value)) = c.split_once('=') else {
            continue;
        };
        let value = value.trim();
        match key.trim() {
            "kind" => kind = SnapshotKind::parse(value).unwrap_or(kind),
            "dt" => dt = value.parse().unwrap_or(dt),
            "description" => description = value.to_string(),
            _ => {}
        }
    }
    Ok(SnapshotMatrix::new(data, kind, dt)?.with_description(description))
}

/// Writes `modes.txt`, `singular_values.txt` and `u_ref.txt` into `dir`.
pub fn write_basis(dir: impl AsRef<Path>, basis: &PodBasis) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let kind = format!("kind = {}", basis.kind.as_str());
    fs::write(dir.join("modes.txt"), format_matrix(&basis.modes, &[kind]))?;
    let sigma = DMatrix::from_column_slice(basis.rank(), 1, basis.singular_values.as_slice());
    fs::write(dir.join("singular_values.txt"), format_matrix(&sigma, &[]))?;
    let u_ref = DMatrix::from_column_slice(basis.dim(), 1, basis.u_ref.as_slice());
    fs::write(dir.join("u_ref.txt"), format_matrix(&u_ref, &[]))?;
    Ok(())
}

pub fn read_basis(dir: impl AsRef<Path>) -> Result<PodBasis> {
    let dir = dir.as_ref();
    let (modes, comments) = parse_matrix(&fs::read_to_string(dir.join("modes.txt"))?)?;
    let (sigma, _) = parse_matrix(&fs::read_to_string(dir.join("singular_values.txt"))?)?;
    let (u_ref, _) = parse_matrix(&fs::read_to_string(dir.join("u_ref.txt"))?)?;
    let kind = comments
        .iter()
        .filter_map(|c| c.split_once('='))
        .find(|(k, _)| k.trim() == "kind")
        .and_then(|(_, v)| SnapshotKind::parse(v.trim()))
        .unwrap_or(SnapshotKind::State);
    if sigma.len() != modes.ncols() || u_ref.len() != modes.nrows() {
        return Err(Error::Dimension(format!(
            "basis files disagree: modes {}x{}, {} singular values, reference length {}",
            modes.nrows(),
            modes.ncols(),
            sigma.len(),
            u_ref.len()
        )));
    }
    let dev = linalg::orthonormality_deviation(&modes);
    if dev > 1e-8 {
        return Err(Error::NotOrthonormal(dev));
    }
    Ok(PodBasis {
        modes,
        singular_values: DVector::from_column_slice(sigma.as_slice()),
        u_ref: DVector::from_column_slice(u_ref.as_slice()),
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snaps(data: DMatrix<f64>) -> SnapshotMatrix {
        SnapshotMatrix::new(data, SnapshotKind::State, 0.1).unwrap()
    }

    #[test]
    fn rank_one_pod_recovers_normalized_column() {
        let c = DVector::from_row_slice(&[3.0, 0.0, 4.0]);
        let s = snaps(DMatrix::from_columns(std::slice::from_ref(&c)));
        let basis = compute_pod(&s, &DVector::zeros(3), Truncation::Count(1)).unwrap();
        assert!((basis.singular_values[0] - 5.0).abs() < 1e-14);
        let mode = basis.modes.column(0);
        assert!((mode - &c / 5.0).amax() < 1e-14);
    }

    #[test]
    fn repeated_column_reports_achievable_rank() {
        let c = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        let s = snaps(DMatrix::from_columns(&[c.clone(), c]));
        let err = compute_pod(&s, &DVector::zeros(3), Truncation::Count(2)).unwrap_err();
        assert!(err.to_string().contains("achievable rank 1"), "{err}");
    }

    #[test]
    fn nonfinite_snapshots_rejected() {
        let mut d = DMatrix::zeros(2, 2);
        d[(1, 0)] = f64::NAN;
        assert!(matches!(
            SnapshotMatrix::new(d, SnapshotKind::State, 1.0),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn count_above_min_dimension_rejected() {
        let s = snaps(DMatrix::identity(3, 2));
        assert!(compute_pod(&s, &DVector::zeros(3), Truncation::Count(3)).is_err());
    }

    #[test]
    fn identity_map_relabels() {
        let s = snaps(DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        ));
        let b = compute_pod(&s, &DVector::zeros(3), Truncation::Count(2)).unwrap();
        let f = sns_nonlinear_basis(&b, &SubspaceMap::Identity).unwrap();
        assert_eq!(f.modes, b.modes);
        assert_eq!(f.kind, SnapshotKind::NonlinearTerm);
    }

    #[test]
    fn scaled_identity_map_keeps_modes() {
        let s = snaps(DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        ));
        let b = compute_pod(&s, &DVector::zeros(3), Truncation::Count(2)).unwrap();
        let a = DMatrix::identity(3, 3) * 2.0;
        let f = sns_nonlinear_basis(&b, &SubspaceMap::Dense(a)).unwrap();
        // QR may flip signs; compare up to sign per column
        for j in 0..2 {
            let d = f.modes.column(j).dot(&b.modes.column(j)).abs();
            assert!((d - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_map_rejected() {
        let s = snaps(DMatrix::identity(3, 1));
        let b = compute_pod(&s, &DVector::zeros(3), Truncation::Count(1)).unwrap();
        let mut a = DMatrix::identity(3, 3);
        a[(2, 2)] = 0.0;
        assert!(matches!(
            sns_nonlinear_basis(&b, &SubspaceMap::Dense(a)),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn two_by_two_text_format() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let text = format_matrix(&m, &[]);
        assert!(text.starts_with("2 2\n"));
        assert_eq!(text.lines().count(), 3);
        let (back, _) = parse_matrix(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_file_is_missing_header() {
        let err = parse_matrix("").unwrap_err();
        assert!(err.to_string().contains("missing header"));
    }

    #[test]
    fn short_file_names_missing_line() {
        let err = parse_matrix("3 2\n1 2\n3 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn bad_tokens_report_line() {
        let err = parse_matrix("# c\n2 2\n1 2\n3 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse_matrix("2 2\n1 2 3\n3 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_matrix("2\n1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn seventeen_digit_formatting() {
        assert_eq!(format_f64(1.0), "1.0000000000000000e+00");
        assert_eq!(format_f64(-0.001), "-1.0000000000000000e-03");
        assert_eq!(format_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(format_f64(f64::INFINITY), "inf");
        assert_eq!(
            format_f64(f64::INFINITY).parse::<f64>().unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn energy_rank_is_smallest_sufficient_count() {
        let s = [3.0, 2.0, 1.0];
        // energies 9, 4, 1 of 14
        assert_eq!(energy_rank(&s, 0.5), 1);
        assert_eq!(energy_rank(&s, 9.0 / 14.0), 1);
        assert_eq!(energy_rank(&s, 0.9), 2);
        assert_eq!(energy_rank(&s, 1.0), 3);
    }
}
