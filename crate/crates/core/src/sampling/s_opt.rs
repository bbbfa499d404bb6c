//! Greedy S-optimal row selection.
//!
//! Step `j` scores every unselected row `ℓ` by the S quantity of the sampled
//! basis `Q_{1:k}` restricted to the current rows plus `ℓ`, with
//! `k = min(j, p)`. Candidate scores are computed from the current Gram
//! factorization instead of from scratch:
//!
//! * while `j ≤ p` the sampled block has one row fewer than columns, so
//!   `det(Gₗ) = det(BBᵀ) · ‖(I − P_B) q‖²` with `P_B` the projector onto the
//!   row space of the current block `B`;
//! * once `j > p` the Gram matrix `G = BᵀB` is nonsingular and
//!   `det(G + qqᵀ) = det(G) (1 + ‖L⁻¹q‖²)` for its Cholesky factor `L`,
//!   which is rank-one updated after each acceptance.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{
    argmax_eligible, check_selection_input, s_quantity, SampleSet, SamplingAlgorithm, Selector,
};
use crate::error::Result;
use crate::linalg;

/// One accepted greedy step.
#[derive(Debug, Clone, PartialEq)]
pub struct SOptStep {
    pub index: usize,
    /// Number of basis columns scored at this step.
    pub columns: usize,
    /// Incrementally maintained S quantity of the selection after this step.
    pub s_value: f64,
}

#[derive(Debug, Clone)]
pub struct SOpt {
    /// Rebuild the Gram factor from scratch after this many rank-one updates.
    pub refactor_interval: usize,
}

impl Default for SOpt {
    fn default() -> Self {
        Self {
            refactor_interval: 32,
        }
    }
}

impl Selector for SOpt {
    fn name(&self) -> &'static str {
        "s_opt"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["sopt"]
    }

    fn algorithm(&self) -> SamplingAlgorithm {
        SamplingAlgorithm::SOpt
    }

    fn select(&self, modes: &DMatrix<f64>, n: usize) -> Result<SampleSet> {
        let steps = self.select_traced(modes, n)?;
        SampleSet::new(
            steps.into_iter().map(|s| s.index).collect(),
            modes.nrows(),
            SamplingAlgorithm::SOpt,
        )
    }
}

impl SOpt {
    /// Runs the greedy selection and reports the S value after every step.
    pub fn select_traced(&self, q: &DMatrix<f64>, n: usize) -> Result<Vec<SOptStep>> {
        check_selection_input(q, n)?;
        let (rows, p) = q.shape();
        let mut eligible = vec![true; rows];
        let mut selected: Vec<usize> = Vec::with_capacity(n);
        let mut steps = Vec::with_capacity(n);

        let first = argmax_eligible(q.column(0).iter().map(|v| v.abs()), &eligible)
            .expect("basis has at least one row");
        eligible[first] = false;
        selected.push(first);
        steps.push(SOptStep {
            index: first,
            columns: 1,
            s_value: 1.0,
        });

        // Square phase: j = 2..=min(n, p), k = j, |S| = j - 1.
        let square_end = n.min(p);
        for j in 2..=square_end {
            let (index, log_s) = square_step(q, j, &selected, &eligible);
            eligible[index] = false;
            selected.push(index);
            steps.push(SOptStep {
                index,
                columns: j,
                s_value: log_s.exp(),
            });
        }
        if n <= p {
            return Ok(steps);
        }

        // Overdetermined phase: k = p, Gram factor maintained incrementally.
        let mut gram = GramState::build(q, &selected);
        let mut since_refactor = 0;
        for _ in (p + 1)..=n {
            let (index, log_s) = match &gram.factor {
                Some(chol) => overdetermined_step(q, chol, &gram, &eligible),
                None => naive_step(q, p, &selected, &eligible),
            };
            eligible[index] = false;
            selected.push(index);
            steps.push(SOptStep {
                index,
                columns: p,
                s_value: log_s.exp(),
            });
            since_refactor += 1;
            if gram.factor.is_none() || since_refactor >= self.refactor_interval {
                gram = GramState::build(q, &selected);
                since_refactor = 0;
            } else {
                gram.accept(&q.row(index).transpose());
            }
        }
        Ok(steps)
    }
}

fn log_sum(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v.ln()).sum()
}

/// Combines `log det(G)` and squared column norms into `log S`, mapping any
/// zero factor to `-inf`.
fn log_s(log_det: f64, col_norms_sq: impl Iterator<Item = f64>, k: usize) -> f64 {
    if log_det == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let ln = log_sum(col_norms_sq);
    if !ln.is_finite() {
        return f64::NEG_INFINITY;
    }
    (0.5 * log_det - 0.5 * ln) / k as f64
}

/// Scores candidates when the current block has `k − 1` rows and `k` columns.
fn square_step(q: &DMatrix<f64>, k: usize, selected: &[usize], eligible: &[bool]) -> (usize, f64) {
    let block = linalg::gather_rows(&linalg::leading_columns(q, k), selected);
    // Orthonormal basis of the row space of `block` and det(B Bᵀ).
    let bt = block.transpose();
    let qr = bt.clone().qr();
    let r = qr.r();
    let log_det_b: f64 = (0..k - 1).map(|i| 2.0 * r[(i, i)].abs().ln()).sum();
    let w = qr.q();
    let base_norms: Vec<f64> = (0..k).map(|c| block.column(c).norm_squared()).collect();

    let mut scores = vec![f64::NEG_INFINITY; q.nrows()];
    if log_det_b.is_finite() {
        for (l, score) in scores.iter_mut().enumerate() {
            if !eligible[l] {
                continue;
            }
            let row: DVector<f64> = q.view((l, 0), (1, k)).transpose().column(0).into_owned();
            let resid = &row - &w * w.tr_mul(&row);
            let dist_sq = resid.norm_squared();
            let log_det = if dist_sq > 0.0 {
                log_det_b + dist_sq.ln()
            } else {
                f64::NEG_INFINITY
            };
            *score = log_s(log_det, (0..k).map(|c| base_norms[c] + row[c] * row[c]), k);
        }
    }
    pick(&scores, eligible)
}

/// Log-domain slack within which two candidate scores count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Best eligible score; among candidates within [`TIE_TOL`] of it the
/// smallest index wins, so roundoff in the incremental updates cannot decide
/// genuine ties (every candidate ties when the basis has one column).
fn pick(scores: &[f64], eligible: &[bool]) -> (usize, f64) {
    let best =
        argmax_eligible(scores.iter().copied(), eligible).expect("an unselected row remains");
    let index = (0..scores.len())
        .find(|&i| eligible[i] && scores[i] >= scores[best] - TIE_TOL)
        .unwrap_or(best);
    (index, scores[index])
}

/// Gram matrix of the selected rows of the full basis, kept as a Cholesky factor.
struct GramState {
    factor: Option<Cholesky<f64, Dyn>>,
    log_det: f64,
    col_norms_sq: Vec<f64>,
}

impl GramState {
    fn build(q: &DMatrix<f64>, selected: &[usize]) -> Self {
        let block = linalg::gather_rows(q, selected);
        let col_norms_sq = block.column_iter().map(|c| c.norm_squared()).collect();
        let factor = Cholesky::new(block.tr_mul(&block));
        let log_det = factor
            .as_ref()
            .map(chol_log_det)
            .unwrap_or(f64::NEG_INFINITY);
        let factor = factor.filter(|_| log_det.is_finite());
        Self {
            factor,
            log_det,
            col_norms_sq,
        }
    }

    fn accept(&mut self, row: &DVector<f64>) {
        if let Some(chol) = self.factor.as_mut() {
            chol.rank_one_update(row, 1.0);
            self.log_det = chol_log_det(chol);
        }
        for (c, v) in self.col_norms_sq.iter_mut().zip(row.iter()) {
            *c += v * v;
        }
    }
}

fn chol_log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    c.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum()
}

fn overdetermined_step(
    q: &DMatrix<f64>,
    chol: &Cholesky<f64, Dyn>,
    gram: &GramState,
    eligible: &[bool],
) -> (usize, f64) {
    let p = q.ncols();
    let l = chol.l();
    let mut scores = vec![f64::NEG_INFINITY; q.nrows()];
    for (i, score) in scores.iter_mut().enumerate() {
        if !eligible[i] {
            continue;
        }
        let row: DVector<f64> = q.row(i).transpose();
        let w = l
            .solve_lower_triangular(&row)
            .expect("Cholesky factor has a positive diagonal");
        let log_det = gram.log_det + w.norm_squared().ln_1p();
        *score = log_s(
            log_det,
            (0..p).map(|c| gram.col_norms_sq[c] + row[c] * row[c]),
            p,
        );
    }
    pick(&scores, eligible)
}

/// Direct evaluation for the rare case of a singular Gram matrix.
fn naive_step(q: &DMatrix<f64>, p: usize, selected: &[usize], eligible: &[bool]) -> (usize, f64) {
    let mut rows = selected.to_vec();
    rows.push(0);
    let last = rows.len() - 1;
    let mut scores = vec![f64::NEG_INFINITY; q.nrows()];
    for (i, score) in scores.iter_mut().enumerate() {
        if !eligible[i] {
            continue;
        }
        rows[last] = i;
        let block = linalg::gather_rows(&linalg::leading_columns(q, p), &rows);
        *score = s_quantity(&block)
            .ok()
            .filter(|s| s.value > 0.0)
            .map(|s| s.value.ln())
            .unwrap_or(f64::NEG_INFINITY);
    }
    pick(&scores, eligible)
}
