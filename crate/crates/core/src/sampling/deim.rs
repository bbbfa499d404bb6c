//! Oversampled DEIM: greedy selection by gappy reconstruction error.

use nalgebra::DMatrix;

use super::{argmax_eligible, check_selection_input, SampleSet, SamplingAlgorithm, Selector};
use crate::error::Result;
use crate::linalg::{self, LeastSquares};

/// Column-by-column greedy selection. Column `j` contributes
/// `ceil((n − 1)/(p − 1))` rows, each at the largest entry of the error left by
/// reconstructing `φ_j` from the rows chosen so far through `φ_1..φ_{j−1}`.
///
/// Rows that are already selected are excluded from each argmax, so every
/// step adds a new row and the loop stops after exactly `n` additions. With a
/// single column the `n` largest-magnitude rows of `φ_1` are returned.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeimOversampled;

impl Selector for DeimOversampled {
    fn name(&self) -> &'static str {
        "deim"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["deim_oversampled"]
    }

    fn algorithm(&self) -> SamplingAlgorithm {
        SamplingAlgorithm::DeimOversampled
    }

    fn select(&self, q: &DMatrix<f64>, n: usize) -> Result<SampleSet> {
        check_selection_input(q, n)?;
        let (rows, p) = q.shape();
        let indices = if p == 1 {
            magnitude_ranking(q, n)
        } else {
            greedy(q, n)
        };
        SampleSet::new(indices, rows, SamplingAlgorithm::DeimOversampled)
    }
}

fn magnitude_ranking(q: &DMatrix<f64>, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..q.nrows()).collect();
    // stable sort keeps the smallest index first among equal magnitudes
    order.sort_by(|&a, &b| q[(b, 0)].abs().total_cmp(&q[(a, 0)].abs()));
    order.truncate(n);
    order
}

fn greedy(q: &DMatrix<f64>, n: usize) -> Vec<usize> {
    let (rows, p) = q.shape();
    let mut eligible = vec![true; rows];
    let mut selected = Vec::with_capacity(n);

    let first =
        argmax_eligible(q.column(0).iter().map(|v| v.abs()), &eligible).expect("basis has rows");
    eligible[first] = false;
    selected.push(first);
    if selected.len() == n {
        return selected;
    }

    let per_column = (n - 1).div_ceil(p - 1);
    for j in 1..p {
        let previous = linalg::leading_columns(q, j);
        let target = q.column(j).into_owned();
        for _ in 0..per_column {
            let sampled = linalg::gather_rows(&previous, &selected);
            let coeffs = LeastSquares::new(&sampled).solve(&linalg::gather(&target, &selected));
            let error = &target - &previous * coeffs;
            let next = argmax_eligible(error.iter().map(|e| e.abs()), &eligible)
                .expect("fewer than n rows selected");
            eligible[next] = false;
            selected.push(next);
            if selected.len() == n {
                return selected;
            }
        }
    }
    selected
}
