mod common;

use common::{max_abs, random_matrix, random_orthonormal, random_vector, rng};
use hyperrom::hyperreduction::{
    error_report, ErrorAnalyzer, GappyOperator, HyperMode, ProjectionErrorReport,
};
use hyperrom::sampling::{SOpt, SampleSet, SamplingAlgorithm, Selector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_samples(r: &mut impl Rng, rows: usize, n: usize) -> SampleSet {
    let mut idx: Vec<usize> = (0..rows).collect();
    for i in (1..rows).rev() {
        idx.swap(i, r.random_range(0..=i));
    }
    idx.truncate(n);
    SampleSet::new(idx, rows, SamplingAlgorithm::Manual).unwrap()
}

/// Dense `Zᵀ` built explicitly from the identity.
fn selection_matrix(s: &SampleSet) -> DMatrix<f64> {
    DMatrix::from_fn(s.len(), s.full_dim(), |i, j| {
        if s.indices()[i] == j {
            1.0
        } else {
            0.0
        }
    })
}

/// `(AᵀA)⁻¹Aᵀ` for a full-column-rank `A`.
fn normal_pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.tr_mul(a)
        .cholesky()
        .expect("full column rank")
        .solve(&a.transpose())
}

#[test]
fn reconstruction_matches_dense_oblique_projector() {
    let mut r = rng(11);
    for _ in 0..50 {
        let rows = r.random_range(6..30);
        let p = r.random_range(1..5);
        let n = r.random_range(p..=rows);
        let m = random_matrix(&mut r, rows, p);
        let s = random_samples(&mut r, rows, n);
        let Ok(op) = GappyOperator::new(&m, &s, HyperMode::GappyPod) else {
            continue;
        };
        let zt = selection_matrix(&s);
        let projector = &m * normal_pinv(&(&zt * &m)) * &zt;
        let b = random_vector(&mut r, rows);
        let diff = op.approximate(&b).unwrap() - &projector * &b;
        assert!(diff.amax() < 1e-10 * (1.0 + b.amax()));
    }
}

#[test]
fn gappy_reconstruction_is_idempotent() {
    let mut r = rng(12);
    let m = random_matrix(&mut r, 20, 4);
    let s = random_samples(&mut r, 20, 9);
    let op = GappyOperator::new(&m, &s, HyperMode::GappyPod).unwrap();
    let b = random_vector(&mut r, 20);
    let once = op.approximate(&b).unwrap();
    let twice = op.approximate(&once).unwrap();
    assert!((&once - &twice).amax() < 1e-12);
    // vectors in the range of M are reproduced
    let inside = &m * random_vector(&mut r, 4);
    assert!((op.approximate(&inside).unwrap() - &inside).amax() < 1e-12);
}

#[test]
fn collocation_keeps_sampled_entries_only() {
    let mut r = rng(13);
    let m = random_matrix(&mut r, 10, 2);
    let s = random_samples(&mut r, 10, 4);
    let op = GappyOperator::new(&m, &s, HyperMode::Collocation).unwrap();
    let b = random_vector(&mut r, 10);
    let zt = selection_matrix(&s);
    let expected = zt.transpose() * &zt * &b;
    assert_eq!(op.approximate(&b).unwrap(), expected);
}

#[test]
fn ill_conditioned_samples_rejected() {
    let mut m = DMatrix::zeros(6, 2);
    m[(0, 0)] = 1.0;
    m[(1, 1)] = 1.0;
    m[(2, 1)] = 1e-14;
    let s = SampleSet::new(vec![0, 2], 6, SamplingAlgorithm::Manual).unwrap();
    assert!(GappyOperator::new(&m, &s, HyperMode::GappyPod).is_err());
}

#[test]
fn full_sampling_collapses_to_orthogonal_projection() {
    let mut r = rng(14);
    let q = random_orthonormal(&mut r, 25, 5);
    let b = random_vector(&mut r, 25);
    let report = error_report(&q, &SampleSet::all(25), &b).unwrap();
    assert!((report.oblique_error - report.orthogonal_error).abs() < 1e-12);
    assert!(report.epsilon_norm < 1e-12);
}

#[test]
fn s_opt_error_tracks_orthogonal_error_as_samples_grow() {
    let mut r = rng(15);
    let q = random_orthonormal(&mut r, 200, 6);
    let snapshots: Vec<_> = (0..10).map(|_| random_vector(&mut r, 200)).collect();
    let order = SOpt::default().select(&q, 200).unwrap();
    let mean = |n: usize| {
        let a = ErrorAnalyzer::new(&q, &order.prefix(n)).unwrap();
        snapshots
            .iter()
            .map(|b| a.report(b).unwrap().oblique_error)
            .sum::<f64>()
            / 10.0
    };
    let orth = snapshots
        .iter()
        .map(|b| (b - &q * q.tr_mul(b)).norm())
        .sum::<f64>()
        / 10.0;
    assert!(mean(200) - orth < 1e-10);
    assert!(mean(6) >= mean(200));
}

#[test]
fn report_csv_row() {
    let rep = ProjectionErrorReport {
        oblique_error: 1.0,
        orthogonal_error: 0.5,
        epsilon_norm: 0.25,
        bound: 2.0,
        target_norm: 3.0,
    };
    assert_eq!(ProjectionErrorReport::CSV_HEADER.split(',').count(), 5);
    assert!(rep.csv_row(7).starts_with("7,1.0000000000000000e+00,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn equality_and_bound_hold(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let rows = r.random_range(2..=50);
        let p = r.random_range(1..=8.min(rows));
        let n = r.random_range(p..=rows);
        let q = random_orthonormal(&mut r, rows, p);
        let s = random_samples(&mut r, rows, n);
        let b = random_vector(&mut r, rows);
        let Ok(rep) = error_report(&q, &s, &b) else { return Ok(()) };
        prop_assert!(rep.equality_defect() <= 1e-8, "defect {}", rep.equality_defect());
        prop_assert!(rep.bound_excess() <= 1e-10, "excess {}", rep.bound_excess());
    }

    #[test]
    fn square_sampling_interpolates(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let rows = r.random_range(2..=40);
        let p = r.random_range(1..=6.min(rows));
        let q = random_orthonormal(&mut r, rows, p);
        let s = SOpt::default().select(&q, p).unwrap();
        let b = random_vector(&mut r, rows);
        let op = GappyOperator::new(&q, &s, HyperMode::GappyPod).unwrap();
        let approx = op.approximate(&b).unwrap();
        let gap = s.apply(&approx).unwrap() - s.apply(&b).unwrap();
        prop_assert!(gap.amax() <= 1e-12 * (1.0 + op.condition_number()), "gap {}", gap.amax());
    }

    #[test]
    fn coefficients_solve_sampled_least_squares(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let rows = r.random_range(3..=30);
        let p = r.random_range(1..=4.min(rows));
        let n = r.random_range(p..=rows);
        let m = random_matrix(&mut r, rows, p);
        let s = random_samples(&mut r, rows, n);
        let Ok(op) = GappyOperator::new(&m, &s, HyperMode::GappyPod) else { return Ok(()) };
        let vals = random_vector(&mut r, n);
        let c = op.coefficients(&vals).unwrap();
        let zm = s.apply_rows(&m).unwrap();
        // normal equations
        let g = zm.tr_mul(&(&zm * &c - &vals));
        prop_assert!(max_abs(&DMatrix::from_column_slice(p, 1, g.as_slice())) < 1e-9 * (1.0 + op.condition_number()));
    }
}
