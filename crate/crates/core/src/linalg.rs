//! Small dense helpers shared by the selection, reconstruction and ROM code.

use nalgebra::{DMatrix, DVector};

/// Relative rank tolerance applied to the leading pivot of a rank-revealing QR.
pub const RANK_TOL: f64 = 1e-12;

/// Largest absolute entry of `MᵀM − I`.
pub fn orthonormality_deviation(m: &DMatrix<f64>) -> f64 {
    let gram = m.tr_mul(m);
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Rows of `m` at `rows`, in the given order.
pub fn gather_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn gather(v: &DVector<f64>, rows: &[usize]) -> DVector<f64> {
    DVector::from_iterator(rows.len(), rows.iter().map(|&i| v[i]))
}

/// Leading `k` columns of `m`.
pub fn leading_columns(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    m.columns(0, k).into_owned()
}

/// Thin orthonormal factor of a full-column-rank matrix, with the sign of each
/// column fixed so that `R` has a nonnegative diagonal.
pub fn thin_q(a: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Extends the orthonormal columns of `basis` to an orthonormal basis of the
/// whole space.
pub fn complete_orthonormal_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.nrows();
    let k = basis.ncols();
    let mut out = DMatrix::zeros(n, n);
    out.columns_mut(0, k).copy_from(basis);
    let mut filled = k;
    for e in 0..n {
        if filled == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for j in 0..filled {
                let c = out.column(j).dot(&v);
                v.axpy(-c, &out.column(j), 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            out.column_mut(filled).copy_from(&(v / norm));
            filled += 1;
        }
    }
    out
}

/// Thin singular value decomposition `A = U diag(σ) Vᵀ`, `σ` descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    /// `V diag(1/σ) Uᵀ`, dropping singular values at or below `cutoff`.
    pub fn pseudo_inverse(&self, cutoff: f64) -> DMatrix<f64> {
        let mut vs = self.v.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            let scale = if s > cutoff { 1.0 / s } else { 0.0 };
            vs.column_mut(j).scale_mut(scale);
        }
        vs * self.u.transpose()
    }
}

/// One-sided (Hestenes) Jacobi SVD. Column pairs are rotated until every pair
/// is orthogonal to working precision, which keeps clustered singular values
/// accurate; nalgebra's bidiagonal SVD loses digits on such spectra, notably
/// on row subsets of orthonormal matrices.
pub fn jacobi_svd(a: &DMatrix<f64>) -> ThinSvd {
    let (rows, cols) = a.shape();
    if rows < cols {
        let t = jacobi_svd(&a.transpose());
        return ThinSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    let tol = f64::EPSILON * (rows as f64).sqrt();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for i in 0..m.nrows() {
                        let (xp, xq) = (m[(i, p)], m[(i, q)]);
                        m[(i, p)] = c * xp - s * xq;
                        m[(i, q)] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::zeros(rows, cols);
    let mut vs = DMatrix::zeros(cols, cols);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.column_mut(k).copy_from(&(w.column(j) / norms[j]));
        }
        vs.column_mut(k).copy_from(&v.column(j));
    }
    ThinSvd {
        u,
        singular_values: DVector::from_iterator(cols, order.iter().map(|&j| norms[j])),
        v: vs,
    }
}

/// Minimum-norm least-squares solver for a fixed matrix.
///
/// Full-column-rank matrices are solved through a column-pivoted QR. When the
/// pivoted diagonal drops below `RANK_TOL` times the leading pivot the solver
/// falls back to an SVD pseudoinverse with the same relative cutoff.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    rows: usize,
    cols: usize,
    rank: usize,
    route: Route,
}

#[derive(Debug, Clone)]
enum Route {
    Qr {
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        perm: Vec<usize>,
    },
    Pinv(DMatrix<f64>),
}

impl LeastSquares {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (rows, cols) = a.shape();
        if rows == 0 || cols == 0 {
            return Self {
                rows,
                cols,
                rank: 0,
                route: Route::Pinv(DMatrix::zeros(cols, rows)),
            };
        }
        let qr = a.clone().col_piv_qr();
        let r = qr.r();
        let lead = r[(0, 0)].abs();
        let diag = rows.min(cols);
        let rank = if lead == 0.0 {
            0
        } else {
            (0..diag)
                .take_while(|&i| r[(i, i)].abs() > RANK_TOL * lead)
                .count()
        };
        if rank == cols {
            // Column permutation: A·P = Q·R, recover P by permuting the identity.
            let mut ident = DMatrix::<f64>::identity(cols, cols);
            qr.p().permute_columns(&mut ident);
            let perm = (0..cols)
                .map(|j| ident.column(j).iamax())
                .collect::<Vec<_>>();
            Self {
                rows,
                cols,
                rank,
                route: Route::Qr {
                    q: qr.q(),
                    r: r.rows(0, cols).into_owned(),
                    perm,
                },
            }
        } else {
            let svd = jacobi_svd(a);
            let pinv = svd.pseudo_inverse(RANK_TOL * svd.singular_values.max());
            Self {
                rows,
                cols,
                rank,
                route: Route::Pinv(pinv),
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_column_rank(&self) -> bool {
        self.rank == self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// `argmin ‖A x − b‖`, minimum norm among minimizers.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        assert_eq!(b.len(), self.rows, "least-squares rhs length");
        match &self.route {
            Route::Qr { q, r, perm } => {
                let z = q.tr_mul(b);
                let z = r
                    .solve_upper_triangular(&z)
                    .expect("full-rank triangular factor");
                let mut x = DVector::zeros(self.cols);
                for (j, &col) in perm.iter().enumerate() {
                    x[col] = z[j];
                }
                x
            }
            Route::Pinv(p) => p * b,
        }
    }

    /// Column-wise `solve` for a matrix right-hand side.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.cols, b.ncols());
        for j in 0..b.ncols() {
            out.column_mut(j)
                .copy_from(&self.solve(&b.column(j).into_owned()));
        }
        out
    }

    /// Explicit pseudoinverse, `cols × rows`.
    pub fn pseudo_inverse(&self) -> DMatrix<f64> {
        self.solve_matrix(&DMatrix::identity(self.rows, self.rows))
    }
}

/// Extreme singular values of a small matrix.
pub fn singular_value_range(a: &DMatrix<f64>) -> (f64, f64) {
    let s = jacobi_svd(a).singular_values;
    (s.max(), s.min())
}
