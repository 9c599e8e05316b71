//! Forward stepwise selection as a guided QR decomposition.
//!
//! The state keeps an orthonormal basis `Q` of the active columns, the
//! triangular factor `R`, the response residual `P⊥y`, and for every
//! remaining column its projection `P⊥xⱼ` onto the orthogonal complement of
//! the active span. Adding a column is one modified Gram-Schmidt step over the
//! remaining columns, `O(n·(p-k))`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, norm, sq_norm, Matrix};
use crate::scalar::Real;

/// Relative orthogonalized-norm threshold below which a column counts as
/// collinear with the active set.
pub const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegenerateColumn {
    pub column: usize,
}

/// Incrementally maintained QR factorization of the active columns.
#[derive(Debug, Clone)]
pub struct QrState<T> {
    n: usize,
    active: Vec<usize>,
    in_active: Vec<bool>,
    q: Vec<Vec<T>>,
    /// `r_cols[k]` is column `k` of `R` (length `k + 1`).
    r_cols: Vec<Vec<T>>,
    /// Current `P⊥xⱼ` for every column.
    ortho: Vec<Vec<T>>,
    /// Accumulated `qᵢᵀxⱼ` coefficients for every column.
    coefs: Vec<Vec<T>>,
    col_norms: Vec<T>,
    resid: Vec<T>,
    /// `Qᵀy`
    qty: Vec<T>,
}

impl<T: Real> QrState<T> {
    pub fn new(x: &Matrix<T>, y: &[T]) -> Self {
        let p = x.ncols();
        Self {
            n: x.nrows(),
            active: Vec::new(),
            in_active: vec![false; p],
            q: Vec::new(),
            r_cols: Vec::new(),
            ortho: (0..p).map(|j| x.col(j).to_vec()).collect(),
            coefs: vec![Vec::new(); p],
            col_norms: (0..p).map(|j| norm(x.col(j))).collect(),
            resid: y.to_vec(),
            qty: Vec::new(),
        }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn residual(&self) -> &[T] {
        &self.resid
    }

    /// Orthogonalized copy of column `j` (meaningful for inactive `j`).
    pub fn orthogonalized(&self, j: usize) -> &[T] {
        &self.ortho[j]
    }

    /// `Q` as an `n × k` matrix.
    pub fn q(&self) -> Matrix<T> {
        let mut data = Vec::with_capacity(self.n * self.q.len());
        for c in &self.q {
            data.extend_from_slice(c);
        }
        Matrix::from_col_major(self.n, self.q.len(), data).expect("consistent shape")
    }

    /// `R` as a `k × k` upper triangular matrix.
    pub fn r(&self) -> Matrix<T> {
        let k = self.r_cols.len();
        Matrix::from_fn(k, k, |i, j| {
            if i <= j {
                self.r_cols[j][i]
            } else {
                T::zero()
            }
        })
    }

    /// Whether column `j` is still a candidate: inactive with a
    /// non-negligible orthogonalized norm.
    pub fn is_candidate(&self, j: usize) -> bool {
        !self.in_active[j]
            && self.col_norms[j] > T::zero()
            && norm(&self.ortho[j]) > T::lit(COLLINEAR_TOL) * self.col_norms[j]
    }

    /// `|xⱼᵀP⊥y| / ‖P⊥xⱼ‖`
    pub fn score(&self, j: usize) -> T {
        let o = &self.ortho[j];
        dot(o, &self.resid).abs() / norm(o)
    }

    /// Adds column `j` to the factorization.
    pub fn insert(&mut self, j: usize) -> std::result::Result<(), DegenerateColumn> {
        assert!(!self.in_active[j], "column {j} already active");
        // Second Gram-Schmidt pass against the current basis.
        let mut col = std::mem::take(&mut self.ortho[j]);
        for (i, qi) in self.q.iter().enumerate() {
            let c = dot(qi, &col);
            axpy(-c, qi, &mut col);
            self.coefs[j][i] = self.coefs[j][i] + c;
        }
        let nrm = norm(&col);
        if !(nrm > T::lit(COLLINEAR_TOL) * self.col_norms[j]) {
            self.ortho[j] = col;
            return Err(DegenerateColumn { column: j });
        }
        let qk: Vec<T> = col.iter().map(|&v| v / nrm).collect();
        let mut rcol = std::mem::take(&mut self.coefs[j]);
        rcol.push(nrm);
        self.r_cols.push(rcol);
        for l in 0..self.ortho.len() {
            if l == j || self.in_active[l] {
                continue;
            }
            let t = dot(&qk, &self.ortho[l]);
            axpy(-t, &qk, &mut self.ortho[l]);
            self.coefs[l].push(t);
        }
        let z = dot(&qk, &self.resid);
        axpy(-z, &qk, &mut self.resid);
        self.qty.push(z);
        self.q.push(qk);
        self.ortho[j] = col;
        self.in_active[j] = true;
        self.active.push(j);
        Ok(())
    }

    /// Least-squares coefficients on the active columns by back substitution,
    /// as a full-length vector.
    pub fn coefficients(&self, p: usize) -> Vec<T> {
        let k = self.active.len();
        let mut b = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = self.qty[i];
            for jj in i + 1..k {
                s = s - self.r_cols[jj][i] * b[jj];
            }
            b[i] = s / self.r_cols[i][i];
        }
        let mut beta = vec![T::zero(); p];
        for (&j, &v) in self.active.iter().zip(&b) {
            beta[j] = v;
        }
        beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepwisePath<T> {
    /// Selected columns `j₁..j_K`.
    pub order: Vec<usize>,
    /// Entry score of each selected column.
    pub scores: Vec<T>,
    /// `K + 1` coefficient vectors, starting with the empty model.
    pub betas: Vec<Vec<T>>,
    pub rss: Vec<T>,
    /// Set when selection stopped before `kmax` because every remaining
    /// column was collinear with the active set.
    pub truncated: bool,
}

/// Forward stepwise path up to `kmax` variables. Ties in the entry score go
/// to the lowest column index.
pub fn fs_path<T: Real>(x: &Matrix<T>, y: &[T], kmax: usize) -> Result<StepwisePath<T>> {
    let (n, p) = (x.nrows(), x.ncols());
    if n == 0 || p == 0 {
        return Err(Error::Shape("empty design matrix".into()));
    }
    if y.len() != n {
        return Err(Error::Shape(format!("X has {n} rows, y has {} entries", y.len())));
    }
    if kmax == 0 || kmax > n.min(p) {
        return Err(invalid(format!("kmax must lie in 1..={} (got {kmax})", n.min(p))));
    }
    let mut state = QrState::new(x, y);
    let mut path = StepwisePath {
        order: Vec::with_capacity(kmax),
        scores: Vec::with_capacity(kmax),
        betas: vec![vec![T::zero(); p]],
        rss: vec![sq_norm(y)],
        truncated: false,
    };
    while path.order.len() < kmax {
        let mut best: Option<(usize, T)> = None;
        for j in 0..p {
            if !state.is_candidate(j) {
                continue;
            }
            let s = state.score(j);
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((j, s));
            }
        }
        let Some((j, score)) = best else {
            path.truncated = true;
            break;
        };
        if state.insert(j).is_err() {
            // The second orthogonalization pass found the column collinear;
            // it is no longer a candidate, rescan.
            continue;
        }
        path.order.push(j);
        path.scores.push(score);
        path.betas.push(state.coefficients(p));
        path.rss.push(sq_norm(state.residual()));
    }
    Ok(path)
}
