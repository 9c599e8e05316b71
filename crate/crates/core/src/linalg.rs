//! Dense column-major matrices and the small set of factorizations the
//! solvers need: pivoted Householder QR, minimum-norm least squares via a
//! complete orthogonal decomposition, Cholesky, and a power iteration for the
//! largest eigenvalue of a Gram matrix.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Dense matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    /// Builds a matrix from column-major storage.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {nrows}x{ncols} matrix",
                data.len()
            )));
        }
        Ok(Self { nrows, ncols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
            return Err(Error::Shape(format!(
                "row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    pub fn as_col_major(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self.get(j, i))
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.ncols, "mul_vec dimension");
        let mut out = vec![T::zero(); self.nrows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != T::zero() {
                axpy(vj, self.col(j), &mut out);
            }
        }
        out
    }

    /// `Aᵀ v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.nrows, "tr_mul_vec dimension");
        (0..self.ncols).map(|j| dot(self.col(j), v)).collect()
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Self {
        assert_eq!(self.ncols, other.nrows, "matmul dimension");
        let mut out = Self::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let c = self.mul_vec(other.col(j));
            out.col_mut(j).copy_from_slice(&c);
        }
        out
    }

    /// Copy of the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.nrows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        Self {
            nrows: self.nrows,
            ncols: cols.len(),
            data,
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

#[inline]
pub fn sq_norm<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

pub fn norm<T: Real>(a: &[T]) -> T {
    sq_norm(a).sqrt()
}

/// `y += alpha x`.
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

pub fn max_abs<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// `y - X beta`.
pub fn residual<T: Real>(x: &Matrix<T>, y: &[T], beta: &[T]) -> Vec<T> {
    let fit = x.mul_vec(beta);
    y.iter().zip(fit).map(|(&a, b)| a - b).collect()
}

/// `‖y - X beta‖²`.
pub fn rss<T: Real>(x: &Matrix<T>, y: &[T], beta: &[T]) -> T {
    sq_norm(&residual(x, y, beta))
}

/// Generates a Householder reflector `H = I - tau v vᵀ` with `v[0] = 1`
/// mapping `x` onto a multiple of `e₁`. On return `x[0]` holds the resulting
/// diagonal value and `x[1..]` the tail of `v`.
fn make_reflector<T: Real>(x: &mut [T]) -> T {
    let tail = sq_norm(&x[1..]);
    if tail == T::zero() {
        return T::zero();
    }
    let x0 = x[0];
    let nrm = (x0 * x0 + tail).sqrt();
    let beta = if x0 >= T::zero() { -nrm } else { nrm };
    let tau = (beta - x0) / beta;
    let scale = T::one() / (x0 - beta);
    for v in &mut x[1..] {
        *v = *v * scale;
    }
    x[0] = beta;
    tau
}

/// Applies `I - tau v vᵀ` (with implicit `v[0] = 1`) to `y`.
#[inline]
fn apply_reflector<T: Real>(v_tail: &[T], tau: T, y: &mut [T]) {
    if tau == T::zero() {
        return;
    }
    let w = y[0] + dot(v_tail, &y[1..]);
    let s = tau * w;
    y[0] = y[0] - s;
    for (yi, &vi) in y[1..].iter_mut().zip(v_tail) {
        *yi = *yi - s * vi;
    }
}

/// Householder QR with column pivoting, truncated at the numerical rank.
#[derive(Debug, Clone)]
pub struct PivotedQr<T> {
    factors: Matrix<T>,
    tau: Vec<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(a: Matrix<T>) -> Self {
        let (n, m) = (a.nrows(), a.ncols());
        let mut f = a;
        let mut perm: Vec<usize> = (0..m).collect();
        let mut tau = Vec::new();
        let steps = n.min(m);
        let rank_tol = T::epsilon() * T::lit((10 * n.max(m)) as f64);
        let mut first_norm = T::zero();
        let mut rank = 0;
        for k in 0..steps {
            let (mut best, mut best_norm) = (k, T::neg_infinity());
            for j in k..m {
                let nj = norm(&f.col(j)[k..]);
                if nj > best_norm {
                    best = j;
                    best_norm = nj;
                }
            }
            if k == 0 {
                first_norm = best_norm;
            }
            if best_norm <= rank_tol * first_norm || best_norm == T::zero() {
                break;
            }
            if best != k {
                swap_columns(&mut f, k, best);
                perm.swap(k, best);
            }
            let t = make_reflector(&mut f.col_mut(k)[k..]);
            tau.push(t);
            let v_tail: Vec<T> = f.col(k)[k + 1..].to_vec();
            for j in k + 1..m {
                apply_reflector(&v_tail, t, &mut f.col_mut(j)[k..]);
            }
            rank = k + 1;
        }
        Self {
            factors: f,
            tau,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Column permutation: position `i` of the factorization holds original
    /// column `perm()[i]`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Applies `Qᵀ` (the `rank` reflectors) to `b` in place.
    pub fn apply_qt(&self, b: &mut [T]) {
        for k in 0..self.rank {
            apply_reflector(&self.factors.col(k)[k + 1..], self.tau[k], &mut b[k..]);
        }
    }

    /// Minimum-norm least-squares solution of `A x ≈ b`.
    pub fn solve(&self, b: &[T]) -> LeastSquares<T> {
        let (n, m) = (self.factors.nrows(), self.factors.ncols());
        assert_eq!(b.len(), n, "least squares rhs length");
        let mut c = b.to_vec();
        self.apply_qt(&mut c);
        let r = self.rank;
        let rss_tail = sq_norm(&c[r..]);
        let mut x = vec![T::zero(); m];
        if r == 0 {
            return LeastSquares {
                coef: x,
                rank: 0,
                rss: rss_tail,
            };
        }
        let rf = |i: usize, j: usize| self.factors.get(i, j);
        let y = if r == m {
            let mut y = vec![T::zero(); m];
            for i in (0..r).rev() {
                let mut s = c[i];
                for j in i + 1..r {
                    s = s - rf(i, j) * y[j];
                }
                y[i] = s / rf(i, i);
            }
            y
        } else {
            // Complete orthogonal decomposition: [R11 R12]ᵀ = V U.
            // w(i, j) = R(j, i): transpose of the upper trapezoid.
            let mut w = Matrix::from_fn(m, r, |i, j| if j <= i { rf(j, i) } else { T::zero() });
            let mut wtau = Vec::with_capacity(r);
            for k in 0..r {
                let t = make_reflector(&mut w.col_mut(k)[k..]);
                wtau.push(t);
                let v_tail: Vec<T> = w.col(k)[k + 1..].to_vec();
                for j in k + 1..r {
                    apply_reflector(&v_tail, t, &mut w.col_mut(j)[k..]);
                }
            }
            // Uᵀ z = c[..r]
            let mut z = vec![T::zero(); m];
            for i in 0..r {
                let mut s = c[i];
                for j in 0..i {
                    s = s - w.get(j, i) * z[j];
                }
                z[i] = s / w.get(i, i);
            }
            for k in (0..r).rev() {
                apply_reflector(&w.col(k)[k + 1..], wtau[k], &mut z[k..]);
            }
            z
        };
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        LeastSquares {
            coef: x,
            rank: r,
            rss: rss_tail,
        }
    }

    /// `R` factor (upper triangle of the leading `rank` rows), in pivoted
    /// column order.
    pub fn r(&self) -> Matrix<T> {
        let m = self.factors.ncols();
        Matrix::from_fn(self.rank, m, |i, j| {
            if i <= j {
                self.factors.get(i, j)
            } else {
                T::zero()
            }
        })
    }
}

fn swap_columns<T: Real>(a: &mut Matrix<T>, i: usize, j: usize) {
    let n = a.nrows();
    for r in 0..n {
        a.data.swap(i * n + r, j * n + r);
    }
}

/// Result of a least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    pub coef: Vec<T>,
    pub rank: usize,
    /// Residual sum of squares from the orthogonal complement of the range.
    pub rss: T,
}

/// Minimum-norm least squares `argmin ‖b - A x‖` (pseudoinverse semantics).
pub fn lstsq<T: Real>(a: &Matrix<T>, b: &[T]) -> LeastSquares<T> {
    PivotedQr::new(a.clone()).solve(b)
}

/// Least squares restricted to `cols`, returned as a full-length vector with
/// zeros outside `cols`.
pub fn lstsq_on<T: Real>(x: &Matrix<T>, cols: &[usize], y: &[T]) -> LeastSquares<T> {
    let mut coef = vec![T::zero(); x.ncols()];
    if cols.is_empty() {
        return LeastSquares {
            coef,
            rank: 0,
            rss: sq_norm(y),
        };
    }
    let sol = PivotedQr::new(x.select_columns(cols)).solve(y);
    for (&j, &c) in cols.iter().zip(&sol.coef) {
        coef[j] = c;
    }
    LeastSquares {
        coef,
        rank: sol.rank,
        rss: sol.rss,
    }
}

/// Lower Cholesky factor `L` with `L Lᵀ = A` for symmetric positive definite `A`.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape("cholesky needs a square matrix".into()));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d = d - l.get(j, k) * l.get(j, k);
        }
        if !(d > T::zero()) {
            return Err(invalid(format!("matrix not positive definite at pivot {j}")));
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s = s - l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

/// Largest eigenvalue of `XᵀX`, i.e. the squared largest singular value of
/// `X`, by power iteration.
pub fn max_sq_singular_value<T: Real>(x: &Matrix<T>) -> T {
    let p = x.ncols();
    if p == 0 || x.nrows() == 0 {
        return T::zero();
    }
    // Deterministic, non-symmetric start vector.
    let mut v: Vec<T> = (0..p)
        .map(|j| T::one() + T::lit(((j * 7919) % 101) as f64 / 101.0))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|e| *e = *e / nv);
    let mut lambda = T::zero();
    let tol = T::tol(1e-13);
    for _ in 0..20_000 {
        let u = x.tr_mul_vec(&x.mul_vec(&v));
        let next = dot(&v, &u);
        let nu = norm(&u);
        if nu == T::zero() {
            return T::zero();
        }
        v = u.into_iter().map(|e| e / nu).collect();
        let done = (next - lambda).abs() <= tol * next;
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}
