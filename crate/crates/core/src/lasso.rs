//! Lasso by cyclic coordinate descent with warm starts and active-set
//! iterations, and the simplified relaxed lasso built on top of a lasso path.
//!
//! The objective is `½‖y - Xβ‖² + λ‖β‖₁`, so the smallest penalty with an
//! all-zero solution is `λ_max = ‖Xᵀy‖∞`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, cholesky, dot, lstsq_on, max_abs, residual, sq_norm, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct CdOptions<T> {
    /// Stop when a full sweep moves no coordinate by more than
    /// `tol · (1 + ‖β‖∞)`.
    pub tol: T,
    pub max_sweeps: usize,
    /// Allowed `max_j (|Xⱼᵀr| - λ)₊`, scaled by `1 + λ`.
    pub kkt_tol: T,
    /// Allowed `|sign(βⱼ) Xⱼᵀr - λ|` on the active set.
    pub active_tol: T,
}

impl<T: Real> Default for CdOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-9),
            max_sweeps: 100_000,
            kkt_tol: T::tol(1e-7),
            active_tol: T::tol(1e-6),
        }
    }
}

#[inline]
pub fn soft_threshold<T: Real>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}

/// `½‖y - Xβ‖² + λ‖β‖₁`
pub fn objective<T: Real>(x: &Matrix<T>, y: &[T], beta: &[T], lambda: T) -> T {
    let l1 = beta.iter().fold(T::zero(), |s, b| s + b.abs());
    T::lit(0.5) * sq_norm(&residual(x, y, beta)) + lambda * l1
}

/// Stationarity residuals of a candidate lasso solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport<T> {
    /// `max_j (|Xⱼᵀr| - λ)₊`
    pub max_violation: T,
    /// `max_{j: βⱼ≠0} |sign(βⱼ)·Xⱼᵀr - λ|`
    pub max_active_gap: T,
}

impl<T: Real> KktReport<T> {
    pub fn passes(&self, lambda: T, opts: &CdOptions<T>) -> bool {
        self.max_violation <= opts.kkt_tol * (T::one() + lambda)
            && self.max_active_gap <= opts.active_tol
    }
}

pub fn kkt_check<T: Real>(x: &Matrix<T>, y: &[T], beta: &[T], lambda: T) -> KktReport<T> {
    kkt_from_residual(x, &residual(x, y, beta), beta, lambda)
}

fn kkt_from_residual<T: Real>(x: &Matrix<T>, r: &[T], beta: &[T], lambda: T) -> KktReport<T> {
    let mut rep = KktReport {
        max_violation: T::zero(),
        max_active_gap: T::zero(),
    };
    for (j, &b) in beta.iter().enumerate() {
        let g = dot(x.col(j), r);
        rep.max_violation = rep.max_violation.max(g.abs() - lambda);
        if b != T::zero() {
            rep.max_active_gap = rep.max_active_gap.max((b.signum() * g - lambda).abs());
        }
    }
    rep
}

/// Sweeps between attempts at an exact solve on a slowly converging support.
const POLISH_EVERY: usize = 500;

struct CoordinateDescent<'a, T> {
    x: &'a Matrix<T>,
    y: &'a [T],
    col_sq: Vec<T>,
    opts: CdOptions<T>,
}

impl<'a, T: Real> CoordinateDescent<'a, T> {
    fn new(x: &'a Matrix<T>, y: &'a [T], opts: CdOptions<T>) -> Self {
        let col_sq = (0..x.ncols()).map(|j| sq_norm(x.col(j))).collect();
        Self { x, y, col_sq, opts }
    }

    /// One pass over `coords`; returns the largest coordinate move.
    fn sweep(
        &self,
        coords: impl Iterator<Item = usize>,
        lambda: T,
        beta: &mut [T],
        r: &mut [T],
    ) -> T {
        let mut max_change = T::zero();
        for j in coords {
            let cj = self.col_sq[j];
            if cj == T::zero() {
                continue;
            }
            let old = beta[j];
            let z = dot(self.x.col(j), r) + cj * old;
            let new = soft_threshold(z, lambda) / cj;
            let d = new - old;
            if d != T::zero() {
                axpy(-d, self.x.col(j), r);
                beta[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        max_change
    }

    /// Exact solution of the stationarity equations on the current support
    /// and signs, or `None` if the Gram matrix is singular or a sign flips.
    fn polish(&self, lambda: T, beta: &[T]) -> Option<Vec<T>> {
        let active: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != T::zero()).collect();
        if active.is_empty() || active.len() > self.x.nrows() {
            return None;
        }
        let m = active.len();
        let gram = Matrix::from_fn(m, m, |a, b| dot(self.x.col(active[a]), self.x.col(active[b])));
        let l = cholesky(&gram).ok()?;
        let mut z: Vec<T> = active
            .iter()
            .map(|&j| dot(self.x.col(j), self.y) - lambda * beta[j].signum())
            .collect();
        for i in 0..m {
            let mut v = z[i];
            for k in 0..i {
                v = v - l.get(i, k) * z[k];
            }
            z[i] = v / l.get(i, i);
        }
        for i in (0..m).rev() {
            let mut v = z[i];
            for k in i + 1..m {
                v = v - l.get(k, i) * z[k];
            }
            z[i] = v / l.get(i, i);
        }
        let mut out = vec![T::zero(); beta.len()];
        for (&j, &v) in active.iter().zip(&z) {
            if !v.is_finite() || v.signum() != beta[j].signum() {
                return None;
            }
            out[j] = v;
        }
        Some(out)
    }

    fn solve(&self, lambda: T, beta: &mut [T]) -> Result<usize> {
        let p = self.x.ncols();
        let mut r = residual(self.x, self.y, beta);
        let mut sweeps = 0;
        let fail = |beta: &[T], r: &[T], sweeps: usize| {
            let kkt = kkt_from_residual(self.x, r, beta, lambda);
            Error::NonConvergence {
                lambda: lambda.as_f64(),
                sweeps,
                kkt_residual: kkt.max_violation.max(kkt.max_active_gap).as_f64(),
                last_iterate: beta.iter().map(|b| b.as_f64()).collect(),
            }
        };
        let mut tol = self.opts.tol;
        loop {
            let change = self.sweep(0..p, lambda, beta, &mut r);
            sweeps += 1;
            if change <= tol * (T::one() + max_abs(beta)) {
                r = residual(self.x, self.y, beta);
                if kkt_from_residual(self.x, &r, beta, lambda).passes(lambda, &self.opts) {
                    return Ok(sweeps);
                }
                if let Some(polished) = self.polish(lambda, beta) {
                    let pr = residual(self.x, self.y, &polished);
                    if kkt_from_residual(self.x, &pr, &polished, lambda).passes(lambda, &self.opts) {
                        beta.copy_from_slice(&polished);
                        return Ok(sweeps);
                    }
                }
                if change == T::zero() {
                    return Err(fail(beta, &r, sweeps));
                }
                tol = (tol * T::tol(0.1)).max(T::epsilon());
            }
            if sweeps >= self.opts.max_sweeps {
                return Err(fail(beta, &r, sweeps));
            }
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != T::zero()).collect();
            loop {
                let change = self.sweep(active.iter().copied(), lambda, beta, &mut r);
                sweeps += 1;
                if change <= tol * (T::one() + max_abs(beta)) {
                    break;
                }
                if sweeps % POLISH_EVERY == 0 {
                    if let Some(polished) = self.polish(lambda, beta) {
                        let pr = residual(self.x, self.y, &polished);
                        if kkt_from_residual(self.x, &pr, &polished, lambda).passes(lambda, &self.opts) {
                            beta.copy_from_slice(&polished);
                            return Ok(sweeps);
                        }
                    }
                }
                if sweeps >= self.opts.max_sweeps {
                    return Err(fail(beta, &r, sweeps));
                }
            }
        }
    }
}

/// Lasso solution at a single penalty, optionally warm-started.
pub fn lasso_fit<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    lambda: T,
    warm: Option<&[T]>,
    opts: &CdOptions<T>,
) -> Result<Vec<T>> {
    check_xy(x, y)?;
    if !(lambda >= T::zero()) {
        return Err(invalid(format!("lambda must be nonnegative (got {lambda})")));
    }
    let mut beta = match warm {
        Some(w) if w.len() == x.ncols() => w.to_vec(),
        Some(w) => {
            return Err(Error::Shape(format!(
                "warm start has length {}, expected {}",
                w.len(),
                x.ncols()
            )))
        }
        None => vec![T::zero(); x.ncols()],
    };
    CoordinateDescent::new(x, y, *opts).solve(lambda, &mut beta)?;
    Ok(beta)
}

fn check_xy<T: Real>(x: &Matrix<T>, y: &[T]) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Shape("empty design matrix".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "X has {} rows, y has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Penalty grid. `degenerate` is set when `Xᵀy = 0`, in which case the grid
/// is the single point `{0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid<T> {
    pub values: Vec<T>,
    pub degenerate: bool,
}

/// `m` log-spaced penalties from `‖Xᵀy‖∞` down to `eps·‖Xᵀy‖∞`.
pub fn lambda_grid<T: Real>(x: &Matrix<T>, y: &[T], m: usize, eps: T) -> Result<LambdaGrid<T>> {
    check_xy(x, y)?;
    if m < 2 {
        return Err(invalid("lambda grid needs at least 2 points"));
    }
    if !(eps > T::zero() && eps < T::one()) {
        return Err(invalid(format!("eps must lie in (0, 1) (got {eps})")));
    }
    let lmax = max_abs(&x.tr_mul_vec(y));
    if lmax == T::zero() {
        return Ok(LambdaGrid {
            values: vec![T::zero()],
            degenerate: true,
        });
    }
    let last = T::lit((m - 1) as f64);
    let values = (0..m)
        .map(|i| {
            if i == 0 {
                lmax
            } else {
                lmax * eps.powf(T::lit(i as f64) / last)
            }
        })
        .collect();
    Ok(LambdaGrid {
        values,
        degenerate: false,
    })
}

/// Path-termination fraction: `1e-4` when `n > p`, `1e-2` otherwise.
pub fn default_eps(n: usize, p: usize) -> f64 {
    if n > p {
        1e-4
    } else {
        1e-2
    }
}

fn support_of<T: Real>(beta: &[T]) -> Vec<usize> {
    (0..beta.len()).filter(|&j| beta[j] != T::zero()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath<T> {
    pub lambdas: Vec<T>,
    pub betas: Vec<Vec<T>>,
    pub supports: Vec<Vec<usize>>,
}

impl<T: Real> LassoPath<T> {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Solves along a decreasing grid, each point warm-started from the last.
pub fn lasso_path<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    grid: &[T],
    opts: &CdOptions<T>,
) -> Result<LassoPath<T>> {
    check_xy(x, y)?;
    if grid.is_empty() {
        return Err(invalid("empty lambda grid"));
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("lambda grid must be strictly decreasing"));
    }
    let solver = CoordinateDescent::new(x, y, *opts);
    let mut beta = vec![T::zero(); x.ncols()];
    let mut path = LassoPath {
        lambdas: grid.to_vec(),
        betas: Vec::with_capacity(grid.len()),
        supports: Vec::with_capacity(grid.len()),
    };
    for (index, &lambda) in grid.iter().enumerate() {
        if !(lambda >= T::zero()) {
            return Err(invalid(format!("negative lambda at grid index {index}")));
        }
        solver
            .solve(lambda, &mut beta)
            .map_err(|e| Error::PathPoint {
                index,
                source: Box::new(e),
            })?;
        path.supports.push(support_of(&beta));
        path.betas.push(beta.clone());
    }
    Ok(path)
}

/// Least squares on the columns in `active`, zero elsewhere. Rank-deficient
/// submatrices get the minimum-norm solution.
pub fn active_least_squares<T: Real>(x: &Matrix<T>, active: &[usize], y: &[T]) -> Vec<T> {
    lstsq_on(x, active, y).coef
}

/// `g` equally spaced mixing weights from 1 down to 0.
pub fn gamma_grid<T: Real>(g: usize) -> Vec<T> {
    assert!(g >= 2, "gamma grid needs at least the two endpoints");
    let last = (g - 1) as f64;
    (0..g)
        .map(|i| T::lit((g - 1 - i) as f64 / last))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedPath<T> {
    pub base: LassoPath<T>,
    pub gammas: Vec<T>,
    /// Least-squares refit on each active set.
    pub refits: Vec<Vec<T>>,
    /// `betas[i][g]` blends lasso point `i` with its refit at `gammas[g]`.
    pub betas: Vec<Vec<Vec<T>>>,
}

/// `γ β̂_lasso(λ) + (1-γ) β̂_LS(λ)` at every `(λ, γ)`.
pub fn relaxed_path<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    base: LassoPath<T>,
    gammas: &[T],
) -> Result<RelaxedPath<T>> {
    check_xy(x, y)?;
    if gammas.iter().any(|&g| !(g >= T::zero() && g <= T::one())) {
        return Err(invalid("gammas must lie in [0, 1]"));
    }
    if !gammas.contains(&T::one()) || !gammas.contains(&T::zero()) {
        return Err(invalid("gammas must contain both 0 and 1"));
    }
    let p = x.ncols();
    let mut refits = Vec::with_capacity(base.len());
    let mut betas = Vec::with_capacity(base.len());
    for (lasso, active) in base.betas.iter().zip(&base.supports) {
        if active.is_empty() {
            refits.push(vec![T::zero(); p]);
            betas.push(vec![vec![T::zero(); p]; gammas.len()]);
            continue;
        }
        let ls = active_least_squares(x, active, y);
        let row = gammas
            .iter()
            .map(|&g| {
                let h = T::one() - g;
                lasso.iter().zip(&ls).map(|(&a, &b)| g * a + h * b).collect()
            })
            .collect();
        refits.push(ls);
        betas.push(row);
    }
    Ok(RelaxedPath {
        base,
        gammas: gammas.to_vec(),
        refits,
        betas,
    })
}
