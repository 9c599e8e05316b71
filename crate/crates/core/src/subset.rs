//! Best subset selection, `min ‖y - Xβ‖² s.t. ‖β‖₀ ≤ k`.
//!
//! Approximate solutions come from iterative hard thresholding (projected
//! gradient onto the `k`-sparse set) with random restarts. Exact solutions come
//! from a best-first branch-and-bound whose node bound is the residual sum of
//! squares of unconstrained least squares on every column not forced out.
//! Searches run against a wall-clock budget; a solution is `certified` only
//! when the tree was exhausted.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::{lstsq_on, max_abs, max_sq_singular_value, rss, sq_norm, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSolution<T> {
    pub beta: Vec<T>,
    /// Sorted column indices, at most `k` of them.
    pub support: Vec<usize>,
    pub rss: T,
    /// The search tree was exhausted, so `rss` is the global minimum.
    pub certified: bool,
    pub nodes_explored: u64,
    /// Seconds.
    pub wall_time: f64,
}

impl<T: Real> SubsetSolution<T> {
    fn null(y: &[T], p: usize) -> Self {
        Self {
            beta: vec![T::zero(); p],
            support: Vec::new(),
            rss: sq_norm(y),
            certified: true,
            nodes_explored: 0,
            wall_time: 0.0,
        }
    }

    /// Orders by RSS, then by lexicographic support.
    fn better_than(&self, other: &Self) -> bool {
        match self.rss.partial_cmp(&other.rss) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => self.support < other.support,
            _ => false,
        }
    }
}

/// Exact least squares on `support` with the RSS evaluated from the residual.
pub fn refit<T: Real>(x: &Matrix<T>, y: &[T], support: &[usize]) -> SubsetSolution<T> {
    let mut support = support.to_vec();
    support.sort_unstable();
    let beta = lstsq_on(x, &support, y).coef;
    let rss = rss(x, y, &beta);
    SubsetSolution {
        beta,
        support,
        rss,
        certified: false,
        nodes_explored: 0,
        wall_time: 0.0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IhtOptions<T> {
    pub max_iter: usize,
    /// Relative objective change that ends the iteration.
    pub tol: T,
}

impl<T: Real> Default for IhtOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: T::tol(1e-7),
        }
    }
}

/// Indices of the `k` largest-magnitude entries, ties to the lowest index.
pub fn top_k<T: Real>(v: &[T], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Hard thresholding `H_k`: keeps the `k` largest-magnitude entries.
pub fn hard_threshold<T: Real>(v: &[T], k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    for j in top_k(v, k) {
        out[j] = v[j];
    }
    out
}

/// Iterates of one IHT run, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct IhtRun<T> {
    pub iterations: usize,
    /// `½‖y - Xβ‖²` after each iteration, starting with the projected init.
    pub objectives: Vec<T>,
    pub solution: SubsetSolution<T>,
}

fn half_rss<T: Real>(x: &Matrix<T>, y: &[T], beta: &[T]) -> T {
    T::lit(0.5) * rss(x, y, beta)
}

fn iht_run<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    init: &[T],
    lipschitz: T,
    opts: &IhtOptions<T>,
) -> IhtRun<T> {
    let p = x.ncols();
    if lipschitz == T::zero() {
        return IhtRun {
            iterations: 0,
            objectives: vec![half_rss(x, y, &vec![T::zero(); p])],
            solution: SubsetSolution {
                certified: false,
                ..SubsetSolution::null(y, p)
            },
        };
    }
    let step = T::one() / lipschitz;
    let mut beta = hard_threshold(init, k);
    let mut f = half_rss(x, y, &beta);
    let mut objectives = vec![f];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let mut resid = x.mul_vec(&beta);
        for (r, &yi) in resid.iter_mut().zip(y) {
            *r = *r - yi;
        }
        let grad = x.tr_mul_vec(&resid);
        let moved: Vec<T> = beta.iter().zip(&grad).map(|(&b, &g)| b - step * g).collect();
        beta = hard_threshold(&moved, k);
        iterations += 1;
        let next = half_rss(x, y, &beta);
        objectives.push(next);
        let done = next == T::zero() || (f - next).abs() <= opts.tol * f;
        f = next;
        if done {
            break;
        }
    }
    let support = top_k(&beta, k);
    IhtRun {
        iterations,
        objectives,
        solution: refit(x, y, &support),
    }
}

/// One IHT run from `init` with step `1/σ_max(X)²`, polished by least squares
/// on its final support.
pub fn iht<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    init: &[T],
    opts: &IhtOptions<T>,
) -> Result<IhtRun<T>> {
    check(x, y, k)?;
    if init.len() != x.ncols() {
        return Err(Error::Shape(format!(
            "init has length {}, expected {}",
            init.len(),
            x.ncols()
        )));
    }
    Ok(iht_run(x, y, k, init, max_sq_singular_value(x), opts))
}

fn check<T: Real>(x: &Matrix<T>, y: &[T], k: usize) -> Result<()> {
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
    if k > x.ncols() {
        return Err(invalid(format!("k={k} exceeds p={}", x.ncols())));
    }
    Ok(())
}

fn warm_start_until<T: Real, R: Rng + ?Sized>(
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    restarts: usize,
    opts: &IhtOptions<T>,
    rng: &mut R,
    deadline: Option<Instant>,
) -> SubsetSolution<T> {
    let p = x.ncols();
    let lipschitz = max_sq_singular_value(x);
    let mut best = iht_run(x, y, k, &vec![T::zero(); p], lipschitz, opts).solution;
    if lipschitz == T::zero() {
        return best;
    }
    let scale = max_abs(&x.tr_mul_vec(y)) / lipschitz;
    for _ in 0..restarts {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let init: Vec<T> = (0..p)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                T::lit(z) * scale
            })
            .collect();
        let cand = iht_run(x, y, k, &init, lipschitz, opts).solution;
        if cand.better_than(&best) {
            best = cand;
        }
    }
    best
}

/// Best of IHT from the zero vector and `restarts` random starts.
pub fn warm_start<T: Real, R: Rng + ?Sized>(
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    restarts: usize,
    opts: &IhtOptions<T>,
    rng: &mut R,
) -> Result<SubsetSolution<T>> {
    check(x, y, k)?;
    if restarts == 0 {
        return Err(invalid("restarts must be at least 1"));
    }
    Ok(warm_start_until(x, y, k, restarts, opts, rng, None))
}

#[derive(Debug, Clone, Copy)]
pub struct BnbOptions<T> {
    /// Wall-clock seconds per subset size; `<= 0` returns the warm start.
    pub budget_seconds: f64,
    pub restarts: usize,
    pub iht: IhtOptions<T>,
    /// Optional cap on explored nodes, for reproducible truncated searches.
    pub max_nodes: Option<u64>,
    /// Nodes with `bound >= incumbent - prune_tol` are discarded.
    pub prune_tol: T,
}

impl<T: Real> Default for BnbOptions<T> {
    fn default() -> Self {
        Self {
            budget_seconds: 180.0,
            restarts: 50,
            iht: IhtOptions::default(),
            max_nodes: None,
            prune_tol: T::tol(1e-10),
        }
    }
}

/// Search-tree node: columns forced into and out of the support.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode<T> {
    pub forced_in: Vec<usize>,
    pub forced_out: Vec<usize>,
    /// RSS of least squares on every column not forced out.
    pub bound: T,
}

#[derive(Debug)]
struct Queued<T> {
    node: BnbNode<T>,
    seq: u64,
}

impl<T: Real> PartialEq for Queued<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Queued<T> {}

impl<T: Real> PartialOrd for Queued<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Queued<T> {
    // Max-heap: smallest bound first, then deeper nodes, then FIFO.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .node
            .bound
            .partial_cmp(&self.node.bound)
            .unwrap_or(Ordering::Equal)
            .then(self.node.forced_in.len().cmp(&other.node.forced_in.len()))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Every node the search evaluated, and the incumbent RSS after each update.
#[derive(Debug, Clone)]
pub struct SearchTrace<T> {
    pub nodes: Vec<BnbNode<T>>,
    pub incumbents: Vec<T>,
}

impl<T> Default for SearchTrace<T> {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            incumbents: Vec::new(),
        }
    }
}

struct Search<'a, T> {
    x: &'a Matrix<T>,
    y: &'a [T],
    k: usize,
    opts: &'a BnbOptions<T>,
    start: Instant,
    deadline: Instant,
    nodes: u64,
    incumbent: SubsetSolution<T>,
    trace: Option<SearchTrace<T>>,
}

struct Relaxation<T> {
    allowed: Vec<usize>,
    coef: Vec<T>,
    rss: T,
}

impl<T: Real> Search<'_, T> {
    fn out_of_budget(&self) -> bool {
        Instant::now() >= self.deadline || self.opts.max_nodes.is_some_and(|m| self.nodes >= m)
    }

    fn relax(&self, forced_out: &[usize]) -> Relaxation<T> {
        let p = self.x.ncols();
        let mut excluded = vec![false; p];
        forced_out.iter().for_each(|&j| excluded[j] = true);
        let allowed: Vec<usize> = (0..p).filter(|&j| !excluded[j]).collect();
        let sol = lstsq_on(self.x, &allowed, self.y);
        Relaxation {
            allowed,
            coef: sol.coef,
            rss: sol.rss,
        }
    }

    fn offer(&mut self, cand: SubsetSolution<T>) {
        if cand.rss < self.incumbent.rss {
            self.incumbent = cand;
            if let Some(t) = &mut self.trace {
                t.incumbents.push(self.incumbent.rss);
            }
        }
    }

    fn prunable(&self, bound: T) -> bool {
        bound >= self.incumbent.rss - self.opts.prune_tol
    }

    fn record(&mut self, forced_in: &[usize], forced_out: &[usize], bound: T) {
        self.nodes += 1;
        if let Some(t) = &mut self.trace {
            t.nodes.push(BnbNode {
                forced_in: forced_in.to_vec(),
                forced_out: forced_out.to_vec(),
                bound,
            });
        }
    }

    /// Returns `true` when the tree was exhausted.
    fn run(&mut self) -> bool {
        let mut heap = BinaryHeap::new();
        heap.push(Queued {
            node: BnbNode {
                forced_in: Vec::new(),
                forced_out: Vec::new(),
                bound: T::zero(),
            },
            seq: 0,
        });
        let mut seq = 1u64;
        while let Some(Queued { node, .. }) = heap.pop() {
            if self.prunable(node.bound) {
                continue;
            }
            if self.out_of_budget() {
                return false;
            }
            let BnbNode {
                mut forced_in,
                forced_out,
                ..
            } = node;
            let relax = self.relax(&forced_out);
            self.record(&forced_in, &forced_out, relax.rss);
            // Dive along forced-in children: they share this relaxation.
            loop {
                if self.prunable(relax.rss) {
                    break;
                }
                if relax.allowed.len() <= self.k {
                    let cand = refit(self.x, self.y, &relax.allowed);
                    self.offer(cand);
                    break;
                }
                if forced_in.len() == self.k {
                    let cand = refit(self.x, self.y, &forced_in);
                    self.offer(cand);
                    break;
                }
                if self.out_of_budget() {
                    return false;
                }
                let j = branch_variable(&relax, &forced_in);
                let mut out_child = forced_out.clone();
                out_child.push(j);
                let child = self.relax(&out_child);
                self.record(&forced_in, &out_child, child.rss);
                if !self.prunable(child.rss) {
                    if child.allowed.len() <= self.k {
                        let cand = refit(self.x, self.y, &child.allowed);
                        self.offer(cand);
                    } else {
                        heap.push(Queued {
                            node: BnbNode {
                                forced_in: forced_in.clone(),
                                forced_out: out_child,
                                bound: child.rss,
                            },
                            seq,
                        });
                        seq += 1;
                    }
                }
                forced_in.push(j);
                self.record(&forced_in, &forced_out, relax.rss);
            }
        }
        true
    }

    fn finish(mut self, certified: bool) -> (SubsetSolution<T>, Option<SearchTrace<T>>) {
        self.incumbent.certified = certified;
        self.incumbent.nodes_explored = self.nodes;
        self.incumbent.wall_time = self.start.elapsed().as_secs_f64();
        (self.incumbent, self.trace)
    }
}

/// Free column with the largest relaxation coefficient, ties to the lowest index.
fn branch_variable<T: Real>(relax: &Relaxation<T>, forced_in: &[usize]) -> usize {
    let mut best: Option<(usize, T)> = None;
    for &j in &relax.allowed {
        if forced_in.contains(&j) {
            continue;
        }
        let a = relax.coef[j].abs();
        if best.map_or(true, |(_, b)| a > b) {
            best = Some((j, a));
        }
    }
    best.expect("a node with more allowed columns than k has a free column").0
}

fn search<T: Real, R: Rng + ?Sized>(
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    opts: &BnbOptions<T>,
    rng: &mut R,
    seed_solution: Option<&SubsetSolution<T>>,
    traced: bool,
) -> Result<(SubsetSolution<T>, Option<SearchTrace<T>>)> {
    check(x, y, k)?;
    let start = Instant::now();
    let p = x.ncols();
    if k == 0 {
        let mut s = SubsetSolution::null(y, p);
        s.wall_time = start.elapsed().as_secs_f64();
        return Ok((s, traced.then(SearchTrace::default)));
    }
    let budget = if opts.budget_seconds > 0.0 && opts.budget_seconds.is_finite() {
        Duration::from_secs_f64(opts.budget_seconds)
    } else if opts.budget_seconds > 0.0 {
        Duration::MAX / 4
    } else {
        Duration::ZERO
    };
    let deadline = start + budget;
    let mut incumbent = warm_start_until(x, y, k, opts.restarts, &opts.iht, rng, Some(deadline));
    if let Some(s) = seed_solution {
        if s.support.len() <= k && s.better_than(&incumbent) {
            incumbent = refit(x, y, &s.support);
        }
    }
    let mut state = Search {
        x,
        y,
        k,
        opts,
        start,
        deadline,
        nodes: 0,
        incumbent,
        trace: traced.then(SearchTrace::default),
    };
    if let Some(t) = &mut state.trace {
        t.incumbents.push(state.incumbent.rss);
    }
    if budget.is_zero() {
        return Ok(state.finish(false));
    }
    let exhausted = state.run();
    Ok(state.finish(exhausted))
}

/// Exact best subset of size at most `k` within the time budget.
pub fn best_subset<T: Real, R: Rng + ?Sized>(
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    opts: &BnbOptions<T>,
    rng: &mut R,
) -> Result<SubsetSolution<T>> {
    search(x, y, k, opts, rng, None, false).map(|(s, _)| s)
}

/// As [`best_subset`], also returning every evaluated node.
pub fn best_subset_traced<T: Real, R: Rng + ?Sized>(
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    opts: &BnbOptions<T>,
    rng: &mut R,
) -> Result<(SubsetSolution<T>, SearchTrace<T>)> {
    search(x, y, k, opts, rng, None, true).map(|(s, t)| (s, t.unwrap_or_default()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetPath<T> {
    /// Solutions for `k = 0..=kmax`.
    pub solutions: Vec<SubsetSolution<T>>,
}

impl<T: Real> SubsetPath<T> {
    pub fn certified_count(&self) -> usize {
        self.solutions.iter().filter(|s| s.certified).count()
    }
}

/// Best subset for every `k` in `0..=kmax`, each with its own budget. The
/// size-`k-1` solution is offered as an extra incumbent for size `k`.
pub fn bs_path<T: Real, R: Rng + ?Sized>(
    x: &Matrix<T>,
    y: &[T],
    kmax: usize,
    opts: &BnbOptions<T>,
    rng: &mut R,
) -> Result<SubsetPath<T>> {
    check(x, y, kmax)?;
    if kmax == 0 {
        return Err(invalid("kmax must be at least 1"));
    }
    let mut solutions = vec![SubsetSolution::null(y, x.ncols())];
    for k in 1..=kmax {
        let prev = solutions.last();
        let (sol, _) = search(x, y, k, opts, rng, prev, false)?;
        solutions.push(sol);
    }
    Ok(SubsetPath { solutions })
}
