//! Restarted block Lanczos for the lowest eigenpairs of a symmetric operator.
//!
//! The search space is grown block by block from the current lowest Ritz
//! vectors, every new direction is fully reorthogonalized against the locked
//! pairs and the active basis, and the Rayleigh-Ritz projection is taken over
//! the active basis. With a filter of degree one the expansion is the plain
//! block Krylov step. Larger degrees apply a Chebyshev polynomial in the
//! operator that damps the unwanted upper part of the spectrum, which pays off
//! because matrix-vector products cost O(dim) while reorthogonalization costs
//! O(dim * basis).
//!
//! Converged pairs are locked in ascending order and deflated from all
//! subsequent expansions; when the active basis is full it is thick-restarted
//! with its lowest Ritz vectors. Degenerate clusters are resolved by the block
//! width together with deflation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, norm, residual_norm, symmetric_eigen, EigenResult, SolverKind};
use crate::error::{Error, Result};
use crate::laplacian::Operator;

const START_SEED: u64 = 0x1aa5_c0de;
/// Cap on the amplification of the filter over `[0, lower]`.
const MAX_AMPLIFICATION: f64 = 1e8;

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub block_size: usize,
    /// Residual tolerance relative to the operator's spectral bound.
    pub tolerance: f64,
    /// Maximum number of expansion steps.
    pub max_iterations: usize,
    /// Cap on the active (unlocked) basis; `None` picks a size from `k`.
    pub max_basis: Option<usize>,
    /// Highest Chebyshev filter degree; 1 disables filtering.
    pub max_filter_degree: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            block_size: 8,
            tolerance: 1e-9,
            max_iterations: 5000,
            max_basis: None,
            max_filter_degree: 48,
        }
    }
}

/// `k` lowest eigenpairs; fails with [`Error::NoConvergence`] if any pair is
/// still above tolerance when the iteration budget runs out.
pub fn solve_lanczos<O: Operator + ?Sized>(op: &O, k: usize) -> Result<EigenResult> {
    solve_lanczos_with(op, k, LanczosOptions::default())
}

pub fn solve_lanczos_with<O: Operator + ?Sized>(op: &O, k: usize, opts: LanczosOptions) -> Result<EigenResult> {
    let result = lanczos_partial(op, k, opts)?;
    if result.len() == k && result.all_converged() {
        Ok(result)
    } else {
        Err(Error::NoConvergence {
            converged: result.converged.iter().filter(|&&c| c).count(),
            requested: k,
            iterations: result.iterations,
        })
    }
}

/// Like [`solve_lanczos_with`] but returns whatever was reached, with
/// per-pair convergence flags, instead of failing.
pub fn lanczos_partial<O: Operator + ?Sized>(op: &O, k: usize, opts: LanczosOptions) -> Result<EigenResult> {
    let n = op.dim();
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric { max_asymmetry: f64::NAN });
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= k < dimension, got k = {k}, dimension = {n}")));
    }
    if opts.block_size == 0 || opts.max_filter_degree == 0 {
        return Err(Error::InvalidArgument("block size and filter degree must be positive".into()));
    }
    let mut state = State::new(op, k, opts);
    state.run();
    Ok(state.finish())
}

struct Locked {
    value: f64,
    vector: Vec<f64>,
    order: usize,
}

struct State<'a, O: Operator + ?Sized> {
    op: &'a O,
    n: usize,
    k: usize,
    block: usize,
    max_basis: usize,
    tol: f64,
    bound: f64,
    max_iterations: usize,
    max_degree: usize,
    rng: ChaCha8Rng,
    locked: Vec<Locked>,
    /// Active orthonormal basis and the projected matrix (row-major,
    /// `basis.len()` squared).
    basis: Vec<Vec<f64>>,
    projected: Vec<f64>,
    iterations: usize,
}

impl<'a, O: Operator + ?Sized> State<'a, O> {
    fn new(op: &'a O, k: usize, opts: LanczosOptions) -> Self {
        let n = op.dim();
        let block = opts.block_size.min(n);
        let max_basis = opts
            .max_basis
            .unwrap_or_else(|| (4 * block).max(k.min(64) + 2 * block))
            .max(2 * block);
        let bound = op.spectral_bound();
        Self {
            op,
            n,
            k,
            block,
            max_basis,
            tol: opts.tolerance * bound,
            bound,
            max_iterations: opts.max_iterations,
            max_degree: opts.max_filter_degree,
            rng: ChaCha8Rng::seed_from_u64(START_SEED),
            locked: Vec::new(),
            basis: Vec::new(),
            projected: Vec::new(),
            iterations: 0,
        }
    }

    fn start_block(&mut self) -> Vec<Vec<f64>> {
        let mut first: Vec<f64> = (0..self.n).map(|i| 1.0 + (i % 7) as f64).collect();
        let s = norm(&first);
        first.iter_mut().for_each(|x| *x /= s);
        let mut out = vec![first];
        out.extend(self.random_block(self.block - 1));
        out
    }

    fn random_block(&mut self, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| (0..self.n).map(|_| self.rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    fn run(&mut self) {
        let start = self.start_block();
        self.extend(start);
        while self.iterations < self.max_iterations {
            self.iterations += 1;
            if self.basis.is_empty() {
                let fresh = self.random_block(self.block);
                if self.extend(fresh) == 0 {
                    break;
                }
            }
            let theta = self.rayleigh_ritz();
            let newly_locked = self.lock_converged(&theta);
            let active: Vec<f64> = theta[theta.len() - self.basis.len()..].to_vec();
            if self.done(&active) {
                break;
            }
            if self.basis.is_empty() {
                continue;
            }

            let targets = self.block.min(self.basis.len());
            let lower = active[(2 * self.block).min(active.len() - 1)].min(0.9 * self.bound);
            let degree = self.filter_degree(lower);
            let mut filtered: Vec<Vec<f64>> =
                (0..targets).map(|i| self.chebyshev(&self.basis[i], degree, lower)).collect();
            // A block Krylov space holds at most `block` directions of any
            // eigenspace, so every locked vector is replaced by a fresh random
            // direction to reach clusters wider than the block.
            for r in self.random_block(newly_locked.min(self.block)) {
                filtered.push(self.chebyshev(&r, degree, lower));
            }

            if self.basis.len() + filtered.len() > self.max_basis {
                self.truncate(self.max_basis.saturating_sub(filtered.len()).max(self.block));
            }
            if self.extend(filtered) == 0 {
                let fresh = self.random_block(self.block);
                if self.extend(fresh) == 0 && self.locked.len() + self.basis.len() < self.n {
                    break;
                }
            }
        }
    }

    /// Stops once `k` pairs are locked and no active Ritz value undercuts the
    /// `k`-th locked eigenvalue.
    fn done(&self, active: &[f64]) -> bool {
        if self.locked.len() < self.k {
            return self.locked.len() == self.n;
        }
        let mut values: Vec<f64> = self.locked.iter().map(|l| l.value).collect();
        values.sort_by(f64::total_cmp);
        let kth = values[self.k - 1];
        active.first().is_none_or(|&t| t >= kth - self.tol)
    }

    /// Diagonalizes the projected matrix and rotates the basis onto Ritz
    /// vectors. Returns the Ritz values in ascending order.
    fn rayleigh_ritz(&mut self) -> Vec<f64> {
        let m = self.basis.len();
        let (theta, y) = symmetric_eigen(m, self.projected.clone()).expect("small projected eigenproblem");
        self.basis = rotate(&self.basis, &y);
        self.projected = vec![0.0; m * m];
        for (i, t) in theta.iter().enumerate() {
            self.projected[i * m + i] = *t;
        }
        theta
    }

    fn lock_converged(&mut self, theta: &[f64]) -> usize {
        let mut count = 0;
        let exhausted = self.locked.len() + self.basis.len() == self.n;
        for (i, &t) in theta.iter().enumerate() {
            if !exhausted && residual_norm(self.op, t, &self.basis[i]) > self.tol {
                break;
            }
            count += 1;
        }
        if count == 0 {
            return 0;
        }
        let m = self.basis.len();
        for (i, vector) in self.basis.drain(..count).enumerate() {
            let order = self.locked.len();
            self.locked.push(Locked { value: theta[i], vector, order });
        }
        let rest = m - count;
        let mut projected = vec![0.0; rest * rest];
        for i in 0..rest {
            projected[i * rest + i] = theta[count + i];
        }
        self.projected = projected;
        count
    }

    fn truncate(&mut self, keep: usize) {
        let m = self.basis.len();
        if keep >= m {
            return;
        }
        self.basis.truncate(keep);
        let mut projected = vec![0.0; keep * keep];
        for i in 0..keep {
            projected[i * keep + i] = self.projected[i * m + i];
        }
        self.projected = projected;
    }

    fn filter_degree(&self, lower: f64) -> usize {
        if self.max_degree == 1 {
            return 1;
        }
        let x0 = (self.bound + lower) / (self.bound - lower);
        let degree = (MAX_AMPLIFICATION.acosh() / x0.acosh()).floor() as usize;
        degree.clamp(1, self.max_degree)
    }

    /// Chebyshev polynomial of the given degree mapping `[lower, bound]` onto
    /// `[-1, 1]`, applied to `x` and normalized.
    fn chebyshev(&self, x: &[f64], degree: usize, lower: f64) -> Vec<f64> {
        let half_width = (self.bound - lower) / 2.0;
        let center = (self.bound + lower) / 2.0;
        let mut prev = x.to_vec();
        let mut cur = vec![0.0; self.n];
        self.op.apply(x, &mut cur);
        for (c, p) in cur.iter_mut().zip(&prev) {
            *c = (*c - center * p) / half_width;
        }
        let mut next = vec![0.0; self.n];
        for _ in 1..degree {
            self.op.apply(&cur, &mut next);
            for ((nx, c), p) in next.iter_mut().zip(&cur).zip(&prev) {
                *nx = 2.0 * (*nx - center * c) / half_width - p;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        let s = norm(&cur);
        if s > 0.0 {
            cur.iter_mut().for_each(|v| *v /= s);
        }
        cur
    }

    /// Orthonormalizes the candidates against locked vectors and the active
    /// basis (two block Gram-Schmidt passes) and then against each other,
    /// appends the survivors and extends the projected matrix. Returns how
    /// many were added.
    fn extend(&mut self, mut candidates: Vec<Vec<f64>>) -> usize {
        let original: Vec<f64> = candidates.iter().map(|t| norm(t)).collect();
        {
            let against: Vec<&[f64]> =
                self.locked.iter().map(|l| l.vector.as_slice()).chain(self.basis.iter().map(Vec::as_slice)).collect();
            for _ in 0..2 {
                project_out(&against, &mut candidates);
            }
        }
        let mut accepted: Vec<Vec<f64>> = Vec::new();
        for (mut t, original) in candidates.into_iter().zip(original) {
            if original == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for q in &accepted {
                    let c = dot(q, &t);
                    axpy(-c, q, &mut t);
                }
            }
            let s = norm(&t);
            if s <= 1e-10 * original {
                continue;
            }
            t.iter_mut().for_each(|v| *v /= s);
            accepted.push(t);
        }
        let added = accepted.len();
        if added == 0 {
            return 0;
        }
        let old = self.basis.len();
        let m = old + added;
        let mut projected = vec![0.0; m * m];
        for i in 0..old {
            projected[i * m..i * m + old].copy_from_slice(&self.projected[i * old..(i + 1) * old]);
        }
        for (a, t) in accepted.into_iter().enumerate() {
            let mut at = vec![0.0; self.n];
            self.op.apply(&t, &mut at);
            let col = old + a;
            self.basis.push(t);
            for i in 0..=col {
                let v = dot(&self.basis[i], &at);
                projected[i * m + col] = v;
                projected[col * m + i] = v;
            }
        }
        // the new-new block was filled one column at a time; average for symmetry
        for i in old..m {
            for j in old..i {
                let v = 0.5 * (projected[i * m + j] + projected[j * m + i]);
                projected[i * m + j] = v;
                projected[j * m + i] = v;
            }
        }
        self.projected = projected;
        added
    }

    fn finish(mut self) -> EigenResult {
        if !self.basis.is_empty() {
            self.rayleigh_ritz();
        }
        // stable by value, then residual, then locking order
        let mut pairs: Vec<(f64, f64, usize, Vec<f64>, bool)> = self
            .locked
            .drain(..)
            .map(|l| {
                let r = residual_norm(self.op, l.value, &l.vector);
                (l.value, r, l.order, l.vector, true)
            })
            .collect();
        if pairs.len() < self.k {
            let extra = self.k - pairs.len();
            let base = pairs.len();
            let m = self.basis.len();
            let theta: Vec<f64> = (0..m).map(|i| self.projected[i * m + i]).collect();
            for (i, v) in self.basis.drain(..).take(extra).enumerate() {
                let r = residual_norm(self.op, theta[i], &v);
                pairs.push((theta[i], r, base + i, v, false));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        pairs.truncate(self.k);
        let tol = self.tol;
        let mut out = EigenResult {
            eigenvalues: Vec::with_capacity(self.k),
            eigenvectors: Vec::with_capacity(self.k),
            residuals: Vec::with_capacity(self.k),
            converged: Vec::with_capacity(self.k),
            iterations: self.iterations,
            solver_kind: SolverKind::Lanczos,
        };
        for (value, r, _, v, locked) in pairs {
            out.eigenvalues.push(value);
            out.residuals.push(r);
            out.converged.push(locked && r <= tol);
            out.eigenvectors.push(v);
        }
        out
    }
}

const ROW_CHUNK: usize = 512;

/// `basis * y`, where `y[c]` holds the coefficients of output vector `c`.
/// Works through the rows in chunks so the basis is streamed once.
fn rotate(basis: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = basis.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; n]; y.len()];
    for start in (0..n).step_by(ROW_CHUNK) {
        let end = (start + ROW_CHUNK).min(n);
        for (o, coeffs) in out.iter_mut().zip(y) {
            let o = &mut o[start..end];
            for (c, b) in coeffs.iter().zip(basis) {
                for (x, bv) in o.iter_mut().zip(&b[start..end]) {
                    *x += c * bv;
                }
            }
        }
    }
    out
}

/// One classical block Gram-Schmidt pass: `t -= Q (Q^T t)` for every
/// candidate, with `Q` given by its (orthonormal) columns.
fn project_out(q: &[&[f64]], ts: &mut [Vec<f64>]) {
    if q.is_empty() || ts.is_empty() {
        return;
    }
    let n = q[0].len();
    let mut coeffs = vec![0.0; q.len() * ts.len()];
    for start in (0..n).step_by(ROW_CHUNK) {
        let end = (start + ROW_CHUNK).min(n);
        for (qi, qv) in q.iter().enumerate() {
            let qv = &qv[start..end];
            for (ti, t) in ts.iter().enumerate() {
                coeffs[qi * ts.len() + ti] += dot(qv, &t[start..end]);
            }
        }
    }
    let width = ts.len();
    for start in (0..n).step_by(ROW_CHUNK) {
        let end = (start + ROW_CHUNK).min(n);
        for (ti, t) in ts.iter_mut().enumerate() {
            let t = &mut t[start..end];
            for (qi, qv) in q.iter().enumerate() {
                let c = coeffs[qi * width + ti];
                for (x, qx) in t.iter_mut().zip(&qv[start..end]) {
                    *x -= c * qx;
                }
            }
        }
    }
}
