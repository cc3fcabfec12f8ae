//! Eigensolvers for the symmetrized Laplacian.

mod dense;
mod lanczos;

pub use dense::{solve_dense, solve_dense_with, symmetric_eigen, DenseOptions};
pub use lanczos::{lanczos_partial, solve_lanczos, solve_lanczos_with, LanczosOptions};

use crate::fmt::sig17;
use crate::laplacian::Operator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Dense,
    Lanczos,
}

/// Eigenpairs in ascending order of eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors in the symmetrized basis.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `||S v - lambda v||` per pair.
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub iterations: usize,
    pub solver_kind: SolverKind,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// Eigenvector `i` mapped back to the raw (non-symmetric) basis with
    /// `D^{-1/2}`, given the vertex weights `D`.
    pub fn raw_eigenvector(&self, i: usize, vertex_weights: &[f64]) -> Vec<f64> {
        self.eigenvectors[i].iter().zip(vertex_weights).map(|(x, w)| x / w.sqrt()).collect()
    }

    /// Largest `|<v_a, v_b> - delta_ab|` over all pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.len() {
            for b in 0..=a {
                let d = dot(&self.eigenvectors[a], &self.eigenvectors[b]);
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    /// CSV with columns `index,lambda,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,lambda,residual\n");
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            out.push_str(&format!("{i},{},{}\n", sig17(*l), sig17(*r)));
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four independent accumulators; fixed order keeps results reproducible
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn residual_norm<O: Operator + ?Sized>(op: &O, lambda: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    op.apply(v, &mut av);
    axpy(-lambda, v, &mut av);
    norm(&av)
}
