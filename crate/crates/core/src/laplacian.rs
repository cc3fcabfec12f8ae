//! Finite-difference Laplacians on `F_n`.
//!
//! Row `u` of the raw matrix applies the three-point second difference
//! averaged over the paths through `u`: the diagonal is `2/h^2` and every
//! neighbour `v` gets `-2 * mult(u, v) / (deg(u) * h^2)`. A degree-1 boundary
//! vertex therefore sees `-2/h^2` towards its only neighbour, which is the
//! reflected (Neumann) stencil. Rows sum to zero.
//!
//! The raw matrix is not symmetric, but `D^{1/2} M D^{-1/2}` with
//! `D = diag(deg)` is.

use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::graph::LaaksoGraph;

const ROW_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// The averaged stencil as assembled.
    Raw,
    /// `D^{1/2} M D^{-1/2}`.
    Symmetrized,
}

/// A linear operator the eigensolvers can iterate with.
pub trait Operator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; both slices have length [`dim`](Self::dim).
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Upper bound on the spectrum (the spectrum is contained in `[0, bound]`).
    fn spectral_bound(&self) -> f64;

    fn is_symmetric(&self) -> bool;

    fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        Ok(y)
    }
}

/// Sparse row-compressed Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    h: Ratio<i128>,
    form: Form,
    vertex_weights: Vec<f64>,
}

/// `1/h^2` as an exact integer when `h = 1/J`.
fn inverse_h_squared(h: Ratio<i128>) -> f64 {
    let inv = h.recip();
    debug_assert!(inv.is_integer());
    let j = *inv.numer();
    (j * j) as f64
}

pub fn assemble_laplacian(g: &LaaksoGraph) -> LaplacianMatrix {
    let dim = g.vertex_count();
    let h = g.edge_length();
    let scale = inverse_h_squared(h);
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col_idx = Vec::with_capacity(dim * 5);
    let mut values = Vec::with_capacity(dim * 5);
    let mut vertex_weights = Vec::with_capacity(dim);
    row_ptr.push(0);
    for u in 0..dim {
        let deg = g.degree(u) as f64;
        vertex_weights.push(deg);
        let mut diag_done = false;
        for (v, mult) in g.neighbors(u) {
            if !diag_done && v > u {
                col_idx.push(u);
                values.push(2.0 * scale);
                diag_done = true;
            }
            col_idx.push(v);
            values.push(-2.0 * mult as f64 * scale / deg);
        }
        if !diag_done {
            col_idx.push(u);
            values.push(2.0 * scale);
        }
        row_ptr.push(col_idx.len());
    }
    LaplacianMatrix { dim, row_ptr, col_idx, values, h, form: Form::Raw, vertex_weights }
}

/// Similarity transform `D^{1/2} M D^{-1/2}` of a raw Laplacian. A matrix that
/// is already symmetrized is returned unchanged.
pub fn symmetrize(m: &LaplacianMatrix) -> LaplacianMatrix {
    if m.form == Form::Symmetrized {
        return m.clone();
    }
    let mut values = m.values.clone();
    for u in 0..m.dim {
        let wu = m.vertex_weights[u];
        for p in m.row_ptr[u]..m.row_ptr[u + 1] {
            let v = m.col_idx[p];
            if v != u {
                // w_u * M_uv is the symmetric coupling; dividing by sqrt(w_u w_v)
                // keeps the result bitwise symmetric
                let coupling = m.values[p] * wu;
                values[p] = coupling / (wu * m.vertex_weights[v]).sqrt();
            }
        }
    }
    LaplacianMatrix { values, form: Form::Symmetrized, ..m.clone() }
}

impl LaplacianMatrix {
    pub fn form(&self) -> Form {
        self.form
    }

    /// Exact mesh size `h = d_n`.
    pub fn h(&self) -> Ratio<i128> {
        self.h
    }

    pub fn h_f64(&self) -> f64 {
        *self.h.numer() as f64 / *self.h.denom() as f64
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[u]..self.row_ptr[u + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.dim).map(|u| self.row_ptr[u + 1] - self.row_ptr[u]).max().unwrap_or(0)
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.row(u).find(|&(c, _)| c == v).map_or(0.0, |(_, x)| x)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for (u, row) in out.iter_mut().enumerate() {
            for (v, x) in self.row(u) {
                row[v] = x;
            }
        }
        out
    }

    /// Largest `|A_uv - A_vu|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for u in 0..self.dim {
            for (v, x) in self.row(u) {
                worst = worst.max((x - self.get(v, u)).abs());
            }
        }
        worst
    }

    /// Maps a vector from the symmetrized basis back to the raw one
    /// (multiplication by `D^{-1/2}`).
    pub fn to_raw_basis(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.vertex_weights).map(|(x, w)| x / w.sqrt()).collect()
    }

    /// Coordinate format, one `row col value` triple per line (0-based).
    pub fn to_coordinate_text(&self) -> String {
        let mut out = format!("# {} {} {}\n", self.dim, self.dim, self.nnz());
        for u in 0..self.dim {
            for (v, x) in self.row(u) {
                out.push_str(&format!("{u} {v} {}\n", sig17(x)));
            }
        }
        out
    }

    /// Dense rows; only offered for small matrices.
    pub fn to_dense_text(&self) -> Result<String> {
        if self.dim > 64 {
            return Err(Error::InvalidArgument(format!(
                "dense export is limited to dimension 64 (got {})",
                self.dim
            )));
        }
        let mut out = String::new();
        for row in self.to_dense() {
            let cells: Vec<String> = row.iter().map(|&x| sig17(x)).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        Ok(out)
    }
}

impl Operator for LaplacianMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, ys)| {
            let start = chunk * ROW_CHUNK;
            for (i, yi) in ys.iter_mut().enumerate() {
                let u = start + i;
                let mut acc = 0.0;
                for p in self.row_ptr[u]..self.row_ptr[u + 1] {
                    acc += self.values[p] * x[self.col_idx[p]];
                }
                *yi = acc;
            }
        });
    }

    fn spectral_bound(&self) -> f64 {
        4.0 * inverse_h_squared(self.h)
    }

    fn is_symmetric(&self) -> bool {
        self.form == Form::Symmetrized
    }
}

/// The same operators generated on the fly from the graph structure, without
/// storing matrix entries.
#[derive(Debug, Clone)]
pub struct MatrixFreeLaplacian<'g> {
    graph: &'g LaaksoGraph,
    form: Form,
    scale: f64,
    /// One degree per vertex; no matrix entries are stored.
    degrees: Vec<u32>,
    /// Off-diagonal coefficient per unit multiplicity, indexed by the two
    /// endpoint degrees.
    coeff: [[f64; COEFF_TABLE]; COEFF_TABLE],
}

const COEFF_TABLE: usize = 9;

fn off_diagonal(form: Form, scale: f64, du: u32, dv: u32) -> f64 {
    let (du, dv) = (du as f64, dv as f64);
    match form {
        Form::Raw => -2.0 * scale / du,
        Form::Symmetrized => -2.0 * scale / (du * dv).sqrt(),
    }
}

impl<'g> MatrixFreeLaplacian<'g> {
    pub fn new(graph: &'g LaaksoGraph, form: Form) -> Self {
        let degrees = (0..graph.vertex_count()).map(|u| graph.degree(u)).collect();
        let scale = inverse_h_squared(graph.edge_length());
        let mut coeff = [[0.0; COEFF_TABLE]; COEFF_TABLE];
        for (du, row) in coeff.iter_mut().enumerate().skip(1) {
            for (dv, c) in row.iter_mut().enumerate().skip(1) {
                *c = off_diagonal(form, scale, du as u32, dv as u32);
            }
        }
        Self { graph, form, scale, degrees, coeff }
    }

    pub fn form(&self) -> Form {
        self.form
    }
}

impl Operator for MatrixFreeLaplacian<'_> {
    fn dim(&self) -> usize {
        self.graph.vertex_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let g = self.graph;
        assert_eq!(x.len(), g.vertex_count());
        assert_eq!(y.len(), g.vertex_count());
        let scale = self.scale;
        y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, ys)| {
            let start = chunk * ROW_CHUNK;
            for (i, yi) in ys.iter_mut().enumerate() {
                let u = start + i;
                let du = self.degrees[u] as usize;
                let mut acc = 0.0;
                let mut diag_done = false;
                for (v, mult) in g.neighbors(u) {
                    if !diag_done && v > u {
                        acc += 2.0 * scale * x[u];
                        diag_done = true;
                    }
                    let dv = self.degrees[v] as usize;
                    let c = if du < COEFF_TABLE && dv < COEFF_TABLE {
                        self.coeff[du][dv]
                    } else {
                        off_diagonal(self.form, scale, du as u32, dv as u32)
                    };
                    acc += mult as f64 * c * x[v];
                }
                if !diag_done {
                    acc += 2.0 * scale * x[u];
                }
                *yi = acc;
            }
        });
    }

    fn spectral_bound(&self) -> f64 {
        4.0 * self.scale
    }

    fn is_symmetric(&self) -> bool {
        self.form == Form::Symmetrized
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::jseq::JSequence;

    fn raw(j: u64, n: usize) -> LaplacianMatrix {
        assemble_laplacian(&build_graph(&JSequence::constant(j).unwrap(), n).unwrap())
    }

    #[test]
    fn printed_m12() {
        let expected = [
            [8.0, 0.0, -8.0, 0.0, 0.0],
            [0.0, 8.0, -8.0, 0.0, 0.0],
            [-2.0, -2.0, 8.0, -2.0, -2.0],
            [0.0, 0.0, -8.0, 8.0, 0.0],
            [0.0, 0.0, -8.0, 0.0, 8.0],
        ];
        let dense = raw(2, 1).to_dense();
        for (row, exp) in dense.iter().zip(expected.iter()) {
            assert_eq!(row.as_slice(), exp.as_slice());
        }
    }

    #[test]
    fn printed_m13() {
        let expected = [
            [18.0, 0.0, -18.0, 0.0, 0.0, 0.0],
            [0.0, 18.0, -18.0, 0.0, 0.0, 0.0],
            [-4.5, -4.5, 18.0, -9.0, 0.0, 0.0],
            [0.0, 0.0, -9.0, 18.0, -4.5, -4.5],
            [0.0, 0.0, 0.0, -18.0, 18.0, 0.0],
            [0.0, 0.0, 0.0, -18.0, 0.0, 18.0],
        ];
        let dense = raw(3, 1).to_dense();
        for (row, exp) in dense.iter().zip(expected.iter()) {
            assert_eq!(row.as_slice(), exp.as_slice());
        }
    }

    #[test]
    fn two_node_chain() {
        let m = raw(2, 0);
        assert_eq!(m.to_dense(), vec![vec![2.0, -2.0], vec![-2.0, 2.0]]);
        assert_eq!(m.spectral_bound(), 4.0);
    }

    #[test]
    fn symmetrized_fixture() {
        let s = symmetrize(&raw(2, 1));
        assert_eq!(s.form(), Form::Symmetrized);
        assert_eq!(s.get(0, 2), -4.0);
        assert_eq!(s.get(2, 0), -4.0);
        assert_eq!(s.max_asymmetry(), 0.0);
        for u in 0..5 {
            assert_eq!(s.get(u, u), 8.0);
        }
    }

    #[test]
    fn rows_sum_to_zero_and_stay_sparse() {
        for (j, n) in [(2, 3), (3, 2), (5, 2), (4, 3)] {
            let m = raw(j, n);
            assert!(m.max_row_nnz() <= 5);
            let ones = vec![1.0; m.dim()];
            let y = m.matvec(&ones).unwrap();
            assert!(y.iter().all(|&v| v == 0.0), "j={j} n={n}");
        }
    }

    #[test]
    fn matvec_fixture_column() {
        let m = raw(2, 1);
        let mut e3 = vec![0.0; 5];
        e3[2] = 1.0;
        assert_eq!(m.matvec(&e3).unwrap(), vec![-8.0, -8.0, 8.0, -8.0, -8.0]);
        assert!(matches!(m.matvec(&[1.0]), Err(Error::DimensionMismatch { expected: 5, got: 1 })));
    }

    #[test]
    fn dense_export_limit() {
        assert!(raw(2, 1).to_dense_text().is_ok());
        assert!(raw(2, 4).to_dense_text().is_err());
        let coo = raw(2, 1).to_coordinate_text();
        assert!(coo.starts_with("# 5 5 13\n"));
        assert!(coo.contains("2 3 -2.0000000000000000\n"));
    }
}
