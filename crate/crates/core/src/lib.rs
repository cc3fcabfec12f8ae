//! Quantum-graph approximations of Laakso spaces.
//!
//! The crate builds the approximating graphs `F_n`, assembles their
//! finite-difference Laplacians, computes low eigenpairs with a dense or a
//! restarted block Lanczos solver, generates the exact spectrum of the limit
//! operator (eigenvalues are rational multiples of `pi^2`) and reconciles the
//! numeric and exact spectra.

pub mod analytic;
pub mod compare;
pub mod eigen;
pub mod error;
pub mod fmt;
pub mod graph;
pub mod jseq;
pub mod laplacian;

pub use error::{Error, Result};
pub use graph::{build_graph, build_graph_with_cap, IncidenceMatrix, LaaksoGraph, VertexKey};
pub use jseq::{hausdorff_dimension, JSequence};
pub use laplacian::{assemble_laplacian, symmetrize, Form, LaplacianMatrix, MatrixFreeLaplacian, Operator};
