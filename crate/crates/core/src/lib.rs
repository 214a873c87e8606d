//! Fast linear algebra on kernel graphs: matrix-vector products, spectral
//! sparsification and Laplacian solvers for `K(u, v) = f(||u - v||^2)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fgt;
pub mod geometry;
pub mod graph;
pub mod innerprod;
pub mod kernel;
pub mod linalg;
pub mod linop;
pub mod matvec;
pub mod oracle;
pub mod points;
pub mod report;
pub mod rng;
pub mod solver;
pub mod sparsify;

pub use error::{Error, Result};
pub use graph::{Edge, LaplacianCsr, WeightedEdgeList};
pub use kernel::KernelSpec;
pub use linop::{LinearOperator, OperatorKind};
pub use points::PointSet;
pub use report::ApproxReport;
