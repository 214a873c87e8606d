//! A common "apply to a vector" contract for the matrix representations in the crate.

use serde::Serialize;

use crate::error::Result;
use crate::graph::{LaplacianCsr, WeightedEdgeList};
use crate::kernel::KernelSpec;
use crate::oracle::{dense_adjacency_apply, dense_laplacian_apply};
use crate::points::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    DenseAdjacency,
    DenseLaplacian,
    LowRank,
    Fgt,
    SparseLaplacian,
}

pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn kind(&self) -> OperatorKind;
    fn apply(&self, y: &[f64]) -> Result<Vec<f64>>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn kind(&self) -> OperatorKind {
        (**self).kind()
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(y)
    }
}

/// Kernel adjacency matrix applied by a double loop.
#[derive(Debug, Clone)]
pub struct DenseAdjacency<'a> {
    pub points: &'a PointSet,
    pub kernel: KernelSpec,
}

impl LinearOperator for DenseAdjacency<'_> {
    fn dim(&self) -> usize {
        self.points.n()
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::DenseAdjacency
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        dense_adjacency_apply(self.points, &self.kernel, y)
    }
}

/// Kernel Laplacian applied by a double loop.
#[derive(Debug, Clone)]
pub struct DenseLaplacian<'a> {
    pub points: &'a PointSet,
    pub kernel: KernelSpec,
}

impl LinearOperator for DenseLaplacian<'_> {
    fn dim(&self) -> usize {
        self.points.n()
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::DenseLaplacian
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        dense_laplacian_apply(self.points, &self.kernel, y)
    }
}

impl LinearOperator for WeightedEdgeList {
    fn dim(&self) -> usize {
        self.n()
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::SparseLaplacian
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.n(), y.len())?;
        Ok(self.laplacian_apply(y))
    }
}

impl LinearOperator for LaplacianCsr {
    fn dim(&self) -> usize {
        self.n()
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::SparseLaplacian
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.n(), y.len())?;
        Ok(LaplacianCsr::apply(self, y))
    }
}

/// Laplacian `D - A` of an adjacency operator, with `D = diag(A 1)` computed once.
#[derive(Debug, Clone)]
pub struct AdjacencyLaplacian<A> {
    adj: A,
    degrees: Vec<f64>,
}

impl<A: LinearOperator> AdjacencyLaplacian<A> {
    pub fn new(adj: A) -> Result<Self> {
        let degrees = adj.apply(&vec![1.0; adj.dim()])?;
        Ok(Self { adj, degrees })
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn inner(&self) -> &A {
        &self.adj
    }
}

impl<A: LinearOperator> LinearOperator for AdjacencyLaplacian<A> {
    fn dim(&self) -> usize {
        self.adj.dim()
    }

    fn kind(&self) -> OperatorKind {
        self.adj.kind()
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let ay = self.adj.apply(y)?;
        Ok(self.degrees.iter().zip(y).zip(ay).map(|((d, yi), a)| d * yi - a).collect())
    }
}
