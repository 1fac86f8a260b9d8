//! Matrix-free real symmetric operators.

use crate::hilbert::BasisDescriptor;

/// Real symmetric operator acting on vectors over a [`BasisDescriptor`].
pub trait LinearOperator: Sync {
    fn descriptor(&self) -> &BasisDescriptor;

    fn dim(&self) -> usize {
        self.descriptor().dim()
    }

    /// `y = A x`; `y` is fully overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Runs `f(chunk_index, chunk)` over consecutive chunks of `out`, in parallel
/// when the `parallel` feature is enabled. Each output element is written by
/// exactly one call, so results do not depend on the partitioning.
pub(crate) fn for_each_chunk<F>(out: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(c, slice)| f(c, slice));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(chunk)
            .enumerate()
            .for_each(|(c, slice)| f(c, slice));
    }
}

/// Diagonal operator, mostly useful for solver tests.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    pub diagonal: Vec<f64>,
    descriptor: BasisDescriptor,
}

impl DiagonalOperator {
    pub fn new(diagonal: Vec<f64>) -> Self {
        let n = diagonal.len();
        let bits = (usize::BITS - n.max(2).leading_zeros()) as usize;
        let descriptor = BasisDescriptor::restricted(
            bits,
            crate::hilbert::Frame::SpinOnly,
            (0..n as u64).collect(),
        );
        DiagonalOperator {
            diagonal,
            descriptor,
        }
    }
}

impl LinearOperator for DiagonalOperator {
    fn descriptor(&self) -> &BasisDescriptor {
        &self.descriptor
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diagonal) {
            *yi = d * xi;
        }
    }
}

/// Dense symmetric matrix as an operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: nalgebra::DMatrix<f64>,
    descriptor: BasisDescriptor,
}

impl DenseOperator {
    pub fn new(matrix: nalgebra::DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        let bits = (usize::BITS - n.max(2).leading_zeros()) as usize;
        let descriptor = BasisDescriptor::restricted(
            bits,
            crate::hilbert::Frame::SpinOnly,
            (0..n as u64).collect(),
        );
        DenseOperator { matrix, descriptor }
    }
}

impl LinearOperator for DenseOperator {
    fn descriptor(&self) -> &BasisDescriptor {
        &self.descriptor
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.matrix.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum();
        }
    }
}
