use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseRowMatrix};

/// Two-layer GCN: `Ã · ReLU(Ã X W0) · W1`, no activation on the output.
pub fn encode_gcn(
    adj: &SparseRowMatrix,
    x: &DenseMatrix,
    w0: &DenseMatrix,
    w1: &DenseMatrix,
) -> Result<DenseMatrix> {
    EncoderInputs::new(adj.clone(), x)?.forward(w0, w1).map(|(out, _)| out)
}

/// Normalized adjacency with its transpose, and the layer-one input `Ã X`,
/// which does not depend on the weights.
#[derive(Debug, Clone)]
pub struct EncoderInputs {
    adj: SparseRowMatrix,
    adj_t: SparseRowMatrix,
    ax: DenseMatrix,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    pre: DenseMatrix,
    hidden: DenseMatrix,
}

impl EncoderInputs {
    pub fn new(adj: SparseRowMatrix, x: &DenseMatrix) -> Result<Self> {
        if adj.rows() != adj.cols() || adj.cols() != x.rows() {
            return Err(Error::shape(
                "encode_gcn",
                format!("adjacency {}x{} vs features {:?}", adj.rows(), adj.cols(), x.shape()),
            ));
        }
        let ax = adj.spmm(x)?;
        Ok(Self {
            adj_t: adj.transpose(),
            adj,
            ax,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.ax.cols()
    }

    pub fn adjacency(&self) -> &SparseRowMatrix {
        &self.adj
    }

    pub fn forward(&self, w0: &DenseMatrix, w1: &DenseMatrix) -> Result<(DenseMatrix, EncoderCache)> {
        if w0.rows() != self.ax.cols() || w1.rows() != w0.cols() {
            return Err(Error::shape(
                "encode_gcn",
                format!(
                    "features {} -> W0 {:?} -> W1 {:?}",
                    self.ax.cols(),
                    w0.shape(),
                    w1.shape()
                ),
            ));
        }
        let pre = self.ax.matmul(w0)?;
        let hidden = pre.relu();
        let out = self.adj.spmm(&hidden.matmul(w1)?)?;
        Ok((out, EncoderCache { pre, hidden }))
    }

    /// Gradients of the weights given the gradient of the output.
    pub fn backward(
        &self,
        w1: &DenseMatrix,
        cache: &EncoderCache,
        grad_out: &DenseMatrix,
    ) -> Result<(DenseMatrix, DenseMatrix)> {
        let grad_y = self.adj_t.spmm(grad_out)?;
        let grad_w1 = cache.hidden.t_matmul(&grad_y)?;
        let mut grad_pre = grad_y.matmul_t(w1)?;
        for (g, &p) in grad_pre.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
            if p <= 0.0 {
                *g = 0.0;
            }
        }
        let grad_w0 = self.ax.t_matmul(&grad_pre)?;
        Ok((grad_w0, grad_w1))
    }
}
