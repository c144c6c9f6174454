//! Batched evaluation: every operation is a plain map over instances.
//!
//! [`ChainBatch`] stores linear chains of different lengths in shared
//! `[B, ...]` tensors. Positions past an instance's length hold identity
//! transitions, so running the padded chain gives the same log-partition and
//! marginals on real positions as the unpadded one.

use crate::chain::LinearChainCrf;
use crate::dist::StructuredDistribution;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Applies `op` to each instance in order.
pub fn map_batch<T>(
    batch: &[StructuredDistribution],
    op: impl Fn(&StructuredDistribution) -> Result<T>,
) -> Vec<Result<T>> {
    batch.iter().map(op).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainBatch {
    /// `[B, m]`
    init: Tensor,
    /// `[B, N-1, m, m]` with identity padding past each length.
    transitions: Tensor,
    lengths: Vec<usize>,
}

impl ChainBatch {
    /// Pads every chain to the longest length in the batch.
    pub fn from_chains(chains: &[LinearChainCrf]) -> Result<Self> {
        let first = chains
            .first()
            .ok_or_else(|| Error::Shape("empty batch".into()))?;
        let m = first.num_tags();
        if chains.iter().any(|c| c.num_tags() != m) {
            return Err(Error::Shape("chains in a batch must share the tag count".into()));
        }
        let total = chains.iter().map(|c| c.len()).max().unwrap_or(1);
        let mut init = Vec::with_capacity(chains.len() * m);
        let mut trans = Vec::with_capacity(chains.len() * (total - 1) * m * m);
        for c in chains {
            init.extend_from_slice(c.init().data());
            trans.extend_from_slice(c.padded(total)?.transitions().data());
        }
        let b = chains.len();
        Ok(ChainBatch {
            init: Tensor::new(vec![b, m], init)?,
            transitions: Tensor::new(vec![b, total - 1, m, m], trans)?,
            lengths: chains.iter().map(|c| c.len()).collect(),
        })
    }

    /// Wraps pre-padded tensors. Transitions past each length must be
    /// identity (0 on the diagonal, `-inf` elsewhere).
    pub fn new(init: Tensor, transitions: Tensor, lengths: Vec<usize>) -> Result<Self> {
        let [b, m] = *init.shape() else {
            return Err(Error::Shape("init must be [B, m]".into()));
        };
        let [tb, steps, m1, m2] = *transitions.shape() else {
            return Err(Error::Shape("transitions must be [B, N-1, m, m]".into()));
        };
        if tb != b || m1 != m || m2 != m || lengths.len() != b {
            return Err(Error::Shape("batch axes disagree".into()));
        }
        let batch = ChainBatch {
            init,
            transitions,
            lengths,
        };
        for (i, &len) in batch.lengths.iter().enumerate() {
            if len == 0 || len > steps + 1 {
                return Err(Error::Shape(format!("length {len} out of range")));
            }
            let padded = batch.padded_instance(i)?;
            let expected = batch.instance(i)?.padded(steps + 1)?;
            if padded.transitions() != expected.transitions() {
                return Err(Error::InvalidParameters(format!(
                    "instance {i} has non-identity padding"
                )));
            }
        }
        Ok(batch)
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    fn dims(&self) -> (usize, usize) {
        (self.transitions.shape()[1], self.init.shape()[1])
    }

    /// Instance `i` at the full padded length.
    pub fn padded_instance(&self, i: usize) -> Result<LinearChainCrf> {
        let (steps, m) = self.dims();
        let block = steps * m * m;
        let trans = self.transitions.data()[i * block..(i + 1) * block].to_vec();
        LinearChainCrf::new(
            self.init.slice_first(i),
            Tensor::new(vec![steps, m, m], trans)?,
        )
    }

    /// Instance `i` cut to its own length.
    pub fn instance(&self, i: usize) -> Result<LinearChainCrf> {
        let (steps, m) = self.dims();
        let len = self.lengths[i];
        let start = i * steps * m * m;
        let trans = self.transitions.data()[start..start + (len - 1) * m * m].to_vec();
        LinearChainCrf::new(
            self.init.slice_first(i),
            Tensor::new(vec![len - 1, m, m], trans)?,
        )
    }

    pub fn instances(&self) -> Result<Vec<StructuredDistribution>> {
        (0..self.len()).map(|i| Ok(self.instance(i)?.into())).collect()
    }

    pub fn padded_instances(&self) -> Result<Vec<StructuredDistribution>> {
        (0..self.len())
            .map(|i| Ok(self.padded_instance(i)?.into()))
            .collect()
    }
}
