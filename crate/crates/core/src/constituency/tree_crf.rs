use super::{validate_bracketing, Span};
use crate::dist::hypergraph::{Builder, Hypergraph, NodeId};
use crate::dist::{expect_shape, FamilyConfig, LogPotentials, NamedTensors, StructureIndicator};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Labeled binary trees over `n` leaves scored by labeled spans.
///
/// Every node, leaves included, carries one of `m` labels, so there are
/// `Catalan(n-1) · m^(2n-1)` structures. `spans[i, j, l]` scores span
/// `(i, j)` with label `l`; entries with `i > j` are unused.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeCrf {
    n: usize,
    m: usize,
    spans: Tensor,
}

impl TreeCrf {
    pub fn new(spans: Tensor) -> Result<Self> {
        match *spans.shape() {
            [n, n2, m] if n == n2 && n >= 1 && m >= 1 => Ok(TreeCrf { n, m, spans }),
            ref s => Err(Error::Shape(format!("spans must be [n, n, m], got {s:?}"))),
        }
    }

    pub fn from_potentials(n: usize, m: usize, p: &LogPotentials) -> Result<Self> {
        Self::new(expect_shape(p, "spans", &[n, n, m])?)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_labels(&self) -> usize {
        self.m
    }

    pub fn spans(&self) -> &Tensor {
        &self.spans
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig::TreeCrf {
            n: self.n,
            m: self.m,
        }
    }

    pub fn log_potentials(&self) -> LogPotentials {
        NamedTensors::new().with("spans", self.spans.clone())
    }

    fn part(&self, i: usize, j: usize, label: usize) -> usize {
        (i * self.n + j) * self.m + label
    }

    /// CKY with the label sum folded per span before the split sum:
    /// `L(i,j) = ⊕_l θ(i,j,l)` and `I(i,j) = L(i,j) ⊗ ⊕_k I(i,k) ⊗ I(k+1,j)`,
    /// which costs `O(m n² + n³)`. Splits and labels are tried in
    /// increasing order.
    pub(crate) fn hypergraph(&self) -> Hypergraph {
        let n = self.n;
        let mut b = Builder::new(self.spans.len());
        let mut inside: Vec<NodeId> = vec![0; n * n];
        for width in 1..=n {
            for i in 0..=n - width {
                let j = i + width - 1;
                let labels = b.node();
                for l in 0..self.m {
                    b.edge(&[], &[self.part(i, j, l)]);
                }
                inside[i * n + j] = b.node();
                if i == j {
                    b.edge(&[labels], &[]);
                } else {
                    for k in i..j {
                        b.edge(&[labels, inside[i * n + k], inside[(k + 1) * n + j]], &[]);
                    }
                }
            }
        }
        b.finish()
    }

    pub fn tree_to_indicator(&self, labeled: &[(Span, usize)]) -> Result<StructureIndicator> {
        let spans: Vec<Span> = labeled.iter().map(|&(s, _)| s).collect();
        validate_bracketing(self.n, &spans)?;
        let mut t = Tensor::zeros(self.spans.shape().to_vec());
        for &((i, j), l) in labeled {
            if l >= self.m {
                return Err(Error::InvalidStructure(format!("label {l} out of range")));
            }
            t.set(&[i, j, l], 1.0);
        }
        Ok(StructureIndicator::new(NamedTensors::new().with("spans", t)))
    }

    pub fn indicator_to_tree(&self, t: &StructureIndicator) -> Result<Vec<(Span, usize)>> {
        let (n, m) = (self.n, self.m);
        t.expect_layout(&[("spans", &[n, n, m])])?;
        let data = t.tensors().require("spans")?;
        let mut labeled = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let labels: Vec<usize> = (0..m).filter(|&l| data.get(&[i, j, l]) == 1.0).collect();
                match labels[..] {
                    [] => {}
                    [l] if i <= j => labeled.push(((i, j), l)),
                    _ => {
                        return Err(Error::InvalidStructure(format!(
                            "span ({i}, {j}) must carry at most one label"
                        )))
                    }
                }
            }
        }
        let spans: Vec<Span> = labeled.iter().map(|&(s, _)| s).collect();
        validate_bracketing(n, &spans)?;
        Ok(labeled)
    }

    pub fn validate(&self, t: &StructureIndicator) -> Result<()> {
        self.indicator_to_tree(t).map(|_| ())
    }
}

pub fn cky_log_partition(t: &TreeCrf) -> f64 {
    t.hypergraph().log_partition(t.spans.data())
}
