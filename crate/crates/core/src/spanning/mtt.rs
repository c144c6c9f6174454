//! Matrix-tree theorem over column-shifted edge weights.

use super::SpanningTreeCrf;
use crate::error::{Error, Result};
use crate::numerics::{Lu, Matrix, Tensor};

/// Exponentiated, column-shifted weights and the Laplacian built from them.
pub(crate) struct Laplacian {
    pub n: usize,
    pub single_root: bool,
    /// `exp(θ[h, d] - shift[d])`, row-major `[n+1, n+1]`.
    pub weights: Vec<f64>,
    /// Per-column max; `shift[0]` is unused.
    pub shift: Vec<f64>,
    pub matrix: Matrix,
}

/// Matrix entries `(row, col, coef)` that edge `h -> d` contributes to.
///
/// Multi-root: the word Laplacian minor, with root edges on the diagonal only.
/// Single-root: the same with root weights left off the diagonal and row 0
/// replaced by the root weights.
pub(crate) fn edge_entries(h: usize, d: usize, single_root: bool) -> ([(usize, usize, f64); 2], usize) {
    let col = d - 1;
    let mut out = [(0, 0, 0.0); 2];
    let mut len = 0;
    let mut push = |e| {
        out[len] = e;
        len += 1;
    };
    if single_root {
        if h == 0 {
            push((0, col, 1.0));
        } else {
            if col != 0 {
                push((col, col, 1.0));
            }
            if h - 1 != 0 {
                push((h - 1, col, -1.0));
            }
        }
    } else {
        push((col, col, 1.0));
        if h != 0 {
            push((h - 1, col, -1.0));
        }
    }
    (out, len)
}

impl Laplacian {
    /// `None` when some word has no finite incoming edge.
    pub fn build(w: &Tensor, single_root: bool) -> Option<Laplacian> {
        let size = w.shape()[0];
        let n = size - 1;
        let mut shift = vec![0.0; size];
        for d in 1..size {
            let m = (0..size).map(|h| w.get(&[h, d])).fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return None;
            }
            shift[d] = m;
        }
        let mut weights = vec![0.0; size * size];
        let mut matrix = Matrix::zeros(n);
        for h in 0..size {
            for d in 1..size {
                let x = (w.get(&[h, d]) - shift[d]).exp();
                weights[h * size + d] = x;
                if x == 0.0 {
                    continue;
                }
                let (entries, len) = edge_entries(h, d, single_root);
                for &(r, c, coef) in &entries[..len] {
                    *matrix.at_mut(r, c) += coef * x;
                }
            }
        }
        Some(Laplacian {
            n,
            single_root,
            weights,
            shift,
            matrix,
        })
    }

    pub fn log_partition(&self) -> f64 {
        let (sign, logdet) = Lu::factor(&self.matrix).signed_log_det();
        if sign <= 0 {
            return f64::NEG_INFINITY;
        }
        logdet + self.shift[1..].iter().sum::<f64>()
    }

    /// Edge marginals `w_e · Σ coef · (A⁻¹)[col, row]`; `None` when singular.
    pub fn marginals(&self) -> Option<Tensor> {
        let lu = Lu::factor(&self.matrix);
        if lu.signed_log_det().0 <= 0 {
            return None;
        }
        let inv = lu.inverse()?;
        let size = self.n + 1;
        let mut out = Tensor::zeros(vec![size, size]);
        for h in 0..size {
            for d in 1..size {
                let x = self.weights[h * size + d];
                if x == 0.0 {
                    continue;
                }
                let (entries, len) = edge_entries(h, d, self.single_root);
                let g: f64 = entries[..len]
                    .iter()
                    .map(|&(r, c, coef)| coef * inv.at(c, r))
                    .sum();
                out.set(&[h, d], (x * g).clamp(0.0, 1.0));
            }
        }
        Some(out)
    }
}

fn require_non_projective(d: &SpanningTreeCrf) -> Result<()> {
    if d.projective() {
        return Err(Error::InvalidParameters(
            "the matrix-tree theorem counts non-projective trees".into(),
        ));
    }
    Ok(())
}

/// Log-partition of a non-projective instance; undirected instances go
/// through their rooted reduction. `-inf` when no tree has a finite score.
pub fn mtt_log_partition(d: &SpanningTreeCrf) -> Result<f64> {
    require_non_projective(d)?;
    Ok(match Laplacian::build(&d.directed_weights(), d.single_root_edge()) {
        Some(l) => l.log_partition(),
        None => f64::NEG_INFINITY,
    })
}

/// Edge marginals in the instance's own layout.
pub fn mtt_marginals(d: &SpanningTreeCrf) -> Result<Tensor> {
    require_non_projective(d)?;
    let m = Laplacian::build(&d.directed_weights(), d.single_root_edge())
        .and_then(|l| l.marginals())
        .ok_or(Error::Vacuous)?;
    Ok(d.fold_directed(m))
}
