//! Eisner's first-order projective chart as a recorded hypergraph.

use super::SpanningTreeCrf;
use crate::dist::hypergraph::{Builder, Hypergraph, NodeId};
use crate::error::{Error, Result};
use crate::numerics::{MaxPlus, Tensor};

/// Complete and incomplete items over positions `lo..=n`, by increasing
/// width. `I→(i,j)` holds the arc `i -> j`, `I←(i,j)` the arc `j -> i`.
///
/// Multi-root charts include the root as position 0 and end in `C→(0, n)`.
/// Single-root charts cover the words only; the goal picks the root's one
/// child `r` and joins `C←(1, r)` with `C→(r, n)`. Either way every projective
/// tree has exactly one derivation. Parts are flat indices `h * (n+1) + d`.
pub(crate) fn eisner_hypergraph(n: usize, single_root: bool) -> Hypergraph {
    let size = n + 1;
    let lo = usize::from(single_root);
    let arc = |h: usize, d: usize| h * size + d;
    let idx = |i: usize, j: usize| i * size + j;
    let mut b = Builder::new(size * size);
    let none = NodeId::MAX;
    let (mut cr, mut cl) = (vec![none; size * size], vec![none; size * size]);
    let (mut ir, mut il) = (vec![none; size * size], vec![none; size * size]);

    for i in lo..=n {
        cr[idx(i, i)] = b.node();
        b.edge(&[], &[]);
        cl[idx(i, i)] = b.node();
        b.edge(&[], &[]);
    }
    for width in 1..=n - lo {
        for i in lo..=n - width {
            let j = i + width;
            ir[idx(i, j)] = b.node();
            for k in i..j {
                b.edge(&[cr[idx(i, k)], cl[idx(k + 1, j)]], &[arc(i, j)]);
            }
            il[idx(i, j)] = b.node();
            if i > 0 {
                for k in i..j {
                    b.edge(&[cr[idx(i, k)], cl[idx(k + 1, j)]], &[arc(j, i)]);
                }
            }
            cr[idx(i, j)] = b.node();
            for k in i + 1..=j {
                b.edge(&[ir[idx(i, k)], cr[idx(k, j)]], &[]);
            }
            cl[idx(i, j)] = b.node();
            for k in i..j {
                b.edge(&[cl[idx(i, k)], il[idx(k, j)]], &[]);
            }
        }
    }
    b.node();
    if single_root {
        for r in 1..=n {
            b.edge(&[cl[idx(1, r)], cr[idx(r, n)]], &[arc(0, r)]);
        }
    } else {
        b.edge(&[cr[idx(0, n)]], &[]);
    }
    b.finish()
}

fn require_projective(d: &SpanningTreeCrf) -> Result<Tensor> {
    if !d.projective() {
        return Err(Error::InvalidParameters(
            "Eisner's algorithm counts projective trees only".into(),
        ));
    }
    Ok(d.directed_weights())
}

pub fn eisner_log_partition(d: &SpanningTreeCrf) -> Result<f64> {
    let w = require_projective(d)?;
    Ok(eisner_hypergraph(d.len(), d.single_root_edge()).log_partition(w.data()))
}

/// Best projective tree score by the max-plus Eisner pass.
pub fn eisner_max_score(d: &SpanningTreeCrf) -> Result<f64> {
    let w = require_projective(d)?;
    Ok(eisner_hypergraph(d.len(), d.single_root_edge()).inside::<MaxPlus>(w.data()))
}

/// Head vector read from an Eisner derivation's arcs.
#[cfg(test)]
fn heads_of_parts(n: usize, parts: &[u32]) -> Vec<usize> {
    let size = n + 1;
    let mut heads = vec![0; size];
    for &p in parts {
        let p = p as usize;
        heads[p % size] = p / size;
    }
    heads
}
