//! Spanning trees over `n` words and an artificial root, node 0.
//!
//! All eight variants share one `[n+1, n+1]` adjacency of log-potentials with
//! entry `(h, d)` scoring the edge `h -> d`. Undirected instances read the
//! upper triangle and are reduced to rooted arborescences by orienting every
//! tree away from node 0.
//!
//! | projective | quantity          | algorithm                               |
//! |------------|-------------------|-----------------------------------------|
//! | no         | logZ, marginals   | matrix-tree theorem and its inverse     |
//! | no         | argmax            | Chu-Liu-Edmonds contraction             |
//! | no         | sample            | Wilson, falling back to Colbourn        |
//! | yes        | logZ, marginals   | Eisner inside-outside                   |
//! | yes        | argmax            | tabulated arc-hybrid (Kuhlmann)         |
//! | yes        | sample            | Eisner forward-filtering backward-sampling |
//!
//! The single-root-edge constraint is handled by the first-row replacement
//! Laplacian, a root-split Eisner goal, and reweighting for argmax.

mod argmax;
mod eisner;
mod mtt;
mod sampling;

pub use argmax::{cle_argmax, kuhlmann_argmax, reweighting_constant, TreeArgmax};
pub use eisner::{eisner_log_partition, eisner_max_score};
pub use mtt::{mtt_log_partition, mtt_marginals};
pub use sampling::{colbourn_sample, wilson_sample, REJECTION_CAP, WALK_STEP_CAP};

pub(crate) use eisner::eisner_hypergraph;
pub(crate) use mtt::Laplacian;

use crate::dist::{expect_shape, FamilyConfig, LogPotentials, NamedTensors, StructureIndicator};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

const NINF: f64 = f64::NEG_INFINITY;

/// Head of every node; index 0 is the root and its entry is ignored.
pub type Heads = Vec<usize>;

#[derive(Clone, Debug, PartialEq)]
pub struct SpanningTreeCrf {
    n: usize,
    directed: bool,
    projective: bool,
    single_root_edge: bool,
    adjacency: Tensor,
}

impl SpanningTreeCrf {
    /// The diagonal and column 0 are forced to `-inf`. Undirected input must
    /// be symmetric between words; the root row supplies root attachments.
    pub fn new(
        adjacency: Tensor,
        directed: bool,
        projective: bool,
        single_root_edge: bool,
    ) -> Result<Self> {
        let n = match *adjacency.shape() {
            [a, b] if a == b && a >= 2 => a - 1,
            ref s => {
                return Err(Error::Shape(format!(
                    "adjacency must be [n+1, n+1] with n >= 1, got {s:?}"
                )))
            }
        };
        let mut adjacency = adjacency;
        for i in 0..=n {
            adjacency.set(&[i, i], NINF);
            adjacency.set(&[i, 0], NINF);
        }
        if !directed {
            for i in 1..=n {
                for j in i + 1..=n {
                    let (a, b) = (adjacency.get(&[i, j]), adjacency.get(&[j, i]));
                    let same = a == b || (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
                    if !same {
                        return Err(Error::InvalidParameters(format!(
                            "undirected adjacency is asymmetric at ({i}, {j}): {a} vs {b}"
                        )));
                    }
                }
            }
        }
        Ok(SpanningTreeCrf {
            n,
            directed,
            projective,
            single_root_edge,
            adjacency,
        })
    }

    pub fn from_potentials(
        n: usize,
        directed: bool,
        projective: bool,
        single_root_edge: bool,
        p: &LogPotentials,
    ) -> Result<Self> {
        let adjacency = expect_shape(p, "adjacency", &[n + 1, n + 1])?;
        Self::new(adjacency, directed, projective, single_root_edge)
    }

    /// Number of words, not counting the root.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn projective(&self) -> bool {
        self.projective
    }

    pub fn single_root_edge(&self) -> bool {
        self.single_root_edge
    }

    /// Same weights and root constraint without the projectivity constraint.
    pub fn non_projective_relaxation(&self) -> SpanningTreeCrf {
        SpanningTreeCrf {
            projective: false,
            ..self.clone()
        }
    }

    pub fn adjacency(&self) -> &Tensor {
        &self.adjacency
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig::SpanningTree {
            n: self.n,
            directed: self.directed,
            projective: self.projective,
            single_root_edge: self.single_root_edge,
        }
    }

    pub fn log_potentials(&self) -> LogPotentials {
        NamedTensors::new().with("adjacency", self.adjacency.clone())
    }

    /// Rooted directed weights: the adjacency itself, or its orientation
    /// `(h, d) <- {min(h,d), max(h,d)}` for undirected instances.
    pub(crate) fn directed_weights(&self) -> Tensor {
        if self.directed {
            return self.adjacency.clone();
        }
        let size = self.n + 1;
        let mut w = Tensor::filled(vec![size, size], NINF);
        for h in 0..size {
            for d in 1..size {
                if h != d {
                    w.set(&[h, d], self.adjacency.get(&[h.min(d), h.max(d)]));
                }
            }
        }
        w
    }

    /// Folds `[h, d]` edge quantities of the rooted view onto this instance's
    /// layout; undirected pairs land in the upper triangle.
    pub(crate) fn fold_directed(&self, t: Tensor) -> Tensor {
        if self.directed {
            return t;
        }
        let size = self.n + 1;
        let mut out = Tensor::zeros(vec![size, size]);
        for h in 0..size {
            for d in 1..size {
                if h != d {
                    let idx = [h.min(d), h.max(d)];
                    out.set(&idx, out.get(&idx) + t.get(&[h, d]));
                }
            }
        }
        out
    }

    /// Whether a head vector is a tree of this variant.
    pub fn admits(&self, heads: &[usize]) -> bool {
        heads.len() == self.n + 1
            && is_arborescence(heads)
            && (!self.projective || is_projective(heads))
            && (!self.single_root_edge || root_degree(heads) == 1)
    }

    pub fn heads_to_indicator(&self, heads: &[usize]) -> Result<StructureIndicator> {
        if !self.admits(heads) {
            return Err(Error::InvalidStructure(format!(
                "heads {:?} are not a tree of this variant",
                &heads[1.min(heads.len())..]
            )));
        }
        let size = self.n + 1;
        let mut t = Tensor::zeros(vec![size, size]);
        for d in 1..size {
            let h = heads[d];
            let idx = if self.directed { [h, d] } else { [h.min(d), h.max(d)] };
            t.set(&idx, 1.0);
        }
        Ok(StructureIndicator::new(NamedTensors::new().with("adjacency", t)))
    }

    pub fn indicator_to_heads(&self, t: &StructureIndicator) -> Result<Heads> {
        let size = self.n + 1;
        t.expect_layout(&[("adjacency", &[size, size])])?;
        let m = t.tensors().require("adjacency")?;
        let heads = if self.directed {
            let mut heads = vec![0; size];
            for d in 0..size {
                let hs: Vec<usize> = (0..size).filter(|&h| m.get(&[h, d]) == 1.0).collect();
                match (d, &hs[..]) {
                    (0, []) => {}
                    (_, &[h]) if d > 0 => heads[d] = h,
                    _ => {
                        return Err(Error::InvalidStructure(format!(
                            "node {d} must have exactly one head"
                        )))
                    }
                }
            }
            heads
        } else {
            let mut edges = Vec::new();
            for i in 0..size {
                for j in 0..size {
                    if m.get(&[i, j]) == 1.0 {
                        if i >= j {
                            return Err(Error::InvalidStructure(
                                "undirected edges belong in the upper triangle".into(),
                            ));
                        }
                        edges.push((i, j));
                    }
                }
            }
            orient_from_root(size, &edges)?
        };
        if !self.admits(&heads) {
            return Err(Error::InvalidStructure(
                "edges are not a tree of this variant".into(),
            ));
        }
        Ok(heads)
    }

    pub fn validate(&self, t: &StructureIndicator) -> Result<()> {
        self.indicator_to_heads(t).map(|_| ())
    }

    /// Score of a head vector under the rooted view.
    pub fn heads_score(&self, heads: &[usize]) -> f64 {
        let w = self.directed_weights();
        (1..=self.n).map(|d| w.get(&[heads[d], d])).sum()
    }

    /// Finite weights of the rooted view span `max - min`.
    pub(crate) fn finite_range(&self) -> f64 {
        let w = self.directed_weights();
        let finite = w.data().iter().copied().filter(|x| x.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, NINF), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }
}

/// The rooted directed instance in score-preserving bijection with an
/// undirected one: each tree is oriented away from node 0.
pub fn undirected_to_directed(d: &SpanningTreeCrf) -> Result<SpanningTreeCrf> {
    if d.directed {
        return Err(Error::InvalidParameters("instance is already directed".into()));
    }
    SpanningTreeCrf::new(d.directed_weights(), true, d.projective, d.single_root_edge)
}

/// Orients an undirected edge set away from node 0.
fn orient_from_root(size: usize, edges: &[(usize, usize)]) -> Result<Heads> {
    if edges.len() + 1 != size {
        return Err(Error::InvalidStructure(format!(
            "a spanning tree over {size} nodes has {} edges, got {}",
            size - 1,
            edges.len()
        )));
    }
    let mut nbrs = vec![Vec::new(); size];
    for &(a, b) in edges {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let mut heads = vec![usize::MAX; size];
    heads[0] = 0;
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        for &v in &nbrs[u] {
            if heads[v] == usize::MAX {
                heads[v] = u;
                stack.push(v);
            }
        }
    }
    if heads.contains(&usize::MAX) {
        return Err(Error::InvalidStructure("edges do not connect every node".into()));
    }
    Ok(heads)
}

/// Every word has a head other than itself and reaches node 0.
pub fn is_arborescence(heads: &[usize]) -> bool {
    let size = heads.len();
    if size == 0 {
        return false;
    }
    if (1..size).any(|d| heads[d] >= size || heads[d] == d) {
        return false;
    }
    // 0 = unvisited, 1 = on the current path, 2 = reaches the root.
    let mut state = vec![0u8; size];
    state[0] = 2;
    for start in 1..size {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            v = heads[v];
        }
        if state[v] == 1 {
            return false;
        }
        for u in path {
            state[u] = 2;
        }
    }
    true
}

/// No two edges cross when drawn above the sentence with the root at
/// position 0.
pub fn is_projective(heads: &[usize]) -> bool {
    let arcs: Vec<(usize, usize)> = (1..heads.len())
        .map(|d| (heads[d].min(d), heads[d].max(d)))
        .collect();
    arcs.iter().all(|&(a, b)| {
        arcs.iter()
            .all(|&(c, d)| !((a < c && c < b && b < d) || (c < a && a < d && d < b)))
    })
}

pub fn root_degree(heads: &[usize]) -> usize {
    (1..heads.len()).filter(|&d| heads[d] == 0).count()
}

/// Whether every word is reachable from the root over finite edges.
pub(crate) fn all_reachable(w: &Tensor) -> bool {
    let size = w.shape()[0];
    let mut seen = vec![false; size];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        for v in 0..size {
            if !seen[v] && w.get(&[u, v]) > NINF {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
