//! Highest-scoring trees: tabulated arc-hybrid for projective trees and
//! Chu-Liu-Edmonds contraction for arborescences.

use super::{all_reachable, root_degree, Heads, SpanningTreeCrf, NINF};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct TreeArgmax {
    pub heads: Heads,
    pub score: f64,
}

/// `C = n · (max finite weight - min finite weight) + 1`. Subtracting `C`
/// from every root edge makes any tree with one root edge outscore every tree
/// with more.
pub fn reweighting_constant(d: &SpanningTreeCrf) -> f64 {
    d.len() as f64 * d.finite_range() + 1.0
}

fn reweighted(d: &SpanningTreeCrf) -> Tensor {
    let mut w = d.directed_weights();
    if d.single_root_edge() {
        let c = reweighting_constant(d);
        for x in &mut w.data_mut()[..=d.len()] {
            *x -= c;
        }
    }
    w
}

fn finish(d: &SpanningTreeCrf, heads: Option<Heads>) -> Result<TreeArgmax> {
    let heads = heads.ok_or(Error::Vacuous)?;
    let score = d.heads_score(&heads);
    if score == NINF || (d.single_root_edge() && root_degree(&heads) != 1) {
        return Err(Error::Vacuous);
    }
    Ok(TreeArgmax { heads, score })
}

/// Best projective tree by the arc-hybrid tabulation: item `[i, j]` covers
/// the words strictly between `i` and `j`, each attached to `i` or `j`, with a
/// sentinel at `n + 1` that takes no dependents. Splits are tried left to
/// right and ties between heads go to the left one.
///
/// The tabulation has spurious derivations, so it serves argmax only.
pub fn kuhlmann_argmax(d: &SpanningTreeCrf) -> Result<TreeArgmax> {
    if !d.projective() {
        return Err(Error::InvalidParameters(
            "arc-hybrid tabulation finds projective trees only".into(),
        ));
    }
    finish(d, arc_hybrid(&reweighted(d)))
}

fn arc_hybrid(w: &Tensor) -> Option<Heads> {
    let size = w.shape()[0];
    let end = size; // sentinel position n + 1
    let span = end + 1;
    let s = |h: usize, k: usize| if h == end { NINF } else { w.get(&[h, k]) };
    let mut chart = vec![NINF; span * span];
    // (split, head) per item.
    let mut back = vec![(0usize, 0usize); span * span];
    for i in 0..end {
        chart[i * span + i + 1] = 0.0;
    }
    for width in 2..=end {
        for i in 0..=end - width {
            let j = i + width;
            let mut best = NINF;
            let mut arg = None;
            for k in i + 1..j {
                let inner = chart[i * span + k] + chart[k * span + j];
                let (head, arc) = if s(i, k) >= s(j, k) { (i, s(i, k)) } else { (j, s(j, k)) };
                let total = inner + arc;
                if arg.is_none() || total > best {
                    best = total;
                    arg = Some((k, head));
                }
            }
            chart[i * span + j] = best;
            back[i * span + j] = arg.expect("width >= 2 has a split");
        }
    }
    if chart[end] == NINF {
        return None;
    }
    let mut heads = vec![0; size];
    let mut stack = vec![(0, end)];
    while let Some((i, j)) = stack.pop() {
        if j == i + 1 {
            continue;
        }
        let (k, head) = back[i * span + j];
        heads[k] = head;
        stack.push((i, k));
        stack.push((k, j));
    }
    Some(heads)
}

/// Maximum arborescence by greedy incoming edges and recursive cycle
/// contraction. Heads are chosen by smallest index among equal weights.
pub fn cle_argmax(d: &SpanningTreeCrf) -> Result<TreeArgmax> {
    if d.projective() {
        return Err(Error::InvalidParameters(
            "contraction ignores projectivity; use the arc-hybrid argmax".into(),
        ));
    }
    let w = reweighted(d);
    if !all_reachable(&w) {
        return Err(Error::Vacuous);
    }
    let size = w.shape()[0];
    finish(d, Some(chu_liu_edmonds(w.data(), size)))
}

fn chu_liu_edmonds(w: &[f64], size: usize) -> Heads {
    let at = |u: usize, v: usize| w[u * size + v];
    let mut head = vec![0; size];
    for v in 1..size {
        let mut best = 0;
        for u in 1..size {
            if u != v && at(u, v) > at(best, v) {
                best = u;
            }
        }
        head[v] = best;
    }
    let Some(cycle) = find_cycle(&head) else {
        return head;
    };

    let mut in_cycle = vec![false; size];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    let mut to_new = vec![usize::MAX; size];
    let mut to_old = Vec::new();
    for v in 0..size {
        if !in_cycle[v] {
            to_new[v] = to_old.len();
            to_old.push(v);
        }
    }
    let c = to_old.len();
    let small = c + 1;
    let mut w2 = vec![NINF; small * small];
    // Cycle node entered from each outside head, and cycle node each
    // outside dependent leaves from.
    let mut enter = vec![cycle[0]; small];
    let mut leave = vec![cycle[0]; small];
    for (nu, &u) in to_old.iter().enumerate() {
        for (nv, &v) in to_old.iter().enumerate() {
            if u != v {
                w2[nu * small + nv] = at(u, v);
            }
        }
        for &v in &cycle {
            let gain = at(u, v) - at(head[v], v);
            if gain > w2[nu * small + c] {
                w2[nu * small + c] = gain;
                enter[nu] = v;
            }
        }
    }
    for (nv, &v) in to_old.iter().enumerate().skip(1) {
        for &u in &cycle {
            if at(u, v) > w2[c * small + nv] {
                w2[c * small + nv] = at(u, v);
                leave[nv] = u;
            }
        }
    }
    let h2 = chu_liu_edmonds(&w2, small);
    for (nv, &v) in to_old.iter().enumerate().skip(1) {
        head[v] = if h2[nv] == c { leave[nv] } else { to_old[h2[nv]] };
    }
    let from = h2[c];
    head[enter[from]] = to_old[from];
    head
}

/// Nodes of a cycle among head pointers, if any.
fn find_cycle(head: &[usize]) -> Option<Vec<usize>> {
    let size = head.len();
    let mut stamp = vec![0usize; size];
    for start in 1..size {
        let mut v = start;
        while v != 0 && stamp[v] == 0 {
            stamp[v] = start;
            v = head[v];
        }
        if v != 0 && stamp[v] == start {
            let mut cycle = vec![v];
            let mut u = head[v];
            while u != v {
                cycle.push(u);
                u = head[u];
            }
            return Some(cycle);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(rows: &[Vec<f64>], projective: bool, single: bool) -> SpanningTreeCrf {
        SpanningTreeCrf::new(Tensor::from_rows(rows).unwrap(), true, projective, single).unwrap()
    }

    #[test]
    fn arc_hybrid_finds_dominant_tree() {
        let mut rows = vec![vec![0.0; 4]; 4];
        rows[0][2] = 5.0;
        rows[2][1] = 5.0;
        rows[2][3] = 5.0;
        for single in [false, true] {
            let best = kuhlmann_argmax(&instance(&rows, true, single)).unwrap();
            assert_eq!(best.heads, vec![0, 2, 0, 2]);
            assert_eq!(best.score, 15.0);
        }
    }

    #[test]
    fn contraction_resolves_an_attractive_cycle() {
        let rows = vec![
            vec![0.0, 1.0, 0.5],
            vec![0.0, 0.0, 10.0],
            vec![0.0, 10.0, 0.0],
        ];
        let best = cle_argmax(&instance(&rows, false, false)).unwrap();
        // Enter the 1 <-> 2 cycle through the stronger root edge.
        assert_eq!(best.heads, vec![0, 0, 1]);
        assert_eq!(best.score, 11.0);
    }

    #[test]
    fn reweighting_forces_one_root_edge() {
        let mut rows = vec![vec![0.0; 4]; 4];
        for d in 1..4 {
            rows[0][d] = 3.0;
        }
        let multi = cle_argmax(&instance(&rows, false, false)).unwrap();
        assert_eq!(root_degree(&multi.heads), 3);
        let single = cle_argmax(&instance(&rows, false, true)).unwrap();
        assert_eq!(root_degree(&single.heads), 1);
        assert_eq!(single.score, 3.0);
    }

    #[test]
    fn unreachable_words_are_vacuous() {
        let ninf = NINF;
        let rows = vec![
            vec![ninf, 0.0, ninf],
            vec![ninf, ninf, ninf],
            vec![ninf, ninf, ninf],
        ];
        assert_eq!(cle_argmax(&instance(&rows, false, false)), Err(Error::Vacuous));
        assert_eq!(kuhlmann_argmax(&instance(&rows, true, false)), Err(Error::Vacuous));
    }

    #[test]
    fn ties_are_deterministic() {
        let rows = vec![vec![0.0; 4]; 4];
        let a = cle_argmax(&instance(&rows, false, false)).unwrap();
        let b = cle_argmax(&instance(&rows, false, false)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.heads, vec![0, 0, 0, 0]);
        let p = kuhlmann_argmax(&instance(&rows, true, false)).unwrap();
        assert_eq!(p, kuhlmann_argmax(&instance(&rows, true, false)).unwrap());
    }
}
