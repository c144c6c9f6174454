//! Brute-force ground truth for desk-scale instances.
//!
//! [`enumerate_structures`] lists every structure of a configuration once;
//! the `oracle_*` functions then sum over the list directly.

mod check;
mod stats;

pub use check::{
    compare_with_enumeration, compare_with_oracle, finite_difference_error, random_small_config,
    spanning_flag_triples, OracleReport,
};
pub use stats::{chi_square_goodness_of_fit, chi_square_two_sample, ChiSquare};

use std::collections::BTreeMap;

use crate::alignment::{collapse, CtcDist, Move, MonotoneAlignmentCrf, OneToOneMatching};
use crate::chain::{LinearChainCrf, SemiMarkovCrf, Segment};
use crate::constituency::{Span, TreeCrf};
use crate::dist::{FamilyConfig, LogPotentials, Marginals, NamedTensors, StructureIndicator};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::spanning::{Heads, SpanningTreeCrf};

/// Largest structure count the oracle will enumerate.
pub const ENUMERATION_BOUND: u128 = 1_000_000;

/// One enumerated structure, stored as positions in flattened layouts.
#[derive(Clone, Debug, PartialEq)]
pub struct Enumerated {
    /// Parts used, in the flattened log-potential layout, repeated once per
    /// use. The score is `Σ θ[parts[k]]`.
    pub parts: Vec<usize>,
    /// Ones of the public indicator when it differs from `parts` (PCFG
    /// derivations report only their bracketing).
    pub public: Option<Vec<usize>>,
}

impl Enumerated {
    pub fn public_ones(&self) -> &[usize] {
        self.public.as_deref().unwrap_or(&self.parts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumeratedFamily {
    pub config: FamilyConfig,
    pub structures: Vec<Enumerated>,
    /// All-zero tensors in the public indicator layout.
    layout: NamedTensors,
}

impl EnumeratedFamily {
    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    pub fn indicator(&self, i: usize) -> StructureIndicator {
        let mut flat = vec![0.0; self.layout.total_len()];
        for &k in self.structures[i].public_ones() {
            flat[k] = 1.0;
        }
        StructureIndicator::new(self.layout.unflatten_like(&flat).expect("layout fits"))
    }

    pub fn scores(&self, theta: &LogPotentials) -> Vec<f64> {
        let flat = theta.flatten();
        self.structures
            .iter()
            .map(|s| s.parts.iter().map(|&k| flat[k]).sum())
            .collect()
    }
}

fn catalan(k: u128) -> u128 {
    (0..k).fold(1u128, |c, i| c * 2 * (2 * i + 1) / (i + 2))
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn pow(base: usize, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

/// Closed-form count, or an upper bound where no closed form is at hand.
pub fn structure_count_bound(config: &FamilyConfig) -> u128 {
    match *config {
        FamilyConfig::LinearChain { n, m } => pow(m, n),
        FamilyConfig::SemiMarkov { n, m, .. } => pow(2, n - 1).saturating_mul(pow(m, n)),
        FamilyConfig::MonotoneAlignment { n, m } => pow(3, n + m),
        FamilyConfig::Ctc { frames, vocab, .. } => pow(vocab, frames),
        FamilyConfig::OneToOne { n } => (1..=n as u128).product(),
        FamilyConfig::TreeCrf { n, m } => catalan(n as u128 - 1).saturating_mul(pow(m, 2 * n - 1)),
        FamilyConfig::Pcfg { n, nt, pt } => catalan(n as u128 - 1)
            .saturating_mul(pow(nt, n - 1))
            .saturating_mul(pow(pt, n)),
        FamilyConfig::SpanningTree { n, directed, .. } => {
            if directed {
                pow(n, n)
            } else {
                let edges = (n as u128 + 1) * n as u128 / 2;
                binomial(edges, n as u128)
            }
        }
    }
}

fn ones(t: &StructureIndicator) -> Vec<usize> {
    t.flatten()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(k, _)| k)
        .collect()
}

/// Every structure of `config`, each exactly once.
pub fn enumerate_structures(config: &FamilyConfig) -> Result<EnumeratedFamily> {
    let bound = structure_count_bound(config);
    if bound > ENUMERATION_BOUND {
        return Err(Error::EnumerationTooLarge {
            count: bound,
            bound: ENUMERATION_BOUND,
        });
    }
    let plain = |inds: Vec<StructureIndicator>| -> Vec<Enumerated> {
        inds.iter()
            .map(|t| Enumerated {
                parts: ones(t),
                public: None,
            })
            .collect()
    };
    let (structures, layout) = match *config {
        FamilyConfig::LinearChain { n, m } => {
            let c = LinearChainCrf::new(Tensor::zeros(vec![m]), Tensor::zeros(vec![n - 1, m, m]))?;
            let s = sequences(n, m)
                .iter()
                .map(|tags| c.tags_to_indicator(tags))
                .collect::<Result<_>>()?;
            (plain(s), c.log_potentials())
        }
        FamilyConfig::SemiMarkov { n, s, m } => {
            let c = SemiMarkovCrf::new(Tensor::zeros(vec![n, s, m, m]))?;
            let st = segmentations(n, s, m)
                .iter()
                .map(|segs| c.segments_to_indicator(segs))
                .collect::<Result<_>>()?;
            (plain(st), c.log_potentials())
        }
        FamilyConfig::MonotoneAlignment { n, m } => {
            let a = MonotoneAlignmentCrf::new(Tensor::zeros(vec![n + 1, m + 1, 3]))?;
            let s = monotone_paths(n, m)
                .iter()
                .map(|p| a.path_to_indicator(p))
                .collect::<Result<_>>()?;
            (plain(s), a.log_potentials())
        }
        FamilyConfig::Ctc {
            frames,
            vocab,
            ref target,
        } => {
            let c = CtcDist::new(Tensor::zeros(vec![frames, vocab]), target.clone())?;
            let s = sequences(frames, vocab)
                .iter()
                .filter(|p| collapse(p) == *target)
                .map(|p| c.path_to_indicator(p))
                .collect::<Result<_>>()?;
            (plain(s), c.log_potentials())
        }
        FamilyConfig::OneToOne { n } => {
            let o = OneToOneMatching::new(Tensor::zeros(vec![n, n]))?;
            let s = permutations(n)
                .iter()
                .map(|p| o.permutation_to_indicator(p))
                .collect::<Result<_>>()?;
            (plain(s), o.log_potentials())
        }
        FamilyConfig::TreeCrf { n, m } => {
            let t = TreeCrf::new(Tensor::zeros(vec![n, n, m]))?;
            let mut out = Vec::new();
            for spans in bracketings(0, n - 1) {
                for labels in sequences(spans.len(), m) {
                    let mut parts: Vec<usize> = spans
                        .iter()
                        .zip(labels)
                        .map(|(&(i, j), l)| (i * n + j) * m + l)
                        .collect();
                    parts.sort_unstable();
                    out.push(Enumerated {
                        parts,
                        public: None,
                    });
                }
            }
            (out, t.log_potentials())
        }
        FamilyConfig::Pcfg { n, nt, pt } => (
            pcfg_derivations(n, nt, pt),
            NamedTensors::new().with("spans", Tensor::zeros(vec![n, n])),
        ),
        FamilyConfig::SpanningTree {
            n,
            directed,
            projective,
            single_root_edge,
        } => {
            let d = SpanningTreeCrf::new(
                Tensor::zeros(vec![n + 1, n + 1]),
                directed,
                projective,
                single_root_edge,
            )?;
            let s = spanning_candidates(n, directed)
                .into_iter()
                .filter(|h| d.admits(h))
                .map(|h| d.heads_to_indicator(&h))
                .collect::<Result<_>>()?;
            (plain(s), d.log_potentials())
        }
    };
    let layout = layout.unflatten_like(&vec![0.0; layout.total_len()])?;
    Ok(EnumeratedFamily {
        config: config.clone(),
        structures,
        layout,
    })
}

/// All length-`n` sequences over `0..m`, lexicographic.
fn sequences(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..m).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

fn segmentations(n: usize, s: usize, m: usize) -> Vec<Vec<Segment>> {
    fn go(pos: usize, n: usize, s: usize, m: usize, cur: &mut Vec<Segment>, out: &mut Vec<Vec<Segment>>) {
        if pos == n {
            out.push(cur.clone());
            return;
        }
        for width in 1..=s.min(n - pos) {
            for label in 0..m {
                cur.push(Segment {
                    start: pos,
                    width,
                    label,
                });
                go(pos + width, n, s, m, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, s, m, &mut Vec::new(), &mut out);
    out
}

fn monotone_paths(n: usize, m: usize) -> Vec<Vec<Move>> {
    fn go(i: usize, j: usize, n: usize, m: usize, cur: &mut Vec<Move>, out: &mut Vec<Vec<Move>>) {
        if (i, j) == (n, m) {
            out.push(cur.clone());
            return;
        }
        for mv in Move::ALL {
            let (ni, nj) = match mv {
                Move::Diagonal => (i + 1, j + 1),
                Move::Down => (i + 1, j),
                Move::Right => (i, j + 1),
            };
            if ni <= n && nj <= m {
                cur.push(mv);
                go(ni, nj, n, m, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(0, 0, n, m, &mut Vec::new(), &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                cur.push(c);
                go(cur, used, out);
                cur.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Span sets of every binary tree over leaves `i..=j`.
fn bracketings(i: usize, j: usize) -> Vec<Vec<Span>> {
    if i == j {
        return vec![vec![(i, i)]];
    }
    let mut out = Vec::new();
    for k in i..j {
        for left in bracketings(i, k) {
            for right in bracketings(k + 1, j) {
                let mut spans = vec![(i, j)];
                spans.extend(&left);
                spans.extend(&right);
                out.push(spans);
            }
        }
    }
    out
}

/// Binary trees with split points, for walking derivations.
#[derive(Clone, Debug)]
enum Shape {
    Leaf(usize),
    Node(usize, usize, Box<Shape>, Box<Shape>),
}

fn shapes(i: usize, j: usize) -> Vec<Shape> {
    if i == j {
        return vec![Shape::Leaf(i)];
    }
    let mut out = Vec::new();
    for k in i..j {
        for left in shapes(i, k) {
            for right in shapes(k + 1, j) {
                out.push(Shape::Node(i, j, Box::new(left.clone()), Box::new(right)));
            }
        }
    }
    out
}

/// Every derivation of an `n`-word sentence: a tree shape, a nonterminal per
/// internal node and a preterminal per leaf.
fn pcfg_derivations(n: usize, nt: usize, pt: usize) -> Vec<Enumerated> {
    let k = nt + pt;
    let rules_off = nt;
    let emis_off = rules_off + nt * k * k;
    let spans_off = emis_off + n * pt;
    let mut out = Vec::new();
    for shape in shapes(0, n - 1) {
        let mut internal = Vec::new();
        collect_internal(&shape, &mut internal);
        for nts in sequences(internal.len(), nt) {
            for pts in sequences(n, pt) {
                // Symbol index on the rule child axis for each node.
                let symbol = |s: &Shape| match s {
                    Shape::Leaf(i) => nt + pts[*i],
                    Shape::Node(i, j, ..) => {
                        nts[internal.iter().position(|&sp| sp == (*i, *j)).unwrap()]
                    }
                };
                let mut parts = vec![symbol(&shape)];
                let mut spans = Vec::new();
                let mut stack = vec![&shape];
                while let Some(s) = stack.pop() {
                    match s {
                        Shape::Leaf(i) => {
                            parts.push(emis_off + i * pt + pts[*i]);
                            parts.push(spans_off + i * n + i);
                            spans.push(i * n + i);
                        }
                        Shape::Node(i, j, l, r) => {
                            let rule = (symbol(s) * k + symbol(l)) * k + symbol(r);
                            parts.push(rules_off + rule);
                            parts.push(spans_off + i * n + j);
                            spans.push(i * n + j);
                            stack.push(l);
                            stack.push(r);
                        }
                    }
                }
                parts.sort_unstable();
                spans.sort_unstable();
                out.push(Enumerated {
                    parts,
                    public: Some(spans),
                });
            }
        }
    }
    out
}

fn collect_internal(s: &Shape, out: &mut Vec<Span>) {
    if let Shape::Node(i, j, l, r) = s {
        out.push((*i, *j));
        collect_internal(l, out);
        collect_internal(r, out);
    }
}

/// Directed: every head assignment. Undirected: every `n`-edge subset of the
/// complete graph that connects all nodes, oriented away from the root.
fn spanning_candidates(n: usize, directed: bool) -> Vec<Heads> {
    let size = n + 1;
    if directed {
        return sequences(n, size)
            .into_iter()
            .map(|hs| std::iter::once(0).chain(hs).collect())
            .collect();
    }
    let edges: Vec<(usize, usize)> = (0..size)
        .flat_map(|i| (i + 1..size).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    subsets(&edges, 0, n, &mut chosen, &mut |subset| {
        if let Some(heads) = orient(size, subset) {
            out.push(heads);
        }
    });
    out
}

fn subsets<T: Copy>(items: &[T], from: usize, k: usize, cur: &mut Vec<T>, f: &mut impl FnMut(&[T])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in from..items.len() {
        if items.len() - i < k - cur.len() {
            break;
        }
        cur.push(items[i]);
        subsets(items, i + 1, k, cur, f);
        cur.pop();
    }
}

fn orient(size: usize, edges: &[(usize, usize)]) -> Option<Heads> {
    let mut heads = vec![usize::MAX; size];
    heads[0] = 0;
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            let v = if a == u { b } else if b == u { a } else { continue };
            if heads[v] == usize::MAX {
                heads[v] = u;
                stack.push(v);
            }
        }
    }
    (!heads.contains(&usize::MAX)).then_some(heads)
}

/// `log Σ exp(x)` with a max shift and compensated summation.
pub fn compensated_logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in xs {
        let y = (x - m).exp();
        let t = sum + y;
        // Neumaier's variant keeps the larger operand's low bits.
        if sum.abs() >= y.abs() {
            comp += (sum - t) + y;
        } else {
            comp += (y - t) + sum;
        }
        sum = t;
    }
    m + (sum + comp).ln()
}

pub fn oracle_log_partition(ef: &EnumeratedFamily, theta: &LogPotentials) -> f64 {
    compensated_logsumexp(&ef.scores(theta))
}

/// Probability of every enumerated structure.
pub fn oracle_probabilities(ef: &EnumeratedFamily, theta: &LogPotentials) -> Vec<f64> {
    let scores = ef.scores(theta);
    let z = compensated_logsumexp(&scores);
    scores.iter().map(|s| (s - z).exp()).collect()
}

/// `Σ_t p(t) · indicator(t)`, in the layout of the public indicators.
pub fn oracle_marginals(ef: &EnumeratedFamily, theta: &LogPotentials) -> Result<Marginals> {
    let probs = oracle_probabilities(ef, theta);
    let mut acc = vec![0.0; ef.layout.total_len()];
    for (s, p) in ef.structures.iter().zip(&probs) {
        for &k in s.public_ones() {
            acc[k] += p;
        }
    }
    ef.layout.unflatten_like(&acc)
}

/// `-Σ_t p(t) log q(t)`; `+inf` when `p` reaches a structure `q` forbids.
pub fn oracle_cross_entropy(ef: &EnumeratedFamily, p: &LogPotentials, q: &LogPotentials) -> f64 {
    let probs = oracle_probabilities(ef, p);
    let q_scores = ef.scores(q);
    let z_q = compensated_logsumexp(&q_scores);
    let mut h = 0.0;
    for (&pt, &qs) in probs.iter().zip(&q_scores) {
        if pt == 0.0 {
            continue;
        }
        if qs == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        h -= pt * (qs - z_q);
    }
    h
}

pub fn oracle_entropy(ef: &EnumeratedFamily, theta: &LogPotentials) -> f64 {
    oracle_cross_entropy(ef, theta, theta)
}

pub fn oracle_kl(ef: &EnumeratedFamily, p: &LogPotentials, q: &LogPotentials) -> f64 {
    let h_pq = oracle_cross_entropy(ef, p, q);
    if h_pq == f64::INFINITY {
        return h_pq;
    }
    h_pq - oracle_entropy(ef, p)
}

/// Best structure by enumeration order on ties, and its score.
pub fn oracle_argmax(ef: &EnumeratedFamily, theta: &LogPotentials) -> Option<(StructureIndicator, f64)> {
    let scores = ef.scores(theta);
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s > f64::NEG_INFINITY && best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best.map(|b| (ef.indicator(b), scores[b]))
}

/// Probability of each distinct public indicator, keyed by
/// [`indicator_key`]. Derivations sharing a bracketing are pooled.
pub fn oracle_indicator_distribution(
    ef: &EnumeratedFamily,
    theta: &LogPotentials,
) -> BTreeMap<Vec<usize>, f64> {
    let mut out = BTreeMap::new();
    for (s, p) in ef.structures.iter().zip(oracle_probabilities(ef, theta)) {
        let mut key = s.public_ones().to_vec();
        key.sort_unstable();
        key.dedup();
        *out.entry(key).or_insert(0.0) += p;
    }
    out
}

/// Positions of the ones in a flattened indicator.
pub fn indicator_key(t: &StructureIndicator) -> Vec<usize> {
    ones(t)
}
