use super::{bracketing_from_mask, bracketing_to_mask, validate_bracketing, Span};
use crate::dist::hypergraph::{Builder, Hypergraph, NodeId};
use crate::dist::{expect_shape, FamilyConfig, LogPotentials, NamedTensors, StructureIndicator};
use crate::error::{Error, Result};
use crate::numerics::{logsumexp, Tensor};

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// A binary PCFG in Chomsky normal form, conditioned on a sentence.
///
/// Nonterminals occupy child indices `0..nt` and preterminals `nt..nt+pt` of
/// the rule tensor. Nonterminals always span two or more words; preterminals
/// span exactly one, scored by `emissions[i, p]`. `spans[i, j]` is an extra
/// label-agnostic log-potential on every constituent `(i, j)`; it is zero
/// unless a caller masks spans with `-inf`.
///
/// Structures are derivations. Indicators, argmax and samples expose only
/// their bracketing as an `[n, n]` span mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Pcfg {
    n: usize,
    nt: usize,
    pt: usize,
    root: Tensor,
    rules: Tensor,
    emissions: Tensor,
    spans: Tensor,
}

impl Pcfg {
    pub fn new(root: Tensor, rules: Tensor, emissions: Tensor, spans: Option<Tensor>) -> Result<Self> {
        let [nt] = *root.shape() else {
            return Err(Error::Shape("root must be [NT]".into()));
        };
        let [n, pt] = *emissions.shape() else {
            return Err(Error::Shape("emissions must be [n, PT]".into()));
        };
        if nt == 0 || pt == 0 {
            return Err(Error::Shape("a grammar needs NT >= 1 and PT >= 1".into()));
        }
        if n < 2 {
            return Err(Error::Shape(
                "a binary grammar without unary rules needs n >= 2".into(),
            ));
        }
        let k = nt + pt;
        if rules.shape() != [nt, k, k] {
            return Err(Error::Shape(format!(
                "rules must be [{nt}, {k}, {k}], got {:?}",
                rules.shape()
            )));
        }
        let spans = spans.unwrap_or_else(|| Tensor::zeros(vec![n, n]));
        if spans.shape() != [n, n] {
            return Err(Error::Shape(format!("spans must be [{n}, {n}]")));
        }
        check_normalized("root", root.data())?;
        for a in 0..nt {
            check_normalized(&format!("rules[{a}]"), &rules.data()[a * k * k..(a + 1) * k * k])?;
        }
        Ok(Pcfg {
            n,
            nt,
            pt,
            root,
            rules,
            emissions,
            spans,
        })
    }

    /// `spans` may be omitted from the potentials.
    pub fn from_potentials(n: usize, nt: usize, pt: usize, p: &LogPotentials) -> Result<Self> {
        let k = nt + pt;
        let spans = match p.get("spans") {
            Some(_) => Some(expect_shape(p, "spans", &[n, n])?),
            None => None,
        };
        Self::new(
            expect_shape(p, "root", &[nt])?,
            expect_shape(p, "rules", &[nt, k, k])?,
            expect_shape(p, "emissions", &[n, pt])?,
            spans,
        )
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nt
    }

    pub fn num_preterminals(&self) -> usize {
        self.pt
    }

    pub fn spans(&self) -> &Tensor {
        &self.spans
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig::Pcfg {
            n: self.n,
            nt: self.nt,
            pt: self.pt,
        }
    }

    pub fn log_potentials(&self) -> LogPotentials {
        NamedTensors::new()
            .with("root", self.root.clone())
            .with("rules", self.rules.clone())
            .with("emissions", self.emissions.clone())
            .with("spans", self.spans.clone())
    }

    /// Flat parameters in `log_potentials` order, as the hypergraph expects.
    pub(crate) fn theta(&self) -> Vec<f64> {
        self.log_potentials().flatten()
    }

    fn rules_offset(&self) -> usize {
        self.nt
    }

    fn emissions_offset(&self) -> usize {
        self.rules_offset() + self.rules.len()
    }

    pub(crate) fn spans_offset(&self) -> usize {
        self.emissions_offset() + self.emissions.len()
    }

    /// Inside items: preterminals `P(i, p)`, then nonterminals `N(i, j, A)` by
    /// increasing width, then the goal. Splits are tried by `k`, then left
    /// child, then right child, all ascending.
    pub(crate) fn hypergraph(&self) -> Hypergraph {
        let (n, nt, pt) = (self.n, self.nt, self.pt);
        let k = nt + pt;
        let mut b = Builder::new(self.theta().len());
        let span_part = |i: usize, j: usize| self.spans_offset() + i * n + j;

        let mut pre: Vec<NodeId> = Vec::with_capacity(n * pt);
        for i in 0..n {
            for p in 0..pt {
                pre.push(b.node());
                b.edge(&[], &[self.emissions_offset() + i * pt + p, span_part(i, i)]);
            }
        }
        // N(i, j, a) for width >= 2.
        let mut inner: Vec<NodeId> = vec![NodeId::MAX; n * n * nt];
        let child = |inner: &[NodeId], i: usize, j: usize, c: usize| -> Option<NodeId> {
            match (i == j, c < nt) {
                (true, false) => Some(pre[i * pt + c - nt]),
                (false, true) => Some(inner[(i * n + j) * nt + c]),
                _ => None,
            }
        };
        for width in 2..=n {
            for i in 0..=n - width {
                let j = i + width - 1;
                for a in 0..nt {
                    let node = b.node();
                    for split in i..j {
                        for left in 0..k {
                            let Some(l) = child(&inner, i, split, left) else {
                                continue;
                            };
                            for right in 0..k {
                                let Some(r) = child(&inner, split + 1, j, right) else {
                                    continue;
                                };
                                let rule = self.rules_offset() + (a * k + left) * k + right;
                                b.edge(&[l, r], &[rule, span_part(i, j)]);
                            }
                        }
                    }
                    inner[(i * n + j) * nt + a] = node;
                }
            }
        }
        b.node();
        for a in 0..nt {
            b.edge(&[inner[(n - 1) * nt + a]], &[a]);
        }
        b.finish()
    }

    /// Bracketing used by a derivation given as its part multiset.
    pub(crate) fn bracketing_of_parts(&self, parts: &[u32]) -> Vec<Span> {
        let off = self.spans_offset();
        let mut spans: Vec<Span> = parts
            .iter()
            .map(|&p| p as usize)
            .filter(|&p| p >= off)
            .map(|p| ((p - off) / self.n, (p - off) % self.n))
            .collect();
        spans.sort_unstable();
        spans
    }

    pub fn bracketing_to_indicator(&self, spans: &[Span]) -> Result<StructureIndicator> {
        validate_bracketing(self.n, spans)?;
        Ok(StructureIndicator::new(
            NamedTensors::new().with("spans", bracketing_to_mask(self.n, spans)),
        ))
    }

    pub fn indicator_to_bracketing(&self, t: &StructureIndicator) -> Result<Vec<Span>> {
        t.expect_layout(&[("spans", &[self.n, self.n])])?;
        bracketing_from_mask(t.tensors().require("spans")?)
    }

    pub fn validate(&self, t: &StructureIndicator) -> Result<()> {
        self.indicator_to_bracketing(t).map(|_| ())
    }

    /// Same grammar with `-inf` added to every span outside `spans`.
    pub fn with_sticky_spans(&self, spans: &[Span]) -> Result<Pcfg> {
        let keep = validate_bracketing(self.n, spans)?;
        let mut masked = self.clone();
        for i in 0..self.n {
            for j in i..self.n {
                if keep.binary_search(&(i, j)).is_err() {
                    masked.spans.set(&[i, j], f64::NEG_INFINITY);
                }
            }
        }
        Ok(masked)
    }
}

fn check_normalized(name: &str, log_probs: &[f64]) -> Result<()> {
    let total = logsumexp(log_probs.iter().copied()).exp();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidParameters(format!(
            "{name} must sum to 1 in probability space, got {total}"
        )));
    }
    Ok(())
}

/// Log-probability of the sentence (times any span potentials).
pub fn pcfg_inside(g: &Pcfg) -> f64 {
    g.hypergraph().log_partition(&g.theta())
}

/// Log-probability of the sentence together with bracketing `spans`,
/// summed over labelings.
pub fn pcfg_masked_inside(g: &Pcfg, spans: &[Span]) -> Result<f64> {
    Ok(pcfg_inside(&g.with_sticky_spans(spans)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const NINF: f64 = f64::NEG_INFINITY;

    /// S -> A A with probability 1, one word type.
    fn single_derivation() -> Pcfg {
        let mut rules = Tensor::filled(vec![1, 2, 2], NINF);
        rules.set(&[0, 1, 1], 0.0);
        Pcfg::new(Tensor::from_vec(vec![0.0]), rules, Tensor::zeros(vec![2, 1]), None).unwrap()
    }

    /// S -> A A | B B, each 1/2; both preterminals emit the word with 1/2.
    fn two_derivations() -> Pcfg {
        let half = 0.5f64.ln();
        let mut rules = Tensor::filled(vec![1, 3, 3], NINF);
        rules.set(&[0, 1, 1], half);
        rules.set(&[0, 2, 2], half);
        let emissions = Tensor::filled(vec![2, 2], half);
        Pcfg::new(Tensor::from_vec(vec![0.0]), rules, emissions, None).unwrap()
    }

    #[test]
    fn unique_derivation_has_probability_one() {
        let g = single_derivation();
        assert!(pcfg_inside(&g).abs() < 1e-12);
        assert!(pcfg_masked_inside(&g, &[(0, 0), (1, 1), (0, 1)]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn two_derivations_of_a_quarter_each() {
        let g = two_derivations();
        assert!((pcfg_inside(&g) + 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn masked_insides_partition_the_sentence_probability() {
        // S -> S S | A A over n = 4.
        let mut rules = Tensor::filled(vec![1, 2, 2], NINF);
        rules.set(&[0, 0, 0], 0.3f64.ln());
        rules.set(&[0, 1, 1], 0.7f64.ln());
        let g = Pcfg::new(Tensor::from_vec(vec![0.0]), rules, Tensor::zeros(vec![4, 1]), None)
            .unwrap();
        let balanced = [(0, 3), (0, 1), (2, 3), (0, 0), (1, 1), (2, 2), (3, 3)];
        let left = [(0, 3), (0, 2), (0, 1), (0, 0), (1, 1), (2, 2), (3, 3)];
        // Mixed children are forbidden, so only the balanced tree survives.
        assert!((pcfg_masked_inside(&g, &balanced).unwrap() - pcfg_inside(&g)).abs() < 1e-12);
        assert_eq!(pcfg_masked_inside(&g, &left).unwrap(), NINF);
    }

    #[test]
    fn rejects_unnormalized_rules() {
        let rules = Tensor::zeros(vec![1, 2, 2]);
        let r = Pcfg::new(Tensor::from_vec(vec![0.0]), rules, Tensor::zeros(vec![2, 1]), None);
        assert!(matches!(r, Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn viterbi_derivation_reports_its_bracketing() {
        let g = single_derivation();
        let (score, parts) = g.hypergraph().viterbi(&g.theta());
        assert_eq!(score, 0.0);
        assert_eq!(g.bracketing_of_parts(&parts), vec![(0, 0), (0, 1), (1, 1)]);
    }
}
