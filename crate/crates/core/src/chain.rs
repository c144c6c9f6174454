//! Linear-chain and semi-Markov CRFs.

use crate::dist::hypergraph::{Builder, Hypergraph, NodeId};
use crate::dist::{expect_shape, FamilyConfig, LogPotentials, NamedTensors, StructureIndicator};
use crate::error::{Error, Result};
use crate::numerics::{semiring_contract, Log, Semiring, Tensor};

/// Tag sequences of length `n` over `m` tags.
///
/// `init[b]` scores the first tag and `transitions[t, a, b]` scores tag `a`
/// at position `t` followed by tag `b` at position `t + 1`, so every step may
/// have its own transition matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearChainCrf {
    n: usize,
    m: usize,
    init: Tensor,
    transitions: Tensor,
}

impl LinearChainCrf {
    pub fn new(init: Tensor, transitions: Tensor) -> Result<Self> {
        let m = match init.shape() {
            [m] if *m > 0 => *m,
            s => return Err(Error::Shape(format!("init must be [m] with m >= 1, got {s:?}"))),
        };
        let n = match transitions.shape() {
            [steps, a, b] if *a == m && *b == m => steps + 1,
            s => {
                return Err(Error::Shape(format!(
                    "transitions must be [n-1, {m}, {m}], got {s:?}"
                )))
            }
        };
        Ok(LinearChainCrf {
            n,
            m,
            init,
            transitions,
        })
    }

    pub fn from_potentials(n: usize, m: usize, p: &LogPotentials) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Shape("linear chain needs n >= 1 and m >= 1".into()));
        }
        Self::new(
            expect_shape(p, "init", &[m])?,
            expect_shape(p, "transitions", &[n - 1, m, m])?,
        )
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_tags(&self) -> usize {
        self.m
    }

    pub fn init(&self) -> &Tensor {
        &self.init
    }

    pub fn transitions(&self) -> &Tensor {
        &self.transitions
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig::LinearChain {
            n: self.n,
            m: self.m,
        }
    }

    pub fn log_potentials(&self) -> LogPotentials {
        NamedTensors::new()
            .with("init", self.init.clone())
            .with("transitions", self.transitions.clone())
    }

    fn transition_part(&self, step: usize, prev: usize, next: usize) -> usize {
        self.m + (step * self.m + prev) * self.m + next
    }

    /// Forward recurrence `α_{t+1}[b] = ⊕_a α_t[a] ⊗ θ_t[a, b]` in semiring `S`.
    pub fn forward<S: Semiring>(&self) -> f64 {
        let mut alpha = self.init.clone();
        for step in 0..self.n - 1 {
            let theta = self.transitions.slice_first(step);
            alpha = semiring_contract::<S>("a,ab->b", &[&alpha, &theta])
                .expect("shapes are fixed at construction");
        }
        S::sum(alpha.data().iter().copied())
    }

    /// Positions are visited left to right and, at each position, the
    /// previous tag in increasing order; Viterbi ties therefore resolve to the
    /// smallest predecessor tag.
    pub(crate) fn hypergraph(&self) -> Hypergraph {
        let (n, m) = (self.n, self.m);
        let mut b = Builder::new(m + (n - 1) * m * m);
        let mut prev: Vec<NodeId> = (0..m)
            .map(|tag| {
                let v = b.node();
                b.edge(&[], &[tag]);
                v
            })
            .collect();
        for step in 0..n - 1 {
            prev = (0..m)
                .map(|next| {
                    let v = b.node();
                    for (a, &from) in prev.iter().enumerate() {
                        b.edge(&[from], &[self.transition_part(step, a, next)]);
                    }
                    v
                })
                .collect();
        }
        b.node();
        for &last in &prev {
            b.edge(&[last], &[]);
        }
        b.finish()
    }

    pub fn tags_to_indicator(&self, tags: &[usize]) -> Result<StructureIndicator> {
        if tags.len() != self.n || tags.iter().any(|&t| t >= self.m) {
            return Err(Error::InvalidStructure(format!(
                "need {} tags below {}",
                self.n, self.m
            )));
        }
        let mut init = Tensor::zeros(vec![self.m]);
        init.set(&[tags[0]], 1.0);
        let mut trans = Tensor::zeros(vec![self.n - 1, self.m, self.m]);
        for (step, w) in tags.windows(2).enumerate() {
            trans.set(&[step, w[0], w[1]], 1.0);
        }
        Ok(StructureIndicator::new(
            NamedTensors::new()
                .with("init", init)
                .with("transitions", trans),
        ))
    }

    pub fn indicator_to_tags(&self, t: &StructureIndicator) -> Result<Vec<usize>> {
        self.validate(t)?;
        let init = t.tensors().require("init")?;
        let first = init.data().iter().position(|&x| x == 1.0).unwrap();
        let trans = t.tensors().require("transitions")?;
        let mut tags = vec![first];
        for step in 0..self.n - 1 {
            let slice = trans.slice_first(step);
            let pos = slice.data().iter().position(|&x| x == 1.0).unwrap();
            tags.push(pos % self.m);
        }
        Ok(tags)
    }

    pub fn validate(&self, t: &StructureIndicator) -> Result<()> {
        let (n, m) = (self.n, self.m);
        t.expect_layout(&[("init", &[m]), ("transitions", &[n - 1, m, m])])?;
        let init = t.tensors().require("init")?;
        let ones: Vec<usize> = (0..m).filter(|&b| init.data()[b] == 1.0).collect();
        let [mut tag] = ones[..] else {
            return Err(Error::InvalidStructure("init must be one-hot".into()));
        };
        let trans = t.tensors().require("transitions")?;
        for step in 0..n - 1 {
            let slice = trans.slice_first(step);
            let ones: Vec<usize> = (0..m * m).filter(|&k| slice.data()[k] == 1.0).collect();
            let [k] = ones[..] else {
                return Err(Error::InvalidStructure(format!(
                    "transition step {step} must be one-hot"
                )));
            };
            if k / m != tag {
                return Err(Error::InvalidStructure(format!(
                    "transition step {step} does not continue tag {tag}"
                )));
            }
            tag = k % m;
        }
        Ok(())
    }

    /// Extends the chain to `total` positions with identity transitions
    /// (0 on the diagonal, `-inf` elsewhere), which leaves every inference
    /// result on the original positions unchanged.
    pub fn padded(&self, total: usize) -> Result<Self> {
        if total < self.n {
            return Err(Error::Shape(format!(
                "cannot pad a length-{} chain to {total}",
                self.n
            )));
        }
        let m = self.m;
        let mut trans = Tensor::filled(vec![total - 1, m, m], f64::NEG_INFINITY);
        let real = self.transitions.len();
        trans.data_mut()[..real].copy_from_slice(self.transitions.data());
        for step in self.n - 1..total - 1 {
            for a in 0..m {
                trans.set(&[step, a, a], 0.0);
            }
        }
        Self::new(self.init.clone(), trans)
    }
}

pub fn forward_log_partition(chain: &LinearChainCrf) -> f64 {
    chain.forward::<Log>()
}

const STOCHASTIC_TOLERANCE: f64 = 1e-9;

fn check_stochastic(name: &str, rows: &[f64], width: usize) -> Result<()> {
    for (r, row) in rows.chunks(width).enumerate() {
        if row.iter().any(|&p| !(0.0..=1.0 + STOCHASTIC_TOLERANCE).contains(&p)) {
            return Err(Error::InvalidParameters(format!(
                "{name} row {r} has entries outside [0, 1]"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::InvalidParameters(format!(
                "{name} row {r} sums to {s}, not 1"
            )));
        }
    }
    Ok(())
}

/// Folds an HMM and an observation sequence into a linear chain whose
/// log-partition is the observation log-likelihood.
pub fn from_hmm(
    transition: &Tensor,
    emission: &Tensor,
    init: &Tensor,
    observations: &[usize],
) -> Result<LinearChainCrf> {
    let m = init.len();
    let vocab = match emission.shape() {
        [rows, v] if *rows == m => *v,
        s => return Err(Error::Shape(format!("emission must be [{m}, V], got {s:?}"))),
    };
    if transition.shape() != [m, m] {
        return Err(Error::Shape(format!(
            "transition must be [{m}, {m}], got {:?}",
            transition.shape()
        )));
    }
    if observations.is_empty() {
        return Err(Error::Shape("need at least one observation".into()));
    }
    if let Some(&bad) = observations.iter().find(|&&o| o >= vocab) {
        return Err(Error::InvalidParameters(format!(
            "observation {bad} outside vocabulary of size {vocab}"
        )));
    }
    check_stochastic("init", init.data(), m)?;
    check_stochastic("transition", transition.data(), m)?;
    check_stochastic("emission", emission.data(), vocab)?;

    let log_emit = |tag: usize, obs: usize| emission.get(&[tag, obs]).ln();
    let first = Tensor::from_vec(
        (0..m)
            .map(|b| init.data()[b].ln() + log_emit(b, observations[0]))
            .collect(),
    );
    let n = observations.len();
    let mut trans = Tensor::zeros(vec![n - 1, m, m]);
    for (step, &obs) in observations.iter().enumerate().skip(1) {
        for a in 0..m {
            for b in 0..m {
                trans.set(&[step - 1, a, b], transition.get(&[a, b]).ln() + log_emit(b, obs));
            }
        }
    }
    LinearChainCrf::new(first, trans)
}

/// Joint segmentation and labeling of `n` positions.
///
/// `segments[start, w, a, c]` scores a segment of width `w + 1` starting at
/// `start` with label `c` whose preceding segment carries label `a`. The
/// first segment reads the `a = 0` slice; segments that would run past the
/// end never occur.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiMarkovCrf {
    n: usize,
    s: usize,
    m: usize,
    segments: Tensor,
}

/// One labeled segment `[start, start + width)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub width: usize,
    pub label: usize,
}

impl SemiMarkovCrf {
    pub fn new(segments: Tensor) -> Result<Self> {
        match *segments.shape() {
            [n, s, m, m2] if m == m2 && n >= 1 && m >= 1 && (1..=n).contains(&s) => {
                Ok(SemiMarkovCrf { n, s, m, segments })
            }
            ref sh => Err(Error::Shape(format!(
                "segments must be [n, s, m, m] with 1 <= s <= n, got {sh:?}"
            ))),
        }
    }

    pub fn from_potentials(n: usize, s: usize, m: usize, p: &LogPotentials) -> Result<Self> {
        Self::new(expect_shape(p, "segments", &[n, s, m, m])?)
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig::SemiMarkov {
            n: self.n,
            s: self.s,
            m: self.m,
        }
    }

    pub fn log_potentials(&self) -> LogPotentials {
        NamedTensors::new().with("segments", self.segments.clone())
    }

    pub fn segments(&self) -> &Tensor {
        &self.segments
    }

    fn part(&self, start: usize, width: usize, prev: usize, label: usize) -> usize {
        ((start * self.s + width - 1) * self.m + prev) * self.m + label
    }

    /// Items `β(e, c)`: labeled segmentations of `[0, e)` whose last label is `c`.
    pub(crate) fn hypergraph(&self) -> Hypergraph {
        let (n, s, m) = (self.n, self.s, self.m);
        let mut b = Builder::new(self.segments.len());
        let node = |end: usize, label: usize| ((end - 1) * m + label) as NodeId;
        for end in 1..=n {
            for label in 0..m {
                b.node();
                for width in 1..=s.min(end) {
                    let start = end - width;
                    if start == 0 {
                        b.edge(&[], &[self.part(0, width, 0, label)]);
                    } else {
                        for prev in 0..m {
                            b.edge(&[node(start, prev)], &[self.part(start, width, prev, label)]);
                        }
                    }
                }
            }
        }
        b.node();
        for label in 0..m {
            b.edge(&[node(n, label)], &[]);
        }
        b.finish()
    }

    pub fn segments_to_indicator(&self, segs: &[Segment]) -> Result<StructureIndicator> {
        let mut t = Tensor::zeros(self.segments.shape().to_vec());
        let mut prev = 0;
        for seg in segs {
            if seg.width == 0 || seg.width > self.s || seg.label >= self.m {
                return Err(Error::InvalidStructure(format!("bad segment {seg:?}")));
            }
            t.set(&[seg.start, seg.width - 1, prev, seg.label], 1.0);
            prev = seg.label;
        }
        let ind = StructureIndicator::new(NamedTensors::new().with("segments", t));
        self.validate(&ind)?;
        Ok(ind)
    }

    pub fn indicator_to_segments(&self, t: &StructureIndicator) -> Result<Vec<Segment>> {
        let (n, s, m) = (self.n, self.s, self.m);
        t.expect_layout(&[("segments", &[n, s, m, m])])?;
        let data = t.tensors().require("segments")?;
        let mut by_start: Vec<Option<(usize, usize, usize)>> = vec![None; n];
        for start in 0..n {
            for w in 0..s {
                for a in 0..m {
                    for c in 0..m {
                        if data.get(&[start, w, a, c]) == 1.0 {
                            if by_start[start].is_some() {
                                return Err(Error::InvalidStructure(format!(
                                    "two segments start at {start}"
                                )));
                            }
                            by_start[start] = Some((w + 1, a, c));
                        }
                    }
                }
            }
        }
        let mut segs = Vec::new();
        let (mut pos, mut prev) = (0, 0);
        while pos < n {
            let Some((width, a, label)) = by_start[pos].take() else {
                return Err(Error::InvalidStructure(format!("no segment starts at {pos}")));
            };
            if a != prev || pos + width > n {
                return Err(Error::InvalidStructure(format!(
                    "segment at {pos} does not continue the segmentation"
                )));
            }
            segs.push(Segment {
                start: pos,
                width,
                label,
            });
            pos += width;
            prev = label;
        }
        if by_start.iter().any(Option::is_some) {
            return Err(Error::InvalidStructure("segments overlap".into()));
        }
        Ok(segs)
    }

    pub fn validate(&self, t: &StructureIndicator) -> Result<()> {
        self.indicator_to_segments(t).map(|_| ())
    }
}

pub fn semi_markov_log_partition(smc: &SemiMarkovCrf) -> f64 {
    smc.hypergraph().log_partition(smc.segments.data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::MaxPlus;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    fn zeros_chain(n: usize, m: usize) -> LinearChainCrf {
        LinearChainCrf::new(Tensor::zeros(vec![m]), Tensor::zeros(vec![n - 1, m, m])).unwrap()
    }

    fn random_chain(n: usize, m: usize, rng: &mut impl Rng) -> LinearChainCrf {
        let init = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let trans = (0..(n - 1) * m * m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        LinearChainCrf::new(
            Tensor::from_vec(init),
            Tensor::new(vec![n - 1, m, m], trans).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_chain_counts_sequences() {
        let c = zeros_chain(3, 2);
        assert!((forward_log_partition(&c) - 3.0 * LN2).abs() < 1e-12);
        let c = zeros_chain(1, 5);
        assert!((forward_log_partition(&c) - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn forbidding_transitions_into_tag_one() {
        let mut trans = Tensor::zeros(vec![1, 2, 2]);
        trans.set(&[0, 0, 1], f64::NEG_INFINITY);
        trans.set(&[0, 1, 1], f64::NEG_INFINITY);
        let c = LinearChainCrf::new(Tensor::zeros(vec![2]), trans).unwrap();
        assert!((forward_log_partition(&c) - LN2).abs() < 1e-12);
    }

    #[test]
    fn contraction_and_hypergraph_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let c = random_chain(5, 3, &mut rng);
            let theta = c.log_potentials().flatten();
            let g = c.hypergraph();
            assert!((c.forward::<Log>() - g.log_partition(&theta)).abs() < 1e-10);
            assert!((c.forward::<MaxPlus>() - g.inside::<MaxPlus>(&theta)).abs() < 1e-10);
        }
    }

    #[test]
    fn padding_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_chain(4, 3, &mut rng);
        let padded = c.padded(9).unwrap();
        assert_eq!(padded.len(), 9);
        assert!((forward_log_partition(&c) - forward_log_partition(&padded)).abs() < 1e-10);
        assert!(c.padded(3).is_err());
    }

    #[test]
    fn indicator_round_trip_and_validation() {
        let c = zeros_chain(4, 3);
        let t = c.tags_to_indicator(&[2, 0, 0, 1]).unwrap();
        assert_eq!(c.indicator_to_tags(&t).unwrap(), vec![2, 0, 0, 1]);
        let mut broken = t.clone().into_tensors();
        let mut trans = broken.get("transitions").unwrap().clone();
        trans.set(&[1, 0, 0], 0.0);
        trans.set(&[1, 1, 0], 1.0);
        broken.insert("transitions", trans);
        assert!(c.validate(&StructureIndicator::new(broken)).is_err());
        assert!(c.tags_to_indicator(&[0, 3, 0, 0]).is_err());
    }

    #[test]
    fn semi_markov_compositions() {
        let z = |n, s, m| SemiMarkovCrf::new(Tensor::zeros(vec![n, s, m, m])).unwrap();
        assert!((semi_markov_log_partition(&z(2, 2, 1)) - LN2).abs() < 1e-12);
        assert!((semi_markov_log_partition(&z(3, 3, 1)) - 4f64.ln()).abs() < 1e-12);
        // Compositions of 4 with parts <= 2: Fibonacci(5) = 5.
        assert!((semi_markov_log_partition(&z(4, 2, 1)) - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn semi_markov_with_unit_width_is_a_linear_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, m) = (5, 3);
        let data: Vec<f64> = (0..n * m * m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let smc = SemiMarkovCrf::new(Tensor::new(vec![n, 1, m, m], data).unwrap()).unwrap();
        let init = Tensor::from_vec((0..m).map(|c| smc.segments.get(&[0, 0, 0, c])).collect());
        let mut trans = Tensor::zeros(vec![n - 1, m, m]);
        for t in 1..n {
            for a in 0..m {
                for c in 0..m {
                    trans.set(&[t - 1, a, c], smc.segments.get(&[t, 0, a, c]));
                }
            }
        }
        let chain = LinearChainCrf::new(init, trans).unwrap();
        assert!((semi_markov_log_partition(&smc) - forward_log_partition(&chain)).abs() < 1e-9);
    }

    #[test]
    fn semi_markov_indicator_checks() {
        let smc = SemiMarkovCrf::new(Tensor::zeros(vec![5, 3, 2, 2])).unwrap();
        let segs = vec![
            Segment { start: 0, width: 2, label: 1 },
            Segment { start: 2, width: 3, label: 0 },
        ];
        let t = smc.segments_to_indicator(&segs).unwrap();
        assert_eq!(smc.indicator_to_segments(&t).unwrap(), segs);
        let short = vec![Segment { start: 0, width: 2, label: 1 }];
        assert!(smc.segments_to_indicator(&short).is_err());
    }

    #[test]
    fn hmm_examples() {
        let half = Tensor::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let init = Tensor::from_vec(vec![0.5, 0.5]);
        let c = from_hmm(&half, &half, &init, &[0, 1]).unwrap();
        assert!((forward_log_partition(&c) + 4f64.ln()).abs() < 1e-12);

        let eye = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let start = Tensor::from_vec(vec![1.0, 0.0]);
        let ok = from_hmm(&eye, &eye, &start, &[0, 0, 0]).unwrap();
        assert_eq!(forward_log_partition(&ok), 0.0);
        let impossible = from_hmm(&eye, &eye, &start, &[0, 1]).unwrap();
        assert_eq!(forward_log_partition(&impossible), f64::NEG_INFINITY);
    }

    #[test]
    fn hmm_rejects_bad_parameters() {
        let bad = Tensor::from_rows(&[vec![0.6, 0.5], vec![0.5, 0.5]]).unwrap();
        let good = Tensor::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let init = Tensor::from_vec(vec![0.5, 0.5]);
        assert!(from_hmm(&bad, &good, &init, &[0]).is_err());
        assert!(from_hmm(&good, &bad, &init, &[0]).is_err());
        assert!(from_hmm(&good, &good, &init, &[2]).is_err());
        assert!(from_hmm(&good, &good, &init, &[]).is_err());
    }

    fn normalized_rows(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
        let mut data = Vec::new();
        for _ in 0..rows {
            let row: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = row.iter().sum();
            data.extend(row.iter().map(|x| x / s));
        }
        Tensor::new(vec![rows, cols], data).unwrap()
    }

    #[test]
    fn hmm_likelihood_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (m, v) = (3, 4);
        let trans = normalized_rows(m, m, &mut rng);
        let emit = normalized_rows(m, v, &mut rng);
        let init = normalized_rows(1, m, &mut rng).reshape(vec![m]).unwrap();
        let obs = [3, 0, 2, 1];
        let chain = from_hmm(&trans, &emit, &init, &obs).unwrap();
        // Direct sum of p(tags, obs) over all m^n tag sequences.
        let mut total = 0.0;
        for code in 0..m.pow(obs.len() as u32) {
            let tags: Vec<usize> = (0..obs.len()).map(|i| code / m.pow(i as u32) % m).collect();
            let mut p = init.data()[tags[0]] * emit.get(&[tags[0], obs[0]]);
            for i in 1..obs.len() {
                p *= trans.get(&[tags[i - 1], tags[i]]) * emit.get(&[tags[i], obs[i]]);
            }
            total += p;
        }
        assert!((forward_log_partition(&chain) - total.ln()).abs() < 1e-7);
    }
}
