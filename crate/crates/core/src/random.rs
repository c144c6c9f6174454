//! Random instances for tests, benchmarks and the CLI.

use rand::Rng;

use crate::dist::{FamilyConfig, LogPotentials, NamedTensors, StructuredDistribution};
use crate::error::Result;
use crate::numerics::{logsumexp, Tensor};

fn uniform<R: Rng + ?Sized>(shape: Vec<usize>, scale: f64, rng: &mut R) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for x in t.data_mut() {
        *x = rng.gen_range(-scale..=scale);
    }
    t
}

/// Log-probabilities of `len` categorical outcomes.
fn log_simplex<R: Rng + ?Sized>(len: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(-scale..=scale)).collect();
    let z = logsumexp(raw.iter().copied());
    raw.into_iter().map(|x| x - z).collect()
}

/// Log-potentials for `config` with entries uniform on `[-scale, scale]`.
///
/// PCFG root and rule tensors are normalized per parent; emissions are
/// log-probabilities of the observed word under each preterminal. Undirected
/// spanning adjacency is symmetric.
pub fn random_potentials<R: Rng + ?Sized>(
    config: &FamilyConfig,
    scale: f64,
    rng: &mut R,
) -> LogPotentials {
    match *config {
        FamilyConfig::LinearChain { n, m } => NamedTensors::new()
            .with("init", uniform(vec![m], scale, rng))
            .with("transitions", uniform(vec![n - 1, m, m], scale, rng)),
        FamilyConfig::SemiMarkov { n, s, m } => {
            NamedTensors::new().with("segments", uniform(vec![n, s, m, m], scale, rng))
        }
        FamilyConfig::MonotoneAlignment { n, m } => {
            NamedTensors::new().with("moves", uniform(vec![n + 1, m + 1, 3], scale, rng))
        }
        FamilyConfig::Ctc { frames, vocab, .. } => {
            NamedTensors::new().with("frames", uniform(vec![frames, vocab], scale, rng))
        }
        FamilyConfig::OneToOne { n } => {
            NamedTensors::new().with("scores", uniform(vec![n, n], scale, rng))
        }
        FamilyConfig::TreeCrf { n, m } => {
            NamedTensors::new().with("spans", uniform(vec![n, n, m], scale, rng))
        }
        FamilyConfig::Pcfg { n, nt, pt } => {
            let k = nt + pt;
            let root = Tensor::from_vec(log_simplex(nt, scale, rng));
            let rules: Vec<f64> = (0..nt).flat_map(|_| log_simplex(k * k, scale, rng)).collect();
            let mut emissions = uniform(vec![n, pt], scale, rng);
            for x in emissions.data_mut() {
                *x -= scale;
            }
            NamedTensors::new()
                .with("root", root)
                .with("rules", Tensor::new(vec![nt, k, k], rules).expect("sized"))
                .with("emissions", emissions)
                .with("spans", uniform(vec![n, n], scale, rng))
        }
        FamilyConfig::SpanningTree { n, directed, .. } => {
            let mut a = uniform(vec![n + 1, n + 1], scale, rng);
            if !directed {
                for i in 0..=n {
                    for j in 0..i {
                        let x = a.get(&[j, i]);
                        a.set(&[i, j], x);
                    }
                }
            }
            NamedTensors::new().with("adjacency", a)
        }
    }
}

/// A distribution for `config` with [`random_potentials`].
pub fn random_instance<R: Rng + ?Sized>(
    config: &FamilyConfig,
    scale: f64,
    rng: &mut R,
) -> Result<StructuredDistribution> {
    StructuredDistribution::from_config(config, &random_potentials(config, scale, rng))
}

/// A random CTC target of length `len` over labels `1..vocab`, drawn without
/// adjacent repeats when `distinct_neighbours` is set.
pub fn random_ctc_target<R: Rng + ?Sized>(
    len: usize,
    vocab: usize,
    distinct_neighbours: bool,
    rng: &mut R,
) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(len);
    while out.len() < len {
        let x = rng.gen_range(1..vocab);
        if distinct_neighbours && vocab > 2 && out.last() == Some(&x) {
            continue;
        }
        out.push(x);
    }
    out
}
