//! Side-by-side comparisons of the exact algorithms with enumeration and with
//! finite differences. Shared by the test suites and the acceptance runner.

use rand::Rng;

use super::{
    enumerate_structures, oracle_argmax, oracle_cross_entropy, oracle_entropy, oracle_kl,
    oracle_log_partition, oracle_marginals, EnumeratedFamily,
};
use crate::dist::{
    argmax_with_score, cross_entropy, entropy, kl_divergence, log_partition, marginals, max_score,
    Family, FamilyConfig, StructuredDistribution,
};
use crate::error::Result;

/// Largest absolute error per quantity. `None` where the family has no exact
/// algorithm for the operation.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OracleReport {
    pub structures: usize,
    pub log_partition: Option<f64>,
    pub marginals: Option<f64>,
    pub argmax_score: Option<f64>,
    pub entropy: Option<f64>,
    pub cross_entropy: Option<f64>,
    pub kl: Option<f64>,
}

impl OracleReport {
    /// Worst error among the quantities present, with a label.
    pub fn worst(&self) -> (&'static str, f64) {
        [
            ("log_partition", self.log_partition),
            ("marginals", self.marginals),
            ("argmax_score", self.argmax_score),
            ("entropy", self.entropy),
            ("cross_entropy", self.cross_entropy),
            ("kl", self.kl),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .fold(("none", 0.0), |a, b| if b.1 > a.1 || b.1.is_nan() { b } else { a })
    }

    /// Whether every present error meets the suite tolerances: 1e-9 for the
    /// argmax score, `tol` for everything else.
    pub fn within(&self, tol: f64) -> bool {
        let ok = |v: Option<f64>, t: f64| v.is_none_or(|e| e <= t);
        ok(self.log_partition, tol)
            && ok(self.marginals, tol)
            && ok(self.argmax_score, 1e-9)
            && ok(self.entropy, tol)
            && ok(self.cross_entropy, tol)
            && ok(self.kl, tol)
    }
}

/// `|a - b|`, treating equal infinities as exact.
fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(&x, &y)| gap(x, y)).fold(0.0, f64::max)
}

/// Compares every supported operation on `p` (and the pair `p`, `q`) with
/// enumeration over `ef`, which must hold `p`'s configuration.
pub fn compare_with_enumeration(
    ef: &EnumeratedFamily,
    p: &StructuredDistribution,
    q: &StructuredDistribution,
) -> Result<OracleReport> {
    let tp = p.log_potentials();
    let tq = q.log_potentials();
    let mut r = OracleReport {
        structures: ef.len(),
        ..Default::default()
    };
    let (_, best) = oracle_argmax(ef, &tp).ok_or(crate::error::Error::Vacuous)?;
    let (t, score) = argmax_with_score(p)?;
    let mut e = gap(score, best).max(gap(max_score(p)?, best));
    if p.family() != Family::Pcfg {
        e = e.max(gap(t.score(&tp)?, best));
    }
    r.argmax_score = Some(e);
    if p.family() == Family::OneToOne {
        return Ok(r);
    }
    r.log_partition = Some(gap(log_partition(p)?, oracle_log_partition(ef, &tp)));
    r.marginals = Some(max_gap(
        &marginals(p)?.flatten(),
        &oracle_marginals(ef, &tp)?.flatten(),
    ));
    r.entropy = Some(gap(entropy(p)?, oracle_entropy(ef, &tp)));
    r.cross_entropy = Some(gap(cross_entropy(p, q)?, oracle_cross_entropy(ef, &tp, &tq)));
    r.kl = Some(gap(kl_divergence(p, q)?, oracle_kl(ef, &tp, &tq)));
    Ok(r)
}

pub fn compare_with_oracle(
    p: &StructuredDistribution,
    q: &StructuredDistribution,
) -> Result<OracleReport> {
    compare_with_enumeration(&enumerate_structures(&p.config())?, p, q)
}

/// Largest `|marginal(e) - (logZ(θ + h·e) - logZ(θ - h·e)) / 2h|` over the
/// finite parts of `d`.
///
/// PCFG root and rule tensors must stay normalized, so only the span tensor
/// is perturbed. Undirected adjacency is perturbed one symmetric pair at a
/// time and compared against the upper-triangle marginal. `None` for
/// one-to-one matching, which has no log-partition.
pub fn finite_difference_error(d: &StructuredDistribution, h: f64) -> Result<Option<f64>> {
    if d.family() == Family::OneToOne {
        return Ok(None);
    }
    let theta = d.log_potentials();
    let marg = marginals(d)?;
    let flat = theta.flatten();
    let undirected = matches!(
        d.config(),
        FamilyConfig::SpanningTree {
            directed: false,
            ..
        }
    );
    let size = match d.config() {
        FamilyConfig::SpanningTree { n, .. } => n + 1,
        _ => 0,
    };
    // Perturbable block; marginals index from its start.
    let (lo, hi) = match d.family() {
        Family::Pcfg => (flat.len() - theta.require("spans")?.len(), flat.len()),
        _ => (0, flat.len()),
    };
    let m = marg.flatten();
    let z_at = |x: &[f64]| -> Result<f64> {
        let p = theta.unflatten_like(x)?;
        log_partition(&d.with_log_potentials(&p)?)
    };
    let mut worst: f64 = 0.0;
    let mut x = flat.clone();
    for k in lo..hi {
        if !flat[k].is_finite() {
            continue;
        }
        let mirror = if undirected {
            let (i, j) = (k / size, k % size);
            if i > j {
                continue;
            }
            (i != j).then_some(j * size + i)
        } else {
            None
        };
        let bump = |x: &mut Vec<f64>, by: f64| {
            x[k] = flat[k] + by;
            if let Some(mk) = mirror {
                x[mk] = flat[mk] + by;
            }
        };
        bump(&mut x, h);
        let up = z_at(&x)?;
        bump(&mut x, -h);
        let down = z_at(&x)?;
        bump(&mut x, 0.0);
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - m[k - lo]).abs());
    }
    Ok(Some(worst))
}

/// A random configuration of `family` within the suite limits: `n ≤ 5` and
/// label, width and grammar sizes `≤ 3`. Spanning flags are passed in.
pub fn random_small_config<R: Rng + ?Sized>(
    family: Family,
    spanning_flags: (bool, bool, bool),
    rng: &mut R,
) -> FamilyConfig {
    let n = rng.gen_range(1..=5);
    let m = rng.gen_range(1..=3);
    match family {
        Family::LinearChain => FamilyConfig::LinearChain { n, m },
        Family::SemiMarkov => FamilyConfig::SemiMarkov {
            n,
            s: rng.gen_range(1..=n.min(3)),
            m,
        },
        Family::MonotoneAlignment => FamilyConfig::MonotoneAlignment {
            n,
            m: rng.gen_range(1..=5),
        },
        Family::Ctc => loop {
            let vocab = rng.gen_range(2..=3);
            let len = rng.gen_range(0..=n.min(3));
            let target: Vec<usize> = (0..len).map(|_| rng.gen_range(1..vocab)).collect();
            let repeats = target.windows(2).filter(|w| w[0] == w[1]).count();
            if len + repeats <= n {
                break FamilyConfig::Ctc {
                    frames: n,
                    vocab,
                    target,
                };
            }
        },
        Family::OneToOne => FamilyConfig::OneToOne { n },
        Family::TreeCrf => FamilyConfig::TreeCrf { n, m },
        Family::Pcfg => FamilyConfig::Pcfg {
            n: n.max(2),
            nt: rng.gen_range(1..=3),
            pt: rng.gen_range(1..=3),
        },
        Family::SpanningTree => {
            let (directed, projective, single_root_edge) = spanning_flags;
            FamilyConfig::SpanningTree {
                n,
                directed,
                projective,
                single_root_edge,
            }
        }
    }
}

/// The eight directed/projective/single-root flag triples.
pub fn spanning_flag_triples() -> Vec<(bool, bool, bool)> {
    let mut out = Vec::with_capacity(8);
    for directed in [false, true] {
        for projective in [false, true] {
            for single_root_edge in [false, true] {
                out.push((directed, projective, single_root_edge));
            }
        }
    }
    out
}
