//! Chi-square tests for checking samplers against exact probabilities.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Bins whose expected count falls below this are pooled.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn p_value(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("dof is positive");
    dist.sf(statistic)
}

/// Pearson's test of `observed` counts against bin probabilities `probs`.
/// Bins expected to hold fewer than five draws are merged into one.
pub fn chi_square_goodness_of_fit(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * n;
        if e < MIN_EXPECTED {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled_exp > 0.0 || pooled_obs > 0.0 {
        bins.push((pooled_obs, pooled_exp));
    }
    let mut statistic = 0.0;
    for &(o, e) in &bins {
        if e > 0.0 {
            statistic += (o - e).powi(2) / e;
        } else if o > 0.0 {
            // Draws where the reference puts no mass.
            statistic = f64::INFINITY;
        }
    }
    let dof = bins.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: p_value(statistic, dof),
    }
}

/// Two-sample test that `a` and `b` are counts from the same distribution.
/// Bins with fewer than ten draws across both samples are merged.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquare {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (ka, kb) = ((nb as f64 / na as f64).sqrt(), (na as f64 / nb as f64).sqrt());
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if x + y < 2 * MIN_EXPECTED as u64 {
            pooled.0 += x as f64;
            pooled.1 += y as f64;
        } else {
            bins.push((x as f64, y as f64));
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        bins.push(pooled);
    }
    let statistic = bins
        .iter()
        .map(|&(x, y)| (ka * x - kb * y).powi(2) / (x + y))
        .sum();
    let dof = bins.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: p_value(statistic, dof),
    }
}
