//! Exact arborescence samplers: Wilson's loop-erased walks and Colbourn's
//! sequential conditioning on the matrix-tree inverse.
//!
//! Single-root instances first draw the root's child from its exact marginal,
//! then sample among trees whose only root edge is that one. Projective
//! instances draw from the non-projective relaxation and reject crossing
//! trees; the exact projective sampler runs on the Eisner chart instead.

use rand::Rng;

use super::mtt::Laplacian;
use super::{all_reachable, Heads, SpanningTreeCrf, NINF};
use crate::error::{Error, Result};
use crate::numerics::{Lu, Tensor, PIVOT_TOLERANCE};

/// Upper bound on walk steps before Wilson's sampler gives up.
pub const WALK_STEP_CAP: u64 = 10_000_000;

/// Draws per projective sample before the rejection loop gives up.
pub const REJECTION_CAP: u64 = 1_000_000;

/// Repeats `draw` on the non-projective relaxation until a projective tree
/// comes out.
fn rejecting<R: Rng + ?Sized>(
    d: &SpanningTreeCrf,
    rng: &mut R,
    draw: impl Fn(&Tensor, &mut R) -> Result<Heads>,
) -> Result<Heads> {
    let relaxed = d.non_projective_relaxation();
    for _ in 0..REJECTION_CAP {
        let w = prepared(&relaxed, rng)?;
        let heads = draw(&w, rng)?;
        if !d.projective() || d.admits(&heads) {
            return Ok(heads);
        }
    }
    Err(Error::RejectionCapExceeded(REJECTION_CAP))
}

/// Multi-root weights that keep only the root edge into the root child
/// drawn from the single-root marginals.
fn condition_root_child<R: Rng + ?Sized>(w: &Tensor, rng: &mut R) -> Result<Tensor> {
    let size = w.shape()[0];
    let marginals = Laplacian::build(w, true)
        .and_then(|l| l.marginals())
        .ok_or(Error::Vacuous)?;
    let probs: Vec<f64> = (0..size).map(|d| marginals.get(&[0, d])).collect();
    let child = categorical(&probs, rng).ok_or(Error::Vacuous)?;
    let mut out = w.clone();
    for d in 1..size {
        if d != child {
            out.set(&[0, d], NINF);
        }
    }
    Ok(out)
}

fn prepared<R: Rng + ?Sized>(d: &SpanningTreeCrf, rng: &mut R) -> Result<Tensor> {
    let w = d.directed_weights();
    if !all_reachable(&w) {
        return Err(Error::Vacuous);
    }
    if d.single_root_edge() {
        condition_root_child(&w, rng)
    } else {
        Ok(w)
    }
}

/// Index drawn with probability proportional to `weights`; `None` when all
/// weights are zero.
fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if !(total > 0.0) {
        return None;
    }
    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        last = Some(i);
        if u < cum {
            return Some(i);
        }
    }
    last
}

/// Wilson's algorithm on the reversed graph: from each word not yet in the
/// tree, walk to random heads (probability proportional to the incoming edge
/// weight) until the tree is hit, erasing loops as they close.
pub fn wilson_sample<R: Rng + ?Sized>(d: &SpanningTreeCrf, rng: &mut R) -> Result<Heads> {
    rejecting(d, rng, |w, rng| wilson_walk(w, rng))
}

fn wilson_walk<R: Rng + ?Sized>(w: &Tensor, rng: &mut R) -> Result<Heads> {
    let size = w.shape()[0];
    // Cumulative head distribution per word.
    let mut cdf = vec![0.0; size * size];
    for v in 1..size {
        let shift = (0..size).map(|h| w.get(&[h, v])).fold(NINF, f64::max);
        let mut acc = 0.0;
        for h in 0..size {
            acc += (w.get(&[h, v]) - shift).exp();
            cdf[v * size + h] = acc;
        }
    }
    let mut in_tree = vec![false; size];
    in_tree[0] = true;
    let mut next = vec![0; size];
    let mut steps: u64 = 0;
    for start in 1..size {
        let mut u = start;
        while !in_tree[u] {
            let row = &cdf[u * size..(u + 1) * size];
            let x = rng.gen::<f64>() * row[size - 1];
            let h = row.partition_point(|&c| c <= x).min(size - 1);
            next[u] = h;
            u = h;
            steps += 1;
            if steps > WALK_STEP_CAP {
                return Err(Error::WalkStepCapExceeded(WALK_STEP_CAP));
            }
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    next[0] = 0;
    Ok(next)
}

/// Colbourn's sampler: fix each word's head in turn with probability equal to
/// its edge marginal given the heads fixed so far. Conditioning replaces one
/// Laplacian column, so the inverse is kept current by Sherman-Morrison
/// updates. When an update's denominator falls below the pivot tolerance the
/// draw restarts with Wilson's sampler on the same conditioned weights.
pub fn colbourn_sample<R: Rng + ?Sized>(d: &SpanningTreeCrf, rng: &mut R) -> Result<Heads> {
    rejecting(d, rng, |w, rng| match colbourn_conditioning(w, rng)? {
        Some(heads) => Ok(heads),
        None => wilson_walk(w, rng),
    })
}

/// `Ok(None)` signals a numerically unusable inverse.
fn colbourn_conditioning<R: Rng + ?Sized>(w: &Tensor, rng: &mut R) -> Result<Option<Heads>> {
    let lap = Laplacian::build(w, false).ok_or(Error::Vacuous)?;
    let n = lap.n;
    let size = n + 1;
    let Some(mut inv) = Lu::factor(&lap.matrix).inverse() else {
        return Ok(None);
    };
    let mut matrix = lap.matrix.clone();
    let weights = &lap.weights;
    let mut heads = vec![0; size];
    let mut probs = vec![0.0; size];
    for d in 1..size {
        let col = d - 1;
        for h in 0..size {
            let x = if h == d { 0.0 } else { weights[h * size + d] };
            let g = if h == 0 {
                inv.at(col, col)
            } else {
                inv.at(col, col) - inv.at(col, h - 1)
            };
            probs[h] = x * g;
        }
        let Some(h) = categorical(&probs, rng) else {
            return Ok(None);
        };
        heads[d] = h;

        // Column `col` becomes x_h (e_col - e_{h-1}); u is the change.
        let x = weights[h * size + d];
        let mut u = vec![0.0; n];
        u[col] = x;
        if h > 0 {
            u[h - 1] -= x;
        }
        for (r, ur) in u.iter_mut().enumerate() {
            *ur -= matrix.at(r, col);
        }
        // inv' = inv - (inv u)(e_colᵀ inv) / (1 + (inv u)_col)
        let inv_u: Vec<f64> = (0..n)
            .map(|r| (0..n).map(|k| inv.at(r, k) * u[k]).sum())
            .collect();
        let denom = 1.0 + inv_u[col];
        if denom.abs() < PIVOT_TOLERANCE {
            return Ok(None);
        }
        let row: Vec<f64> = (0..n).map(|k| inv.at(col, k)).collect();
        for r in 0..n {
            let f = inv_u[r] / denom;
            if f != 0.0 {
                for k in 0..n {
                    *inv.at_mut(r, k) -= f * row[k];
                }
            }
        }
        for r in 0..n {
            *matrix.at_mut(r, col) += u[r];
        }
    }
    Ok(Some(heads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spanning::is_arborescence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn instance(a: Tensor, single: bool) -> SpanningTreeCrf {
        SpanningTreeCrf::new(a, true, false, single).unwrap()
    }

    fn point_mass() -> SpanningTreeCrf {
        // Only 0 -> 2 -> 1 -> 3 is finite.
        let mut a = Tensor::filled(vec![4, 4], NINF);
        a.set(&[0, 2], 0.3);
        a.set(&[2, 1], -1.0);
        a.set(&[1, 3], 2.0);
        instance(a, false)
    }

    #[test]
    fn point_mass_for_every_seed() {
        let d = point_mass();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(wilson_sample(&d, &mut rng).unwrap(), vec![0, 2, 0, 1]);
            assert_eq!(colbourn_sample(&d, &mut rng).unwrap(), vec![0, 2, 0, 1]);
        }
    }

    #[test]
    fn samples_are_trees_with_the_right_root_degree() {
        let d = instance(Tensor::zeros(vec![5, 5]), true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            for heads in [
                wilson_sample(&d, &mut rng).unwrap(),
                colbourn_sample(&d, &mut rng).unwrap(),
            ] {
                assert!(is_arborescence(&heads));
                assert!(d.admits(&heads));
            }
        }
    }

    #[test]
    fn uniform_frequencies_are_roughly_flat() {
        let d = instance(Tensor::zeros(vec![4, 4]), false);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts: HashMap<Heads, usize> = HashMap::new();
        for _ in 0..4800 {
            *counts.entry(colbourn_sample(&d, &mut rng).unwrap()).or_default() += 1;
            *counts.entry(wilson_sample(&d, &mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(counts.len(), 16);
        // Expected 600 each.
        assert!(counts.values().all(|&c| (450..750).contains(&c)), "{counts:?}");
    }

    #[test]
    fn seeded_draws_repeat() {
        let mut a = Tensor::zeros(vec![5, 5]);
        a.data_mut().iter_mut().enumerate().for_each(|(i, x)| *x = (i as f64 * 0.37).sin());
        let d = instance(a, false);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (wilson_sample(&d, &mut rng).unwrap(), colbourn_sample(&d, &mut rng).unwrap())
        };
        assert_eq!(draw(5), draw(5));
    }
}
