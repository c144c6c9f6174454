//! Constituency trees: span-factored tree CRFs and PCFGs.
//!
//! Spans are inclusive leaf ranges `(i, j)` with `i <= j`. A binary
//! bracketing of `n` leaves holds exactly `2n - 1` spans: every leaf, the
//! root `(0, n-1)`, and the two children of every internal span.

mod pcfg;
mod tree_crf;

pub use pcfg::{pcfg_inside, pcfg_masked_inside, Pcfg};
pub use tree_crf::{cky_log_partition, TreeCrf};

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub type Span = (usize, usize);

/// Checks that `spans` is exactly the span set of one binary tree over `n`
/// leaves; returns the spans sorted.
pub fn validate_bracketing(n: usize, spans: &[Span]) -> Result<Vec<Span>> {
    let set: BTreeSet<Span> = spans.iter().copied().collect();
    if set.len() != spans.len() {
        return Err(Error::InvalidStructure("duplicate span".into()));
    }
    if n == 0 || set.len() != 2 * n - 1 {
        return Err(Error::InvalidStructure(format!(
            "a bracketing of {n} leaves has {} spans, got {}",
            (2 * n).saturating_sub(1),
            set.len()
        )));
    }
    if let Some(&(i, j)) = set.iter().find(|&&(i, j)| i > j || j >= n) {
        return Err(Error::InvalidStructure(format!("span ({i}, {j}) out of range")));
    }
    // Walking from the root must reach every span exactly once.
    let mut reached = 0;
    let mut stack = vec![(0, n - 1)];
    while let Some((i, j)) = stack.pop() {
        if !set.contains(&(i, j)) {
            return Err(Error::InvalidStructure(format!("missing span ({i}, {j})")));
        }
        reached += 1;
        if i == j {
            continue;
        }
        let split = (i..j).find(|&k| set.contains(&(i, k)) && set.contains(&(k + 1, j)));
        let Some(k) = split else {
            return Err(Error::InvalidStructure(format!(
                "span ({i}, {j}) has no pair of child spans"
            )));
        };
        stack.push((k + 1, j));
        stack.push((i, k));
    }
    if reached != set.len() {
        return Err(Error::InvalidStructure("spans cross".into()));
    }
    Ok(set.into_iter().collect())
}

/// Reads the spans of an `[n, n]` 0/1 mask (upper triangle) and validates them.
pub fn bracketing_from_mask(mask: &Tensor) -> Result<Vec<Span>> {
    let [n, n2] = *mask.shape() else {
        return Err(Error::InvalidStructure("span mask must be [n, n]".into()));
    };
    if n != n2 {
        return Err(Error::InvalidStructure("span mask must be square".into()));
    }
    let mut spans = Vec::new();
    for i in 0..n {
        for j in 0..n {
            match mask.get(&[i, j]) {
                x if x == 0.0 => {}
                x if x == 1.0 && i <= j => spans.push((i, j)),
                _ => {
                    return Err(Error::InvalidStructure(format!(
                        "span mask entry ({i}, {j}) must be 0"
                    )))
                }
            }
        }
    }
    validate_bracketing(n, &spans)
}

pub fn bracketing_to_mask(n: usize, spans: &[Span]) -> Tensor {
    let mut mask = Tensor::zeros(vec![n, n]);
    for &(i, j) in spans {
        mask.set(&[i, j], 1.0);
    }
    mask
}
