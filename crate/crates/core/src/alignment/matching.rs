use crate::dist::{expect_shape, FamilyConfig, LogPotentials, NamedTensors, StructureIndicator};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Bijective alignments between two sets of `n` items.
///
/// Only the argmax is tractable; the partition function is #P-hard.
#[derive(Clone, Debug, PartialEq)]
pub struct OneToOneMatching {
    n: usize,
    scores: Tensor,
}

/// A permutation `row -> column` and its total score.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub columns: Vec<usize>,
    pub score: f64,
}

impl OneToOneMatching {
    pub fn new(scores: Tensor) -> Result<Self> {
        match *scores.shape() {
            [r, c] if r == c && r >= 1 => Ok(OneToOneMatching { n: r, scores }),
            ref s => Err(Error::Shape(format!("scores must be square [n, n], got {s:?}"))),
        }
    }

    pub fn from_potentials(n: usize, p: &LogPotentials) -> Result<Self> {
        Self::new(expect_shape(p, "scores", &[n, n])?)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn scores(&self) -> &Tensor {
        &self.scores
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig::OneToOne { n: self.n }
    }

    pub fn log_potentials(&self) -> LogPotentials {
        NamedTensors::new().with("scores", self.scores.clone())
    }

    pub fn permutation_to_indicator(&self, columns: &[usize]) -> Result<StructureIndicator> {
        let mut t = Tensor::zeros(vec![self.n, self.n]);
        if columns.len() != self.n {
            return Err(Error::InvalidStructure("permutation has the wrong length".into()));
        }
        for (r, &c) in columns.iter().enumerate() {
            if c >= self.n {
                return Err(Error::InvalidStructure(format!("column {c} out of range")));
            }
            t.set(&[r, c], 1.0);
        }
        let ind = StructureIndicator::new(NamedTensors::new().with("scores", t));
        self.validate(&ind)?;
        Ok(ind)
    }

    pub fn validate(&self, t: &StructureIndicator) -> Result<()> {
        let n = self.n;
        t.expect_layout(&[("scores", &[n, n])])?;
        let data = t.tensors().require("scores")?.data();
        let row_ok = (0..n).all(|r| data[r * n..(r + 1) * n].iter().sum::<f64>() == 1.0);
        let col_ok = (0..n).all(|c| (0..n).map(|r| data[r * n + c]).sum::<f64>() == 1.0);
        if row_ok && col_ok {
            Ok(())
        } else {
            Err(Error::InvalidStructure("indicator is not a permutation matrix".into()))
        }
    }
}

/// Minimum-cost perfect matching by shortest augmenting paths with dual
/// potentials (the augmentation phase of Jonker-Volgenant). `cost` is
/// row-major `n × n`; `+inf` marks a forbidden pair. Returns `None` when no
/// finite perfect matching exists.
fn min_cost_assignment(n: usize, cost: &[f64]) -> Option<(Vec<usize>, f64)> {
    let inf = f64::INFINITY;
    let a = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == 0 || delta == inf {
                return None;
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut columns = vec![0; n];
    for j in 1..=n {
        columns[p[j] - 1] = j - 1;
    }
    let total = columns.iter().enumerate().map(|(r, &c)| cost[r * n + c]).sum();
    Some((columns, total))
}

/// Highest-scoring permutation.
///
/// Among optimal permutations the lexicographically smallest column sequence
/// wins: rows are fixed in order, each to the smallest column that still
/// admits an optimal completion.
pub fn assignment_argmax(m: &OneToOneMatching) -> Result<Assignment> {
    let n = m.n;
    let cost: Vec<f64> = m
        .scores
        .data()
        .iter()
        .map(|&s| if s == f64::NEG_INFINITY { f64::INFINITY } else { -s })
        .collect();
    let (_, best_cost) = min_cost_assignment(n, &cost).ok_or(Error::Vacuous)?;
    let tol = 1e-9 * (1.0 + best_cost.abs());

    let mut fixed: Vec<Option<usize>> = vec![None; n];
    let mut restricted = cost.clone();
    for row in 0..n {
        let mut chosen = None;
        for col in 0..n {
            if restricted[row * n + col] == f64::INFINITY {
                continue;
            }
            let mut trial = restricted.clone();
            pin(&mut trial, n, row, col);
            if let Some((_, c)) = min_cost_assignment(n, &trial) {
                if (c - best_cost).abs() <= tol {
                    restricted = trial;
                    chosen = Some(col);
                    break;
                }
            }
        }
        fixed[row] = chosen;
    }
    let columns: Vec<usize> = fixed
        .into_iter()
        .map(|c| c.expect("an optimal completion always exists"))
        .collect();
    let score = columns
        .iter()
        .enumerate()
        .map(|(r, &c)| m.scores.get(&[r, c]))
        .sum();
    Ok(Assignment { columns, score })
}

fn pin(cost: &mut [f64], n: usize, row: usize, col: usize) {
    for j in 0..n {
        if j != col {
            cost[row * n + j] = f64::INFINITY;
        }
    }
    for i in 0..n {
        if i != row {
            cost[i * n + col] = f64::INFINITY;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matching(rows: &[Vec<f64>]) -> OneToOneMatching {
        OneToOneMatching::new(Tensor::from_rows(rows).unwrap()).unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn identity_and_swap() {
        let a = assignment_argmax(&matching(&[vec![1.0, 0.0], vec![0.0, 1.0]])).unwrap();
        assert_eq!(a.columns, vec![0, 1]);
        assert_eq!(a.score, 2.0);
        let a = assignment_argmax(&matching(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        assert_eq!(a.columns, vec![1, 0]);
        assert_eq!(a.score, 2.0);
    }

    #[test]
    fn ties_prefer_smallest_columns() {
        let a = assignment_argmax(&matching(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]])).unwrap();
        assert_eq!(a.columns, vec![0, 1, 2]);
    }

    #[test]
    fn forbidden_pairs() {
        let ninf = f64::NEG_INFINITY;
        let a = assignment_argmax(&matching(&[vec![ninf, 5.0], vec![1.0, ninf]])).unwrap();
        assert_eq!(a.columns, vec![1, 0]);
        let none = matching(&[vec![ninf, 0.0], vec![ninf, 0.0]]);
        assert_eq!(assignment_argmax(&none), Err(Error::Vacuous));
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            for _ in 0..10 {
                let rows: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
                    .collect();
                let m = matching(&rows);
                let got = assignment_argmax(&m).unwrap();
                let best = permutations(n)
                    .iter()
                    .map(|p| p.iter().enumerate().map(|(r, &c)| rows[r][c]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((got.score - best).abs() < 1e-9);
                m.permutation_to_indicator(&got.columns).unwrap();
            }
        }
    }

    #[test]
    fn invariant_to_row_and_column_shifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 5;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let base = assignment_argmax(&matching(&rows)).unwrap();
        let mut shifted = rows.clone();
        shifted[2].iter_mut().for_each(|x| *x += 7.5);
        shifted.iter_mut().for_each(|r| r[4] -= 3.25);
        let moved = assignment_argmax(&matching(&shifted)).unwrap();
        assert_eq!(base.columns, moved.columns);
    }
}
