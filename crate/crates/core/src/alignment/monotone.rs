use crate::dist::hypergraph::{Builder, Hypergraph};
use crate::dist::{expect_shape, FamilyConfig, LogPotentials, NamedTensors, StructureIndicator};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// A step of a monotone path, named by the cell it enters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Move {
    /// `(i-1, j-1) -> (i, j)`, a match.
    Diagonal = 0,
    /// `(i-1, j) -> (i, j)`, a deletion.
    Down = 1,
    /// `(i, j-1) -> (i, j)`, an insertion.
    Right = 2,
}

impl Move {
    pub const ALL: [Move; 3] = [Move::Diagonal, Move::Down, Move::Right];

    /// Source cell of this move into `(i, j)`, if it stays on the grid.
    pub fn source(self, i: usize, j: usize) -> Option<(usize, usize)> {
        match self {
            Move::Diagonal => Some((i.checked_sub(1)?, j.checked_sub(1)?)),
            Move::Down => Some((i.checked_sub(1)?, j)),
            Move::Right => Some((i, j.checked_sub(1)?)),
        }
    }
}

/// Monotone alignments of sequences of lengths `n` and `m`: paths through the
/// `(n+1) × (m+1)` grid from `(0, 0)` to `(n, m)`.
///
/// `moves[i, j, k]` scores entering cell `(i, j)` with move `k`; moves that
/// would leave the grid are never used.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneAlignmentCrf {
    n: usize,
    m: usize,
    moves: Tensor,
}

impl MonotoneAlignmentCrf {
    pub fn new(moves: Tensor) -> Result<Self> {
        match *moves.shape() {
            [rows, cols, 3] if rows >= 1 && cols >= 1 => Ok(MonotoneAlignmentCrf {
                n: rows - 1,
                m: cols - 1,
                moves,
            }),
            ref s => Err(Error::Shape(format!("moves must be [n+1, m+1, 3], got {s:?}"))),
        }
    }

    pub fn from_potentials(n: usize, m: usize, p: &LogPotentials) -> Result<Self> {
        Self::new(expect_shape(p, "moves", &[n + 1, m + 1, 3])?)
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig::MonotoneAlignment {
            n: self.n,
            m: self.m,
        }
    }

    pub fn log_potentials(&self) -> LogPotentials {
        NamedTensors::new().with("moves", self.moves.clone())
    }

    pub fn moves(&self) -> &Tensor {
        &self.moves
    }

    fn part(&self, i: usize, j: usize, mv: Move) -> usize {
        (i * (self.m + 1) + j) * 3 + mv as usize
    }

    /// Cells in row-major order; incoming moves tried diagonal, down, right.
    pub(crate) fn hypergraph(&self) -> Hypergraph {
        let cols = self.m + 1;
        let mut b = Builder::new(self.moves.len());
        for i in 0..=self.n {
            for j in 0..=self.m {
                b.node();
                if i == 0 && j == 0 {
                    b.edge(&[], &[]);
                    continue;
                }
                for mv in Move::ALL {
                    if let Some((si, sj)) = mv.source(i, j) {
                        b.edge(&[(si * cols + sj) as u32], &[self.part(i, j, mv)]);
                    }
                }
            }
        }
        b.finish()
    }

    /// Cells entered, in order, and the move used for each.
    pub fn path_to_indicator(&self, path: &[Move]) -> Result<StructureIndicator> {
        let mut t = Tensor::zeros(self.moves.shape().to_vec());
        let (mut i, mut j) = (0, 0);
        for &mv in path {
            match mv {
                Move::Diagonal => (i, j) = (i + 1, j + 1),
                Move::Down => i += 1,
                Move::Right => j += 1,
            }
            if i > self.n || j > self.m {
                return Err(Error::InvalidStructure("path leaves the grid".into()));
            }
            t.set(&[i, j, mv as usize], 1.0);
        }
        if (i, j) != (self.n, self.m) {
            return Err(Error::InvalidStructure("path does not reach the corner".into()));
        }
        Ok(StructureIndicator::new(NamedTensors::new().with("moves", t)))
    }

    pub fn indicator_to_path(&self, t: &StructureIndicator) -> Result<Vec<Move>> {
        t.expect_layout(&[("moves", &[self.n + 1, self.m + 1, 3])])?;
        let data = t.tensors().require("moves")?;
        let total = data.data().iter().filter(|&&x| x == 1.0).count();
        let mut path = Vec::new();
        let (mut i, mut j) = (self.n, self.m);
        while (i, j) != (0, 0) {
            let used: Vec<Move> = Move::ALL
                .into_iter()
                .filter(|&mv| data.get(&[i, j, mv as usize]) == 1.0)
                .collect();
            let [mv] = used[..] else {
                return Err(Error::InvalidStructure(format!(
                    "cell ({i}, {j}) must be entered by exactly one move"
                )));
            };
            let Some(src) = mv.source(i, j) else {
                return Err(Error::InvalidStructure("move leaves the grid".into()));
            };
            path.push(mv);
            (i, j) = src;
        }
        if path.len() != total {
            return Err(Error::InvalidStructure("moves off the path are set".into()));
        }
        path.reverse();
        Ok(path)
    }

    pub fn validate(&self, t: &StructureIndicator) -> Result<()> {
        self.indicator_to_path(t).map(|_| ())
    }
}

pub fn nw_log_partition(a: &MonotoneAlignmentCrf) -> f64 {
    a.hypergraph().log_partition(a.moves.data())
}
