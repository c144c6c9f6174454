use crate::dist::hypergraph::{Builder, Hypergraph, NodeId};
use crate::dist::{expect_shape, FamilyConfig, LogPotentials, NamedTensors, StructureIndicator};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Vocabulary index reserved for the blank symbol.
pub const BLANK: usize = 0;

/// Merges repeated labels, then drops blanks.
pub fn collapse(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &label in path {
        if Some(label) != prev && label != BLANK {
            out.push(label);
        }
        prev = Some(label);
    }
    out
}

/// Connectionist temporal classification: frame-level label paths that
/// collapse to a fixed target.
///
/// `frames[t, v]` scores label `v` at frame `t`. A structure is one frame path,
/// recorded as a one-hot `[T, V]` mask.
#[derive(Clone, Debug, PartialEq)]
pub struct CtcDist {
    frames: Tensor,
    target: Vec<usize>,
}

impl CtcDist {
    pub fn new(frames: Tensor, target: Vec<usize>) -> Result<Self> {
        let [t, v] = *frames.shape() else {
            return Err(Error::Shape(format!(
                "frames must be [T, V], got {:?}",
                frames.shape()
            )));
        };
        if t == 0 || v < 2 {
            return Err(Error::Shape("CTC needs T >= 1 and V >= 2".into()));
        }
        if let Some(&bad) = target.iter().find(|&&l| l == BLANK || l >= v) {
            return Err(Error::InvalidParameters(format!(
                "target label {bad} must lie in 1..{v}"
            )));
        }
        Ok(CtcDist { frames, target })
    }

    pub fn from_potentials(
        frames: usize,
        vocab: usize,
        target: Vec<usize>,
        p: &LogPotentials,
    ) -> Result<Self> {
        Self::new(expect_shape(p, "frames", &[frames, vocab])?, target)
    }

    pub fn num_frames(&self) -> usize {
        self.frames.shape()[0]
    }

    pub fn vocab(&self) -> usize {
        self.frames.shape()[1]
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn frames(&self) -> &Tensor {
        &self.frames
    }

    pub fn config(&self) -> FamilyConfig {
        FamilyConfig::Ctc {
            frames: self.num_frames(),
            vocab: self.vocab(),
            target: self.target.clone(),
        }
    }

    pub fn log_potentials(&self) -> LogPotentials {
        NamedTensors::new().with("frames", self.frames.clone())
    }

    fn state_label(&self, s: usize) -> usize {
        if s.is_multiple_of(2) {
            BLANK
        } else {
            self.target[s / 2]
        }
    }

    /// Items `(t, s)` over the blank-interleaved target of `2L + 1` states.
    /// Predecessors are tried as stay, advance, skip.
    pub(crate) fn hypergraph(&self) -> Hypergraph {
        let (frames, vocab) = (self.num_frames(), self.vocab());
        let states = 2 * self.target.len() + 1;
        let node = |t: usize, s: usize| (t * states + s) as NodeId;
        let mut b = Builder::new(self.frames.len());
        for t in 0..frames {
            for s in 0..states {
                b.node();
                let part = t * vocab + self.state_label(s);
                if t == 0 {
                    if s <= 1 {
                        b.edge(&[], &[part]);
                    }
                    continue;
                }
                b.edge(&[node(t - 1, s)], &[part]);
                if s >= 1 {
                    b.edge(&[node(t - 1, s - 1)], &[part]);
                }
                if s >= 2 && s % 2 == 1 && self.state_label(s) != self.state_label(s - 2) {
                    b.edge(&[node(t - 1, s - 2)], &[part]);
                }
            }
        }
        b.node();
        b.edge(&[node(frames - 1, states - 1)], &[]);
        if states >= 2 {
            b.edge(&[node(frames - 1, states - 2)], &[]);
        }
        b.finish()
    }

    pub fn path_to_indicator(&self, path: &[usize]) -> Result<StructureIndicator> {
        if path.len() != self.num_frames() || path.iter().any(|&l| l >= self.vocab()) {
            return Err(Error::InvalidStructure(format!(
                "path must hold {} labels below {}",
                self.num_frames(),
                self.vocab()
            )));
        }
        let mut t = Tensor::zeros(self.frames.shape().to_vec());
        for (frame, &label) in path.iter().enumerate() {
            t.set(&[frame, label], 1.0);
        }
        let ind = StructureIndicator::new(NamedTensors::new().with("frames", t));
        self.validate(&ind)?;
        Ok(ind)
    }

    pub fn indicator_to_path(&self, t: &StructureIndicator) -> Result<Vec<usize>> {
        let (frames, vocab) = (self.num_frames(), self.vocab());
        t.expect_layout(&[("frames", &[frames, vocab])])?;
        let data = t.tensors().require("frames")?;
        let mut path = Vec::with_capacity(frames);
        for f in 0..frames {
            let row = &data.data()[f * vocab..(f + 1) * vocab];
            let ones: Vec<usize> = (0..vocab).filter(|&v| row[v] == 1.0).collect();
            let [label] = ones[..] else {
                return Err(Error::InvalidStructure(format!("frame {f} must be one-hot")));
            };
            path.push(label);
        }
        if collapse(&path) != self.target {
            return Err(Error::InvalidStructure(
                "path does not collapse to the target".into(),
            ));
        }
        Ok(path)
    }

    pub fn validate(&self, t: &StructureIndicator) -> Result<()> {
        self.indicator_to_path(t).map(|_| ())
    }
}

/// `-inf` when the target cannot fit in the available frames.
pub fn ctc_log_partition(c: &CtcDist) -> f64 {
    c.hypergraph().log_partition(c.frames.data())
}
