//! Exact inference for globally normalized distributions over discrete
//! structures: tag sequences, segmentations, alignments, constituency trees
//! and spanning trees.
//!
//! Every family exposes its log-potentials as named tensors and shares one
//! set of operations ([`log_partition`], [`marginals`], [`argmax`],
//! [`sample`], [`entropy`], ...). The [`oracle`] module enumerates small
//! instances for checking them.

pub mod alignment;
pub mod batch;
pub mod chain;
pub mod constituency;
pub mod dist;
pub mod error;
pub mod numerics;
pub mod oracle;
pub mod random;
pub mod spanning;

pub use alignment::{CtcDist, Move, MonotoneAlignmentCrf, OneToOneMatching};
pub use chain::{LinearChainCrf, Segment, SemiMarkovCrf};
pub use constituency::{Pcfg, Span, TreeCrf};
pub use dist::{
    algorithm, argmax, argmax_with_score, cross_entropy, entropy, kl_divergence, log_partition,
    log_prob, marginals, max_score, sample, sample_n, sample_n_with_algorithm, Family,
    FamilyConfig, LogPotentials, Marginals, NamedTensors, Operation, RandomSeed,
    StructureIndicator, StructuredDistribution,
};
pub use error::{Error, Result};
pub use numerics::Tensor;
pub use spanning::{Heads, SpanningTreeCrf};
