//! Alignment distributions: monotone (Needleman-Wunsch) paths, CTC and
//! one-to-one matchings.

mod ctc;
mod matching;
mod monotone;

pub use ctc::{collapse, ctc_log_partition, CtcDist, BLANK};
pub use matching::{assignment_argmax, Assignment, OneToOneMatching};
pub use monotone::{nw_log_partition, Move, MonotoneAlignmentCrf};
