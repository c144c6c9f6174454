//! Log-space primitives, semirings and dense linear algebra.

mod contract;
mod linalg;
mod semiring;
mod tensor;

pub use contract::{contract_parsed, semiring_contract, ContractionSpec};
pub use linalg::{signed_log_det, Lu, Matrix, PIVOT_TOLERANCE};
pub use semiring::{Log, MaxPlus, Real, Semiring};
pub use tensor::{logsumexp, LogSumExp, Tensor};
