//! Semirings over `f64`, used to run one dynamic program as a sum, a max or
//! an ordinary real contraction.

use super::tensor::LogSumExp;

/// A commutative semiring `(⊕, ⊗, zero, one)` on `f64` scalars.
///
/// Every dynamic program in this crate is written against this trait so the
/// same recurrence yields the log-partition (with [`Log`]) or the best score
/// (with [`MaxPlus`]).
pub trait Semiring {
    const NAME: &'static str;

    /// Identity of ⊕ and annihilator of ⊗.
    fn zero() -> f64;
    /// Identity of ⊗.
    fn one() -> f64;
    fn plus(a: f64, b: f64) -> f64;
    fn times(a: f64, b: f64) -> f64;

    /// ⊕-reduction of an iterator; `zero()` when empty.
    fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
        values.into_iter().fold(Self::zero(), Self::plus)
    }

    fn product<I: IntoIterator<Item = f64>>(values: I) -> f64 {
        values.into_iter().fold(Self::one(), Self::times)
    }
}

/// Log semiring: ⊕ = log-add-exp, ⊗ = +.
#[derive(Clone, Copy, Debug, Default)]
pub struct Log;

/// Max-plus (Viterbi) semiring: ⊕ = max, ⊗ = +.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxPlus;

/// Ordinary arithmetic on non-negative reals.
#[derive(Clone, Copy, Debug, Default)]
pub struct Real;

impl Semiring for Log {
    const NAME: &'static str = "log";

    fn zero() -> f64 {
        f64::NEG_INFINITY
    }

    fn one() -> f64 {
        0.0
    }

    #[inline]
    fn plus(a: f64, b: f64) -> f64 {
        if a == f64::NEG_INFINITY {
            return b;
        }
        if b == f64::NEG_INFINITY {
            return a;
        }
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        hi + (lo - hi).exp().ln_1p()
    }

    #[inline]
    fn times(a: f64, b: f64) -> f64 {
        a + b
    }

    fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
        let mut acc = LogSumExp::default();
        for v in values {
            acc.push(v);
        }
        acc.value()
    }
}

impl Semiring for MaxPlus {
    const NAME: &'static str = "max-plus";

    fn zero() -> f64 {
        f64::NEG_INFINITY
    }

    fn one() -> f64 {
        0.0
    }

    #[inline]
    fn plus(a: f64, b: f64) -> f64 {
        a.max(b)
    }

    #[inline]
    fn times(a: f64, b: f64) -> f64 {
        a + b
    }
}

impl Semiring for Real {
    const NAME: &'static str = "real";

    fn zero() -> f64 {
        0.0
    }

    fn one() -> f64 {
        1.0
    }

    #[inline]
    fn plus(a: f64, b: f64) -> f64 {
        a + b
    }

    #[inline]
    fn times(a: f64, b: f64) -> f64 {
        a * b
    }
}
