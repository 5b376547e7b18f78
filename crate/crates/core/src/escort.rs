//! Power escort transformation `p -> p^lambda / sum(p^lambda)`.
//!
//! Zero cells stay zero. Weights are formed in log space and shifted by the
//! largest log-weight before exponentiating, so very small cells raised to
//! large exponents do not underflow the normalizer.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tables::ProbTable;

/// Escort exponent `lambda > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct EscortParam<T>(T);

impl<T: Real> EscortParam<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("escort exponent must be positive and finite, got {lambda}")));
        }
        Ok(Self(lambda))
    }

    pub fn value(self) -> T {
        self.0
    }

    /// The normal approximation collapses at `lambda = 1` (escort is the
    /// identity and `T_B` vanishes identically).
    pub fn require_non_unit(self) -> Result<Self> {
        if self.0 == T::one() {
            return Err(Error::InvalidParameter(
                "lambda = 1 is excluded: the T_A/T_B split needs lambda != 1 for a positive variance".into(),
            ));
        }
        Ok(self)
    }

    pub fn reciprocal(self) -> Self {
        Self(T::one() / self.0)
    }
}

/// Escorted table together with its normalizer `c = sum p^lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct EscortTable<T> {
    pub escort: ProbTable<T>,
    pub c_lambda: T,
}

/// Escort of nonnegative weights; returns the normalized vector and
/// `sum w^lambda`.
pub(crate) fn escort_weights<T: Real>(weights: &[T], lambda: T) -> Result<(Vec<T>, T)> {
    let logw: Vec<T> =
        weights.iter().map(|&w| if w > T::zero() { lambda * w.ln() } else { T::neg_infinity() }).collect();
    let shift = logw.iter().copied().fold(T::neg_infinity(), T::max);
    if shift == T::neg_infinity() {
        return Err(Error::DegenerateInput("all cells are zero".into()));
    }
    let mut out: Vec<T> =
        logw.iter().map(|&l| if l == T::neg_infinity() { T::zero() } else { (l - shift).exp() }).collect();
    let scaled_sum: T = out.iter().copied().sum();
    for q in &mut out {
        *q = *q / scaled_sum;
    }
    Ok((out, shift.exp() * scaled_sum))
}

pub fn power_escort_table<T: Real>(dist: &ProbTable<T>, lam: EscortParam<T>) -> Result<EscortTable<T>> {
    let (probs, c_lambda) = escort_weights(dist.probs(), lam.value())?;
    Ok(EscortTable { escort: ProbTable::from_parts_unchecked(dist.rows(), dist.cols(), probs), c_lambda })
}

pub fn power_escort_vector<T: Real>(dist: &[T], lam: EscortParam<T>) -> Result<(Vec<T>, T)> {
    escort_weights(dist, lam.value())
}

/// Recovers the source distribution from its escort (exponent `1/lambda`).
pub fn inverse_escort<T: Real>(table: &ProbTable<T>, lam: EscortParam<T>) -> Result<ProbTable<T>> {
    Ok(power_escort_table(table, lam.reciprocal())?.escort)
}
