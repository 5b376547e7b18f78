//! Plug-in Shannon entropy and mutual information, in nats.

use crate::error::{Error, Result};
use crate::escort::{power_escort_table, EscortParam};
use crate::scalar::Real;
use crate::tables::{empirical, CountsTable, ProbTable};

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy<T: Real>(dist: &[T]) -> T {
    let h: T = dist.iter().filter(|&&p| p > T::zero()).map(|&p| -p * p.ln()).sum();
    h.max(T::zero())
}

/// `H(rows) + H(cols) - H(joint)`. Rounding below zero is clamped inside
/// `1e-12`; anything more negative is a bug and reported as such.
pub fn mutual_information<T: Real>(joint: &ProbTable<T>) -> Result<T> {
    let raw = shannon_entropy(joint.row_marginals()) + shannon_entropy(joint.col_marginals())
        - shannon_entropy(joint.probs());
    clamp_nonnegative(raw, "mutual information")
}

pub(crate) fn clamp_nonnegative<T: Real>(raw: T, what: &str) -> Result<T> {
    if raw >= T::zero() {
        Ok(raw)
    } else if raw > -T::prob_tol() {
        Ok(T::zero())
    } else {
        Err(Error::Internal(format!("{what} came out negative: {raw}")))
    }
}

/// Likelihood-ratio form `2n MI` of the escorted empirical table. Under
/// independence it is asymptotically chi-squared with `(I-1)(J-1)` degrees
/// of freedom.
pub fn wilks_statistic<T: Real>(counts: &CountsTable, lam: EscortParam<T>) -> Result<T> {
    let p_hat = empirical::<T>(counts)?;
    let escort = power_escort_table(&p_hat, lam)?.escort;
    let n = T::from_u64(counts.total()).ok_or_else(|| Error::Internal("n not representable".into()))?;
    Ok(T::lit(2.0) * n * mutual_information(&escort)?)
}
