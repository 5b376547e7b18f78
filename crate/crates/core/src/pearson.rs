//! Pearson's chi-squared test of independence, the comparison baseline.

use crate::error::{Error, Result};
use crate::gmi::{Method, TestResult};
use crate::scalar::Real;
use crate::special::chisq_sf;
use crate::tables::{empirical, observed_dims, CountsTable};

/// Degrees-of-freedom convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfMode {
    /// `(I-1)(J-1)` from the nominal alphabet sizes.
    Theoretical { rows: usize, cols: usize },
    /// `(I_hat-1)(J_hat-1)` from the occupied rows and columns.
    Observed,
}

/// `n sum (p_ij - p_i. p_.j)^2 / (p_i. p_.j)`, skipping cells whose
/// estimated expectation is zero.
pub fn pearson_statistic<T: Real>(counts: &CountsTable) -> Result<T> {
    let dims = observed_dims(counts)?;
    if dims.i_hat < 2 || dims.j_hat < 2 {
        return Err(Error::InsufficientSupport { i_hat: dims.i_hat, j_hat: dims.j_hat });
    }
    let p = empirical::<T>(counts)?;
    let n = T::lit(counts.total() as f64);
    let mut sum = T::zero();
    for (i, &r) in p.row_marginals().iter().enumerate() {
        for (j, &c) in p.col_marginals().iter().enumerate() {
            let expected = r * c;
            if expected > T::zero() {
                let d = p.get(i, j) - expected;
                sum = sum + d * d / expected;
            }
        }
    }
    Ok(n * sum)
}

pub fn pearson_test<T: Real>(counts: &CountsTable, alpha: T, df_mode: DfMode) -> Result<TestResult<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let dims = observed_dims(counts)?;
    let (method, rows, cols) = match df_mode {
        DfMode::Theoretical { rows, cols } => (Method::PearsonTheoretical, rows, cols),
        DfMode::Observed => (Method::PearsonObserved, dims.i_hat, dims.j_hat),
    };
    let df = (rows as i64 - 1) * (cols as i64 - 1);
    if df < 1 {
        return Err(Error::InvalidDf(df));
    }
    let statistic = pearson_statistic::<T>(counts)?;
    let p_value = chisq_sf(statistic, df as u64)?;
    Ok(TestResult {
        method,
        statistic,
        p_value,
        reject: p_value < alpha,
        alpha,
        lambda: None,
        sigma2_hat: None,
        df: Some(df as u64),
        n: counts.total(),
        i_hat: dims.i_hat,
        j_hat: dims.j_hat,
        warnings: expected_count_warnings(counts),
    })
}

/// Flags tables that fail the usual expected-count rule of thumb (at least
/// 80% of expected counts >= 5 and none below 1), judged on the occupied
/// rows and columns.
fn expected_count_warnings(counts: &CountsTable) -> Vec<String> {
    let n = counts.total() as f64;
    let rows: Vec<f64> = counts.row_totals().into_iter().filter(|&t| t > 0).map(|t| t as f64).collect();
    let cols: Vec<f64> = counts.col_totals().into_iter().filter(|&t| t > 0).map(|t| t as f64).collect();
    let expected: Vec<f64> = rows.iter().flat_map(|r| cols.iter().map(move |c| r * c / n)).collect();
    let at_least_five = expected.iter().filter(|&&e| e >= 5.0).count() as f64 / expected.len() as f64;
    let min = expected.iter().copied().fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    if at_least_five < 0.8 || min < 1.0 {
        warnings.push(format!(
            "advisory: expected counts fail the usual rule of thumb ({:.1}% >= 5, minimum {min:.3}); \
             the chi-squared reference may be inaccurate",
            100.0 * at_least_five
        ));
    }
    warnings
}
