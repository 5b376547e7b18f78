//! Generalized (escort) mutual information test of independence.
//!
//! With `P*` the power escort of the joint table, `r*`/`c*` the escorts of
//! its row/column marginals, and `R`/`C` the row/column marginals of `P*`:
//!
//! ```text
//! T_A = -H(P*) + H(r*) + H(c*)
//! T_B = -H(r*) - H(c*) + H(R) + H(C)
//! ```
//!
//! so `T_A + T_B = MI(P*)`. Under independence `r* = R` and `c* = C`, both
//! pieces vanish, and each converges at rate `sqrt(n)` with a normal limit
//! whose variance follows from the delta method applied to `T_A`.

use serde::Serialize;

use crate::entropy::{clamp_nonnegative, shannon_entropy};
use crate::error::{Error, Result};
use crate::escort::{escort_weights, EscortParam};
use crate::scalar::Real;
use crate::special::normal_cdf;
use crate::tables::{empirical, observed_dims, CountsTable, ObservedDims, ProbTable};

/// Variances below this are treated as zero.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// Default advisory threshold on the mean observed cell count `n/(I_hat J_hat)`.
pub const DEFAULT_SPARSITY_THRESHOLD: f64 = 5.0;

/// Observed marginals closer than this (max abs deviation) to uniform trigger
/// an advisory.
pub const UNIFORM_MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GmiDecomposition<T> {
    pub t_a: T,
    pub t_b: T,
    pub c_lambda: T,
    /// `H(P*)`.
    pub h_joint_escort: T,
    /// Entropy of the row marginal of the joint escort.
    pub h_escort_row_marg: T,
    /// Entropy of the column marginal of the joint escort.
    pub h_escort_col_marg: T,
    /// Entropy of the escort of the row marginal.
    pub h_row_marg_escort: T,
    /// Entropy of the escort of the column marginal.
    pub h_col_marg_escort: T,
}

impl<T: Real> GmiDecomposition<T> {
    /// `T_A + T_B`, the mutual information of the joint escort.
    pub fn escort_mi(&self) -> T {
        self.t_a + self.t_b
    }
}

/// Escorted pieces of a table shared by the decomposition and the gradient.
struct EscortParts<T> {
    joint: Vec<T>,
    c_lambda: T,
    row_escort: Vec<T>,
    col_escort: Vec<T>,
    h_joint: T,
    h_row_escort: T,
    h_col_escort: T,
}

impl<T: Real> EscortParts<T> {
    fn new(dist: &ProbTable<T>, lam: EscortParam<T>) -> Result<Self> {
        let (joint, c_lambda) = escort_weights(dist.probs(), lam.value())?;
        let (row_escort, _) = escort_weights(dist.row_marginals(), lam.value())?;
        let (col_escort, _) = escort_weights(dist.col_marginals(), lam.value())?;
        Ok(Self {
            h_joint: shannon_entropy(&joint),
            h_row_escort: shannon_entropy(&row_escort),
            h_col_escort: shannon_entropy(&col_escort),
            joint,
            c_lambda,
            row_escort,
            col_escort,
        })
    }
}

pub fn gmi_decompose<T: Real>(dist: &ProbTable<T>, lam: EscortParam<T>) -> Result<GmiDecomposition<T>> {
    let parts = EscortParts::new(dist, lam)?;
    let escort = ProbTable::from_parts_unchecked(dist.rows(), dist.cols(), parts.joint.clone());
    let h_escort_row_marg = shannon_entropy(escort.row_marginals());
    let h_escort_col_marg = shannon_entropy(escort.col_marginals());
    Ok(GmiDecomposition {
        t_a: -parts.h_joint + parts.h_row_escort + parts.h_col_escort,
        t_b: -parts.h_row_escort - parts.h_col_escort + h_escort_row_marg + h_escort_col_marg,
        c_lambda: parts.c_lambda,
        h_joint_escort: parts.h_joint,
        h_escort_row_marg,
        h_escort_col_marg,
        h_row_marg_escort: parts.h_row_escort,
        h_col_marg_escort: parts.h_col_escort,
    })
}

/// The `IJ - 1` free coordinates of a table in row-major order; the last
/// cell `(I, J)` is implied by normalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FreeParamVector<T> {
    pub values: Vec<T>,
}

impl<T: Real> FreeParamVector<T> {
    pub fn from_table(dist: &ProbTable<T>) -> Self {
        let cells = dist.probs();
        Self { values: cells[..cells.len() - 1].to_vec() }
    }

    pub fn eliminated(&self) -> T {
        T::one() - self.values.iter().copied().sum::<T>()
    }

    pub fn to_table(&self, rows: usize, cols: usize) -> Result<ProbTable<T>> {
        let mut cells = self.values.clone();
        cells.push(self.eliminated());
        ProbTable::new(rows, cols, cells)
    }
}

/// Delta-method variance of `sqrt(n) T_A` and the gradient it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceEstimate<T> {
    pub sigma2: T,
    /// Gradient in the free parameterization.
    pub gradient: Vec<T>,
    pub degenerate: bool,
}

/// Derivative of `T_A` with respect to every cell of `dist`, treating the
/// cells as unconstrained coordinates. Zero cells get 0.
///
/// For an escorted vector `q = w^l / sum w^l`,
/// `dH(q)/dw_m = -(l q_m / w_m)(ln q_m + H(q))`; the joint term and the two
/// marginal terms of `T_A` each contribute one such expression.
fn cell_gradient<T: Real>(dist: &ProbTable<T>, lam: EscortParam<T>) -> Result<Vec<T>> {
    let parts = EscortParts::new(dist, lam)?;
    let l = lam.value();
    let term = |q: T, w: T, h: T| l * (q / w) * (q.ln() + h);
    let row_terms: Vec<T> = dist
        .row_marginals()
        .iter()
        .zip(&parts.row_escort)
        .map(|(&w, &q)| if w > T::zero() { term(q, w, parts.h_row_escort) } else { T::zero() })
        .collect();
    let col_terms: Vec<T> = dist
        .col_marginals()
        .iter()
        .zip(&parts.col_escort)
        .map(|(&w, &q)| if w > T::zero() { term(q, w, parts.h_col_escort) } else { T::zero() })
        .collect();
    let cols = dist.cols();
    let grad = dist
        .probs()
        .iter()
        .zip(&parts.joint)
        .enumerate()
        .map(|(k, (&p, &q))| {
            if p > T::zero() {
                term(q, p, parts.h_joint) - row_terms[k / cols] - col_terms[k % cols]
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(grad)
}

fn require_positive<T: Real>(dist: &ProbTable<T>) -> Result<()> {
    match dist.probs().iter().position(|&p| !(p > T::zero())) {
        Some(k) => Err(Error::ZeroCellInSupport { row: k / dist.cols(), col: k % dist.cols() }),
        None => Ok(()),
    }
}

/// Analytic gradient of `T_A` in the free parameterization: moving free
/// coordinate `k` moves the eliminated last cell by the opposite amount.
pub fn grad_t_a<T: Real>(dist: &ProbTable<T>, lam: EscortParam<T>) -> Result<Vec<T>> {
    require_positive(dist)?;
    let full = cell_gradient(dist, lam)?;
    let (last, free) = full.split_last().expect("table has at least one cell");
    Ok(free.iter().map(|&g| g - *last).collect())
}

/// Central finite-difference gradient of `T_A` in the free parameterization
/// with step `min(1e-7, p_min / 10)`.
pub fn grad_t_a_fd<T: Real>(dist: &ProbTable<T>, lam: EscortParam<T>) -> Result<Vec<T>> {
    require_positive(dist)?;
    let p_min = dist.min_positive().ok_or_else(|| Error::DegenerateInput("all cells are zero".into()))?;
    let h = T::lit(1e-7).min(p_min / T::lit(10.0));
    let base = dist.probs().to_vec();
    let last = base.len() - 1;
    let t_a_at = |cells: Vec<T>| -> Result<T> {
        let table = ProbTable::from_parts_unchecked(dist.rows(), dist.cols(), cells);
        Ok(gmi_decompose(&table, lam)?.t_a)
    };
    (0..last)
        .map(|k| {
            let mut up = base.clone();
            up[k] = up[k] + h;
            up[last] = up[last] - h;
            let mut down = base.clone();
            down[k] = down[k] - h;
            down[last] = down[last] + h;
            Ok((t_a_at(up)? - t_a_at(down)?) / (T::lit(2.0) * h))
        })
        .collect()
}

/// `sum v g^2 - (sum v g)^2` over the free coordinates (the eliminated cell
/// has gradient 0), evaluated in centered form.
fn contract<T: Real>(free_grad: &[T], free: &[T]) -> T {
    let eliminated = T::one() - free.iter().copied().sum::<T>();
    let mean: T = free.iter().zip(free_grad).map(|(&v, &g)| v * g).sum();
    let spread: T = free.iter().zip(free_grad).map(|(&v, &g)| v * (g - mean) * (g - mean)).sum();
    (spread + eliminated.max(T::zero()) * mean * mean).max(T::zero())
}

/// Asymptotic variance `grad' Sigma grad` of `sqrt(n) T_A`, with `Sigma` the
/// multinomial covariance of the free coordinates.
pub fn sigma2_of<T: Real>(dist: &ProbTable<T>, lam: EscortParam<T>) -> Result<VarianceEstimate<T>> {
    let gradient = grad_t_a(dist, lam)?;
    let free = FreeParamVector::from_table(dist);
    let sigma2 = contract(&gradient, &free.values);
    Ok(VarianceEstimate { sigma2, gradient, degenerate: sigma2 < T::lit(SIGMA2_FLOOR) })
}

/// Variance on a table that may contain zero cells. Zero cells are held at
/// zero; since the multinomial covariance gives them no weight, this equals
/// the variance over the positive cells alone, regardless of which positive
/// cell absorbs perturbations.
pub(crate) fn support_variance<T: Real>(dist: &ProbTable<T>, lam: EscortParam<T>) -> Result<VarianceEstimate<T>> {
    let full = cell_gradient(dist, lam)?;
    let probs = dist.probs();
    let mean: T = probs.iter().zip(&full).map(|(&p, &g)| p * g).sum();
    let sigma2 = probs.iter().zip(&full).map(|(&p, &g)| p * (g - mean) * (g - mean)).sum::<T>().max(T::zero());
    let (&p_last, _) = probs.split_last().expect("nonempty");
    let reference = if p_last > T::zero() { full[full.len() - 1] } else { mean };
    let gradient = probs[..probs.len() - 1]
        .iter()
        .zip(&full)
        .map(|(&p, &g)| if p > T::zero() { g - reference } else { T::zero() })
        .collect();
    Ok(VarianceEstimate { sigma2, gradient, degenerate: sigma2 < T::lit(SIGMA2_FLOOR) })
}

/// `Z_AB`: whichever of `Z_A`, `Z_B` has the larger magnitude, ties to `Z_A`.
pub fn select_zab<T: Real>(z_a: T, z_b: T) -> T {
    if z_a.abs() >= z_b.abs() {
        z_a
    } else {
        z_b
    }
}

/// Two-sided normal p-value `2(1 - Phi(|z|))`.
pub fn two_sided_p<T: Real>(z: T) -> T {
    (T::lit(2.0) * normal_cdf(-z.abs())).min(T::one())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZStatistics<T> {
    pub z_a: T,
    pub z_b: T,
    pub z_ab: T,
    pub t_a: T,
    pub t_b: T,
    pub variance: VarianceEstimate<T>,
    pub dims: ObservedDims,
    pub n: u64,
}

impl<T: Real> ZStatistics<T> {
    pub fn z(&self, method: GmiMethod) -> T {
        match method {
            GmiMethod::Za => self.z_a,
            GmiMethod::Zb => self.z_b,
            GmiMethod::Zab => self.z_ab,
        }
    }
}

/// `Z_A`, `Z_B`, `Z_AB` from the empirical table restricted to its observed
/// rows and columns.
pub fn z_statistics<T: Real>(counts: &CountsTable, lam: EscortParam<T>) -> Result<ZStatistics<T>> {
    let lam = lam.require_non_unit()?;
    let dims = observed_dims(counts)?;
    if dims.i_hat < 2 || dims.j_hat < 2 {
        return Err(Error::InsufficientSupport { i_hat: dims.i_hat, j_hat: dims.j_hat });
    }
    let support = counts.observed_support()?;
    let p_hat = empirical::<T>(&support)?;
    let decomposition = gmi_decompose(&p_hat, lam)?;
    clamp_nonnegative(decomposition.escort_mi(), "escort mutual information")?;
    let variance = support_variance(&p_hat, lam)?;
    if variance.degenerate {
        return Err(Error::DegenerateVariance { sigma2: variance.sigma2.as_f64() });
    }
    let n = counts.total();
    let scale = T::lit(n as f64).sqrt() / variance.sigma2.sqrt();
    let z_a = scale * decomposition.t_a;
    let z_b = scale * decomposition.t_b;
    Ok(ZStatistics {
        z_a,
        z_b,
        z_ab: select_zab(z_a, z_b),
        t_a: decomposition.t_a,
        t_b: decomposition.t_b,
        variance,
        dims,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    #[serde(rename = "zab")]
    Zab,
    #[serde(rename = "za")]
    Za,
    #[serde(rename = "zb")]
    Zb,
    #[serde(rename = "pearson-observed")]
    PearsonObserved,
    #[serde(rename = "pearson-theoretical")]
    PearsonTheoretical,
}

impl Method {
    /// Fixed reporting order.
    pub const ALL: [Method; 5] =
        [Method::Zab, Method::Za, Method::Zb, Method::PearsonObserved, Method::PearsonTheoretical];

    pub fn name(self) -> &'static str {
        match self {
            Method::Zab => "zab",
            Method::Za => "za",
            Method::Zb => "zb",
            Method::PearsonObserved => "pearson-observed",
            Method::PearsonTheoretical => "pearson-theoretical",
        }
    }

    pub fn gmi(self) -> Option<GmiMethod> {
        match self {
            Method::Zab => Some(GmiMethod::Zab),
            Method::Za => Some(GmiMethod::Za),
            Method::Zb => Some(GmiMethod::Zb),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GmiMethod {
    Za,
    Zb,
    Zab,
}

impl From<GmiMethod> for Method {
    fn from(m: GmiMethod) -> Self {
        match m {
            GmiMethod::Za => Method::Za,
            GmiMethod::Zb => Method::Zb,
            GmiMethod::Zab => Method::Zab,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult<T> {
    pub method: Method,
    pub statistic: T,
    pub p_value: T,
    pub reject: bool,
    pub alpha: T,
    pub lambda: Option<T>,
    pub sigma2_hat: Option<T>,
    pub df: Option<u64>,
    pub n: u64,
    pub i_hat: usize,
    pub j_hat: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOptions<T> {
    pub alpha: T,
    pub sparsity_threshold: T,
}

impl<T: Real> TestOptions<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { alpha, sparsity_threshold: T::lit(DEFAULT_SPARSITY_THRESHOLD) })
    }

    pub fn with_sparsity_threshold(mut self, threshold: T) -> Self {
        self.sparsity_threshold = threshold;
        self
    }
}

pub fn gmi_test<T: Real>(
    counts: &CountsTable,
    lam: EscortParam<T>,
    alpha: T,
    method: GmiMethod,
) -> Result<TestResult<T>> {
    gmi_test_with(counts, lam, &TestOptions::new(alpha)?, method)
}

pub fn gmi_test_with<T: Real>(
    counts: &CountsTable,
    lam: EscortParam<T>,
    options: &TestOptions<T>,
    method: GmiMethod,
) -> Result<TestResult<T>> {
    let z = z_statistics(counts, lam)?;
    let statistic = z.z(method);
    let p_value = two_sided_p(statistic);
    Ok(TestResult {
        method: method.into(),
        statistic,
        p_value,
        reject: p_value < options.alpha,
        alpha: options.alpha,
        lambda: Some(lam.value()),
        sigma2_hat: Some(z.variance.sigma2),
        df: None,
        n: z.n,
        i_hat: z.dims.i_hat,
        j_hat: z.dims.j_hat,
        warnings: gmi_warnings(counts, z.dims, options.sparsity_threshold),
    })
}

fn gmi_warnings<T: Real>(counts: &CountsTable, dims: ObservedDims, threshold: T) -> Vec<String> {
    let mut warnings = Vec::new();
    let mean_count = counts.total() as f64 / (dims.i_hat * dims.j_hat) as f64;
    if mean_count < threshold.as_f64() {
        warnings.push(format!(
            "advisory: mean observed cell count n/(I_hat*J_hat) = {mean_count:.3} is below {}; \
             the normal approximation may be slow to converge",
            threshold.as_f64()
        ));
    }
    let n = counts.total() as f64;
    let near_uniform = |totals: Vec<u64>| {
        let occupied: Vec<f64> = totals.into_iter().filter(|&t| t > 0).map(|t| t as f64 / n).collect();
        let target = 1.0 / occupied.len() as f64;
        occupied.iter().all(|&p| (p - target).abs() <= UNIFORM_MARGINAL_TOL)
    };
    if near_uniform(counts.row_totals()) {
        warnings.push("advisory: observed row marginal is uniform; the variance estimate is unreliable".into());
    }
    if near_uniform(counts.col_totals()) {
        warnings.push("advisory: observed column marginal is uniform; the variance estimate is unreliable".into());
    }
    warnings
}
