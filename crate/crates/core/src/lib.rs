//! Tests of independence for two categorical variables observed on a
//! (possibly large or sparse) contingency table.
//!
//! The central statistic splits the mutual information of the power escort
//! of the joint distribution into two pieces, `T_A` and `T_B`, each of which
//! is asymptotically normal under independence once scaled by `sqrt(n)` and
//! a delta-method standard error. Because the reference distribution is
//! normal, the test does not need the nominal table dimensions. Pearson's
//! chi-squared test is provided as the baseline, with both the nominal and
//! the observed degrees of freedom.
//!
//! The numerical core is generic over the floating point type through
//! [`Real`]; the aliases below fix it to `f64` (or `f32`) for callers that
//! do not care.
//!
//! ```
//! use gmi::{CountsTable, EscortParam, GmiMethod, gmi_test};
//!
//! let counts = CountsTable::from_rows(vec![
//!     vec![40, 5, 5],
//!     vec![5, 10, 2],
//!     vec![6, 3, 9],
//! ]).unwrap();
//! let lambda = EscortParam::new(2.0_f64).unwrap();
//! let result = gmi_test(&counts, lambda, 0.01, GmiMethod::Zab).unwrap();
//! assert!((0.0..=1.0).contains(&result.p_value));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod entropy;
pub mod error;
pub mod escort;
pub mod gmi;
pub mod pearson;
pub mod scalar;
pub mod simulate;
pub mod special;
pub mod tables;

pub use entropy::{mutual_information, shannon_entropy, wilks_statistic};
pub use error::{Error, Result};
pub use escort::{inverse_escort, power_escort_table, power_escort_vector, EscortParam, EscortTable};
pub use gmi::{
    gmi_decompose, gmi_test, gmi_test_with, grad_t_a, sigma2_of, z_statistics, FreeParamVector, GmiDecomposition,
    GmiMethod, Method, TestOptions, TestResult, VarianceEstimate, ZStatistics,
};
pub use pearson::{pearson_statistic, pearson_test, DfMode};
pub use scalar::Real;
pub use simulate::{
    build_h0_distribution, build_ha_distribution, run_scenario, table1_report, Hypothesis, ScenarioResult,
    ScenarioSpec, Table1Report,
};
pub use special::{chisq_sf, normal_cdf, normal_quantile};
pub use tables::{
    empirical, observed_dims, product_of_marginals, read_counts_csv, sample_multinomial, write_counts_csv, CountsTable,
    ObservedDims, ProbTable,
};

pub type ProbTable64 = ProbTable<f64>;
pub type ProbTable32 = ProbTable<f32>;
pub type EscortParam64 = EscortParam<f64>;
pub type EscortParam32 = EscortParam<f32>;
pub type EscortTable64 = EscortTable<f64>;
pub type GmiDecomposition64 = GmiDecomposition<f64>;
pub type GmiDecomposition32 = GmiDecomposition<f32>;
pub type VarianceEstimate64 = VarianceEstimate<f64>;
pub type ZStatistics64 = ZStatistics<f64>;
pub type TestResult64 = TestResult<f64>;
