//! Selected simulation cells at 10^5 replicates, compared against the
//! reference rates, allowing for the Monte Carlo error of both runs.

mod common;

use common::binomial_se;
use gmi::{run_scenario, Hypothesis, Method, ScenarioSpec};

const REPLICATES: u64 = 100_000;

fn rate(one_minus_p: f64, hypothesis: Hypothesis, n: u64, method: Method) -> f64 {
    let mut spec = ScenarioSpec::sparse_11x11(one_minus_p, hypothesis, vec![n]);
    spec.replicates = REPLICATES;
    run_scenario(&spec).unwrap().rate(method, n).unwrap()
}

fn close(observed: f64, reference: f64) -> bool {
    let se = 2.0_f64.sqrt() * binomial_se(reference, REPLICATES as f64);
    (observed - reference).abs() <= 3.0 * se
}

#[test]
fn power_at_largest_sample() {
    let r = rate(0.7, Hypothesis::Ha, 2000, Method::Zab);
    assert!(close(r, 0.8196), "{r}");
}

#[test]
fn size_at_moderate_sparsity() {
    let r = rate(0.5, Hypothesis::H0, 500, Method::Zab);
    assert!(close(r, 0.0145), "{r}");
}

#[test]
fn nominal_and_observed_df_agree_on_full_support() {
    let mut spec = ScenarioSpec::sparse_11x11(0.5, Hypothesis::H0, vec![500]);
    spec.replicates = 20_000;
    let res = run_scenario(&spec).unwrap();
    let nominal = res.cell(Method::PearsonTheoretical, 500).unwrap();
    let observed = res.cell(Method::PearsonObserved, 500).unwrap();
    assert_eq!(nominal.aborted, 0);
    assert!((nominal.rate.unwrap() - observed.rate.unwrap()).abs() < 0.002);
    assert!(close(observed.rate.unwrap(), 0.0124));
}
