//! Monte Carlo comparison of the escort-MI tests and Pearson's test on the
//! sparse `I x J` family: both marginals are `{1-p, p/(I-1), ..., p/(I-1)}`.
//! Under H0 the joint is their product; under Ha the lower-right
//! `(I-1) x (I-1)` block is collapsed onto its diagonal, which keeps the
//! marginals and creates dependence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::escort::EscortParam;
use crate::gmi::{two_sided_p, z_statistics, GmiMethod, Method};
use crate::pearson::pearson_statistic;
use crate::scalar::Real;
use crate::special::chisq_sf;
use crate::tables::{observed_dims, sample_multinomial, ProbTable};

pub const DEFAULT_REPLICATES: u64 = 10_000;
pub const DEFAULT_SIZES: [u64; 6] = [30, 100, 500, 1000, 1500, 2000];
pub const DEFAULT_ONE_MINUS_P: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_DIM: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    H0,
    Ha,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::H0 => "h0",
            Hypothesis::Ha => "ha",
        }
    }

    fn code(self) -> u64 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::Ha => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub rows: usize,
    pub cols: usize,
    /// Marginal tail mass; scenarios are labelled by `1 - p`.
    pub p: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub sample_sizes: Vec<u64>,
    pub replicates: u64,
    pub base_seed: u64,
    pub hypothesis: Hypothesis,
}

impl ScenarioSpec {
    /// The `11 x 11`, `lambda = 2`, `alpha = 0.01` configuration.
    pub fn sparse_11x11(one_minus_p: f64, hypothesis: Hypothesis, sample_sizes: Vec<u64>) -> Self {
        Self {
            rows: DEFAULT_DIM,
            cols: DEFAULT_DIM,
            p: 1.0 - one_minus_p,
            lambda: 2.0,
            alpha: 0.01,
            sample_sizes,
            replicates: DEFAULT_REPLICATES,
            base_seed: 0,
            hypothesis,
        }
    }

    pub fn one_minus_p(&self) -> f64 {
        1.0 - self.p
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::Domain(format!("need at least a 2x2 table, got {}x{}", self.rows, self.cols)));
        }
        if self.hypothesis == Hypothesis::Ha && self.rows != self.cols {
            return Err(Error::Domain("the alternative construction needs a square table".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Domain(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.replicates == 0 {
            return Err(Error::Domain("replicates must be positive".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::Domain("sample sizes must be a nonempty list of positive integers".into()));
        }
        EscortParam::new(self.lambda)?.require_non_unit()?;
        Ok(())
    }

    pub fn distribution(&self) -> Result<ProbTable<f64>> {
        match self.hypothesis {
            Hypothesis::H0 => build_h0_distribution(self.rows, self.cols, self.p),
            Hypothesis::Ha => build_ha_distribution(self.rows, self.p),
        }
    }

    /// Seeds depend on the sampled distribution, not on `lambda`/`alpha`, so
    /// runs that differ only in the test settings see the same draws.
    fn scenario_key(&self) -> u64 {
        mix64(&[self.rows as u64, self.cols as u64, self.p.to_bits(), self.hypothesis.code()])
    }
}

fn tail_marginal<T: Real>(size: usize, p: T) -> Vec<T> {
    let tail = p / T::lit((size - 1) as f64);
    std::iter::once(T::one() - p).chain(std::iter::repeat_n(tail, size - 1)).collect()
}

fn check_shape<T: Real>(rows: usize, cols: usize, p: T) -> Result<()> {
    if rows < 2 || cols < 2 {
        return Err(Error::Domain(format!("need at least a 2x2 table, got {rows}x{cols}")));
    }
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

pub fn build_h0_distribution<T: Real>(rows: usize, cols: usize, p: T) -> Result<ProbTable<T>> {
    check_shape(rows, cols, p)?;
    let row = tail_marginal(rows, p);
    let col = tail_marginal(cols, p);
    let cells = row.iter().flat_map(|&r| col.iter().map(move |&c| r * c)).collect();
    ProbTable::new(rows, cols, cells)
}

pub fn build_ha_distribution<T: Real>(size: usize, p: T) -> Result<ProbTable<T>> {
    check_shape(size, size, p)?;
    let h0 = build_h0_distribution(size, size, p)?;
    let diagonal = p * p / T::lit((size - 1) as f64);
    let mut cells = h0.probs().to_vec();
    for i in 1..size {
        for j in 1..size {
            cells[i * size + j] = if i == j { diagonal } else { T::zero() };
        }
    }
    ProbTable::new(size, size, cells)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive 64-bit mix of several words.
pub fn mix64(words: &[u64]) -> u64 {
    words.iter().fold(0x6A09_E667_F3BC_C909, |h, &w| splitmix64(h ^ splitmix64(w)))
}

pub fn replicate_seed(base_seed: u64, scenario_key: u64, n: u64, replicate: u64) -> u64 {
    mix64(&[base_seed, scenario_key, n, replicate])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    rejections: [u64; 5],
    aborted: [u64; 5],
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for k in 0..5 {
            self.rejections[k] += other.rejections[k];
            self.aborted[k] += other.aborted[k];
        }
        self
    }
}

fn method_slot(method: Method) -> usize {
    Method::ALL.iter().position(|&m| m == method).expect("method listed")
}

fn one_replicate(spec: &ScenarioSpec, dist: &ProbTable<f64>, lam: EscortParam<f64>, n: u64, seed: u64) -> Tally {
    let counts = sample_multinomial(dist, n, seed);
    let mut tally = Tally::default();
    match z_statistics(&counts, lam) {
        Ok(z) => {
            for gm in [GmiMethod::Zab, GmiMethod::Za, GmiMethod::Zb] {
                if two_sided_p(z.z(gm)) < spec.alpha {
                    tally.rejections[method_slot(gm.into())] += 1;
                }
            }
        }
        Err(_) => {
            for gm in [GmiMethod::Zab, GmiMethod::Za, GmiMethod::Zb] {
                tally.aborted[method_slot(gm.into())] += 1;
            }
        }
    }
    let observed = method_slot(Method::PearsonObserved);
    let theoretical = method_slot(Method::PearsonTheoretical);
    match (pearson_statistic::<f64>(&counts), observed_dims(&counts)) {
        (Ok(stat), Ok(dims)) => {
            let df_obs = ((dims.i_hat - 1) * (dims.j_hat - 1)) as u64;
            let df_theo = ((spec.rows - 1) * (spec.cols - 1)) as u64;
            for (slot, df) in [(observed, df_obs), (theoretical, df_theo)] {
                match chisq_sf(stat, df) {
                    Ok(p) if p < spec.alpha => tally.rejections[slot] += 1,
                    Ok(_) => {}
                    Err(_) => tally.aborted[slot] += 1,
                }
            }
        }
        _ => {
            tally.aborted[observed] += 1;
            tally.aborted[theoretical] += 1;
        }
    }
    tally
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCell {
    pub n: u64,
    pub method: Method,
    pub rejections: u64,
    /// Replicates on which the statistic was defined.
    pub evaluated: u64,
    /// Replicates dropped because the statistic was undefined.
    pub aborted: u64,
    /// `rejections / evaluated`; `None` when nothing was evaluated.
    pub rate: Option<f64>,
    /// `(rejections + aborted) / replicates`, i.e. counting every undefined
    /// statistic as a rejection.
    pub rate_aborted_as_reject: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub cells: Vec<RateCell>,
    pub degenerate_counts: BTreeMap<Method, u64>,
    pub flags: Vec<String>,
    /// Wall-clock time; excluded from serialized reports so they stay
    /// reproducible.
    #[serde(skip)]
    pub elapsed: f64,
}

impl ScenarioResult {
    pub fn cell(&self, method: Method, n: u64) -> Option<&RateCell> {
        self.cells.iter().find(|c| c.method == method && c.n == n)
    }

    pub fn rate(&self, method: Method, n: u64) -> Option<f64> {
        self.cell(method, n).and_then(|c| c.rate)
    }
}

/// Runs every sample size of `spec` with all five methods. Replicates run in
/// parallel on the current rayon pool; counts are integer sums, so the
/// result does not depend on scheduling.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    spec.validate()?;
    let start = Instant::now();
    let dist = spec.distribution()?;
    let lam = EscortParam::new(spec.lambda)?;
    let key = spec.scenario_key();
    let mut cells = Vec::new();
    let mut degenerate_counts: BTreeMap<Method, u64> = Method::ALL.iter().map(|&m| (m, 0)).collect();
    let mut flags = Vec::new();
    for &n in &spec.sample_sizes {
        let tally = (0..spec.replicates)
            .into_par_iter()
            .map(|r| one_replicate(spec, &dist, lam, n, replicate_seed(spec.base_seed, key, n, r)))
            .reduce(Tally::default, Tally::merge);
        for (slot, &method) in Method::ALL.iter().enumerate() {
            let aborted = tally.aborted[slot];
            let evaluated = spec.replicates - aborted;
            let rejections = tally.rejections[slot];
            *degenerate_counts.get_mut(&method).expect("seeded") += aborted;
            cells.push(RateCell {
                n,
                method,
                rejections,
                evaluated,
                aborted,
                rate: (evaluated > 0).then(|| rejections as f64 / evaluated as f64),
                rate_aborted_as_reject: (rejections + aborted) as f64 / spec.replicates as f64,
            });
        }
        let zab_aborted = tally.aborted[method_slot(Method::Zab)];
        let pearson_aborted = tally.aborted[method_slot(Method::PearsonObserved)];
        if zab_aborted > 0 || pearson_aborted > 0 {
            flags.push(format!(
                "1-p={:.4} n={n} {}: {zab_aborted} escort-MI and {pearson_aborted} Pearson replicate(s) \
                 had an undefined statistic and were excluded from the rate denominators",
                spec.one_minus_p(),
                spec.hypothesis.name()
            ));
        }
    }
    Ok(ScenarioResult { spec: spec.clone(), cells, degenerate_counts, flags, elapsed: start.elapsed().as_secs_f64() })
}

/// Settings for a grid of scenarios: tail masses x sample sizes x hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1Config {
    /// Marginal tail masses `p` (rows are labelled by `1 - p`).
    pub tail_masses: Vec<f64>,
    pub sizes: Vec<u64>,
    pub replicates: u64,
    pub base_seed: u64,
    pub lambda: f64,
    pub alpha: f64,
    pub dim: usize,
    pub hypotheses: Vec<Hypothesis>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            tail_masses: DEFAULT_ONE_MINUS_P.iter().map(|q| 1.0 - q).collect(),
            sizes: DEFAULT_SIZES.to_vec(),
            replicates: DEFAULT_REPLICATES,
            base_seed: 0,
            lambda: 2.0,
            alpha: 0.01,
            dim: DEFAULT_DIM,
            hypotheses: vec![Hypothesis::H0, Hypothesis::Ha],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Report {
    pub scenarios: Vec<ScenarioResult>,
}

pub fn table1_report(p_values: &[f64], sizes: &[u64], replicates: u64, base_seed: u64) -> Result<Table1Report> {
    table1_report_with(&Table1Config {
        tail_masses: p_values.to_vec(),
        sizes: sizes.to_vec(),
        replicates,
        base_seed,
        ..Table1Config::default()
    })
}

pub fn table1_report_with(config: &Table1Config) -> Result<Table1Report> {
    let mut scenarios = Vec::new();
    for &p in &config.tail_masses {
        for &hypothesis in &config.hypotheses {
            let spec = ScenarioSpec {
                rows: config.dim,
                cols: config.dim,
                p,
                lambda: config.lambda,
                alpha: config.alpha,
                sample_sizes: config.sizes.clone(),
                replicates: config.replicates,
                base_seed: config.base_seed,
                hypothesis,
            };
            scenarios.push(run_scenario(&spec)?);
        }
    }
    Ok(Table1Report { scenarios })
}

fn fmt_rate(rate: Option<f64>) -> String {
    rate.map_or_else(|| "NA".to_string(), |r| format!("{r:.6}"))
}

impl Table1Report {
    pub fn scenario(&self, one_minus_p: f64, hypothesis: Hypothesis) -> Option<&ScenarioResult> {
        self.scenarios
            .iter()
            .find(|s| s.spec.hypothesis == hypothesis && (s.spec.one_minus_p() - one_minus_p).abs() < 1e-9)
    }

    /// Long format: `one_minus_p, n, method, hypothesis, rate, aborted`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("one_minus_p\tn\tmethod\thypothesis\trate\taborted\n");
        let mut rows: Vec<(usize, u64, usize, Hypothesis, &RateCell, f64)> = Vec::new();
        let mut order: Vec<u64> = Vec::new();
        for s in &self.scenarios {
            let key = s.spec.p.to_bits();
            let group = order.iter().position(|&k| k == key).unwrap_or_else(|| {
                order.push(key);
                order.len() - 1
            });
            for c in &s.cells {
                rows.push((group, c.n, method_slot(c.method), s.spec.hypothesis, c, s.spec.one_minus_p()));
            }
        }
        rows.sort_by_key(|&(g, n, m, h, _, _)| (g, n, m, h));
        for (_, _, _, h, c, omp) in rows {
            let _ = writeln!(out, "{omp:.4}\t{}\t{}\t{}\t{}\t{}", c.n, c.method, h.name(), fmt_rate(c.rate), c.aborted);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Wide layout: one line per `(1-p, n)` with H0/Ha rates for `Z_AB`,
    /// Pearson with observed df, and Pearson with nominal df.
    pub fn to_wide_text(&self) -> String {
        let methods = [Method::Zab, Method::PearsonObserved, Method::PearsonTheoretical];
        let mut out = String::from("1-p     n      zab:h0  zab:ha  obs:h0  obs:ha  nom:h0  nom:ha\n");
        let mut seen: Vec<u64> = Vec::new();
        for s in &self.scenarios {
            if seen.contains(&s.spec.p.to_bits()) {
                continue;
            }
            seen.push(s.spec.p.to_bits());
            let omp = s.spec.one_minus_p();
            for &n in &s.spec.sample_sizes {
                let _ = write!(out, "{omp:<7.2} {n:<6}");
                for m in methods {
                    for h in [Hypothesis::H0, Hypothesis::Ha] {
                        let r = self.scenario(omp, h).and_then(|sc| sc.rate(m, n));
                        let _ = write!(out, " {:>7}", r.map_or("-".to_string(), |r| format!("{r:.4}")));
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}
