//! Shared helpers for the integration suites. The oracles here recompute
//! everything from raw powers and logarithms so they stay independent of
//! the library's code paths.

#![allow(dead_code)]

use gmi::ProbTable;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive table with cells drawn from `[lo, 1]` before
/// normalization.
pub fn random_positive_table(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64) -> ProbTable<f64> {
    let w: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(lo..1.0)).collect();
    ProbTable::from_weights(rows, cols, w).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, len: usize, lo: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(lo..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn outer(r: &[f64], c: &[f64]) -> ProbTable<f64> {
    let cells = r.iter().flat_map(|&a| c.iter().map(move |&b| a * b)).collect();
    ProbTable::new(r.len(), c.len(), cells).unwrap()
}

fn naive_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn naive_escort(w: &[f64], lam: f64) -> Vec<f64> {
    let raw: Vec<f64> = w.iter().map(|&x| if x > 0.0 { x.powf(lam) } else { 0.0 }).collect();
    let c: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / c).collect()
}

/// `T_A` straight from its definition, on unnormalized or normalized cells.
pub fn oracle_t_a(cells: &[f64], rows: usize, cols: usize, lam: f64) -> f64 {
    let row: Vec<f64> = (0..rows).map(|i| cells[i * cols..(i + 1) * cols].iter().sum()).collect();
    let col: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| cells[i * cols + j]).sum()).collect();
    -naive_entropy(&naive_escort(cells, lam))
        + naive_entropy(&naive_escort(&row, lam))
        + naive_entropy(&naive_escort(&col, lam))
}

/// Central differences of `oracle_t_a` in the free parameterization
/// (last cell absorbs the step).
pub fn oracle_fd_gradient(table: &ProbTable<f64>, lam: f64, h: f64) -> Vec<f64> {
    let base = table.probs().to_vec();
    let last = base.len() - 1;
    (0..last)
        .map(|k| {
            let mut up = base.clone();
            up[k] += h;
            up[last] -= h;
            let mut down = base.clone();
            down[k] -= h;
            down[last] += h;
            (oracle_t_a(&up, table.rows(), table.cols(), lam) - oracle_t_a(&down, table.rows(), table.cols(), lam))
                / (2.0 * h)
        })
        .collect()
}

/// `g' (diag(v) - v v') g` with the covariance assembled as a dense matrix.
pub fn dense_quadratic_form(g: &[f64], v: &[f64]) -> f64 {
    let m = v.len();
    let mut cov = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            cov[a][b] = if a == b { v[a] * (1.0 - v[a]) } else { -v[a] * v[b] };
        }
    }
    let mut total = 0.0;
    for a in 0..m {
        let row: f64 = (0..m).map(|b| cov[a][b] * g[b]).sum();
        total += g[a] * row;
    }
    total
}

pub fn naive_mi(table: &ProbTable<f64>) -> f64 {
    naive_entropy(table.row_marginals()) + naive_entropy(table.col_marginals()) - naive_entropy(table.probs())
}

pub fn binomial_se(p: f64, replicates: f64) -> f64 {
    (p * (1.0 - p) / replicates).sqrt()
}

/// Uniform random permutation of `0..len`.
pub fn permutation(rng: &mut ChaCha8Rng, len: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(rng);
    idx
}
