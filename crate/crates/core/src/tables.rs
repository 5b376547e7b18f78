//! Contingency tables, probability tables, and the plumbing around them:
//! empirical distributions, multinomial sampling, and CSV I/O.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Observed `I x J` frequency matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountsTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    total: u64,
}

impl CountsTable {
    pub fn new(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidTable("table needs at least one row and one column".into()));
        }
        if counts.len() != rows * cols {
            return Err(Error::InvalidTable(format!(
                "expected {} cells for a {rows}x{cols} table, got {}",
                rows * cols,
                counts.len()
            )));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::InvalidTable("total count overflows u64".into()))?;
        Ok(Self { rows, cols, counts, total })
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::InvalidTable(format!(
                "ragged rows: row {} has {} cells, expected {n_cols}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Self::new(n_rows, n_cols, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.cols];
        for row in self.counts.chunks(self.cols) {
            for (acc, &c) in out.iter_mut().zip(row) {
                *acc += c;
            }
        }
        out
    }

    /// Sub-table made of the rows and columns with positive totals.
    pub fn observed_support(&self) -> Result<CountsTable> {
        if self.total == 0 {
            return Err(Error::ZeroSample);
        }
        let keep_rows: Vec<usize> =
            self.row_totals().iter().enumerate().filter(|(_, &t)| t > 0).map(|(i, _)| i).collect();
        let keep_cols: Vec<usize> =
            self.col_totals().iter().enumerate().filter(|(_, &t)| t > 0).map(|(j, _)| j).collect();
        let mut counts = Vec::with_capacity(keep_rows.len() * keep_cols.len());
        for &i in &keep_rows {
            counts.extend(keep_cols.iter().map(|&j| self.get(i, j)));
        }
        CountsTable::new(keep_rows.len(), keep_cols.len(), counts)
    }

    /// Applies row and column permutations: output cell `(i, j)` is input
    /// cell `(row_perm[i], col_perm[j])`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> CountsTable {
        let counts = row_perm.iter().flat_map(|&i| col_perm.iter().map(move |&j| self.get(i, j))).collect();
        CountsTable::new(self.rows, self.cols, counts).expect("permutation preserves shape")
    }
}

/// Joint distribution on an `I x J` alphabet with cached marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable<T> {
    rows: usize,
    cols: usize,
    probs: Vec<T>,
    row_marginals: Vec<T>,
    col_marginals: Vec<T>,
}

impl<T: Real> ProbTable<T> {
    /// Validates nonnegativity and normalization (`|sum - 1| <= 1e-12` in
    /// double precision).
    pub fn new(rows: usize, cols: usize, probs: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidTable("table needs at least one row and one column".into()));
        }
        if probs.len() != rows * cols {
            return Err(Error::InvalidTable(format!(
                "expected {} cells for a {rows}x{cols} table, got {}",
                rows * cols,
                probs.len()
            )));
        }
        if let Some(k) = probs.iter().position(|p| !p.is_finite() || *p < T::zero()) {
            return Err(Error::InvalidTable(format!(
                "cell ({}, {}) = {} is not a nonnegative finite number",
                k / cols,
                k % cols,
                probs[k]
            )));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::prob_tol() {
            return Err(Error::InvalidTable(format!("cells sum to {total}, not 1")));
        }
        Ok(Self::from_parts_unchecked(rows, cols, probs))
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidTable("ragged rows".into()));
        }
        Self::new(n_rows, n_cols, rows.into_iter().flatten().collect())
    }

    /// Normalizes arbitrary nonnegative weights into a table.
    pub fn from_weights(rows: usize, cols: usize, weights: Vec<T>) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::DegenerateInput("weights must have a positive finite sum".into()));
        }
        Self::new(rows, cols, weights.into_iter().map(|w| w / total).collect())
    }

    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, probs: Vec<T>) -> Self {
        let mut row_marginals = vec![T::zero(); rows];
        let mut col_marginals = vec![T::zero(); cols];
        for (i, row) in probs.chunks(cols).enumerate() {
            for (j, &p) in row.iter().enumerate() {
                row_marginals[i] = row_marginals[i] + p;
                col_marginals[j] = col_marginals[j] + p;
            }
        }
        Self { rows, cols, probs, row_marginals, col_marginals }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major cell probabilities.
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.probs[i * self.cols + j]
    }

    pub fn row_marginals(&self) -> &[T] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[T] {
        &self.col_marginals
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.probs.chunks(self.cols).map(<[T]>::to_vec).collect()
    }

    /// Output cell `(i, j)` is input cell `(row_perm[i], col_perm[j])`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let probs = row_perm.iter().flat_map(|&i| col_perm.iter().map(move |&j| self.get(i, j))).collect();
        Self::from_parts_unchecked(self.rows, self.cols, probs)
    }

    pub fn transposed(&self) -> Self {
        let probs = (0..self.cols).flat_map(|j| (0..self.rows).map(move |i| self.get(i, j))).collect();
        Self::from_parts_unchecked(self.cols, self.rows, probs)
    }

    pub fn min_positive(&self) -> Option<T> {
        self.probs.iter().copied().filter(|&p| p > T::zero()).reduce(T::min)
    }

    /// Largest absolute difference between a cell and the product of its
    /// marginals.
    pub fn max_dependence(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self.get(i, j) - self.row_marginals[i] * self.col_marginals[j]).abs();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Numbers of rows and columns with a positive sample total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ObservedDims {
    pub i_hat: usize,
    pub j_hat: usize,
}

pub fn empirical<T: Real>(table: &CountsTable) -> Result<ProbTable<T>> {
    if table.total == 0 {
        return Err(Error::ZeroSample);
    }
    let n = T::from_u64(table.total).ok_or_else(|| Error::Internal("n not representable".into()))?;
    let probs = table.counts.iter().map(|&f| T::from_u64(f).unwrap_or_else(T::nan) / n).collect();
    Ok(ProbTable::from_parts_unchecked(table.rows, table.cols, probs))
}

pub fn observed_dims(table: &CountsTable) -> Result<ObservedDims> {
    if table.total == 0 {
        return Err(Error::ZeroSample);
    }
    Ok(ObservedDims {
        i_hat: table.row_totals().iter().filter(|&&t| t > 0).count(),
        j_hat: table.col_totals().iter().filter(|&&t| t > 0).count(),
    })
}

pub fn product_of_marginals<T: Real>(dist: &ProbTable<T>) -> ProbTable<T> {
    let probs = dist.row_marginals.iter().flat_map(|&r| dist.col_marginals.iter().map(move |&c| r * c)).collect();
    ProbTable::from_parts_unchecked(dist.rows, dist.cols, probs)
}

/// Draws one multinomial table of size `n` by sequential conditional
/// binomials over the row-major cells. Bitwise deterministic in
/// `(dist, n, seed)`.
pub fn sample_multinomial<T: Real>(dist: &ProbTable<T>, n: u64, seed: u64) -> CountsTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs: Vec<f64> = dist.probs.iter().map(|p| p.as_f64()).collect();
    let last_positive = probs.iter().rposition(|&p| p > 0.0);
    let mut counts = vec![0u64; probs.len()];
    let mut remaining_n = n;
    let mut remaining_mass: f64 = probs.iter().sum();
    if let Some(last) = last_positive {
        for (k, &p) in probs.iter().enumerate().take(last + 1) {
            if remaining_n == 0 {
                break;
            }
            if p <= 0.0 {
                continue;
            }
            if k == last {
                counts[k] = remaining_n;
                break;
            }
            let cond = (p / remaining_mass).clamp(0.0, 1.0);
            let draw =
                Binomial::new(remaining_n, cond).expect("conditional probability lies in [0, 1]").sample(&mut rng);
            counts[k] = draw;
            remaining_n -= draw;
            remaining_mass -= p;
        }
    }
    CountsTable::new(dist.rows, dist.cols, counts).expect("sampled table has the source shape")
}

pub fn parse_counts_csv<R: Read>(reader: R, header: bool) -> Result<CountsTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(header).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e.to_string())),
            _ => Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), msg: e.to_string() },
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<u64>()
                    .map_err(|_| Error::Parse { line, msg: format!("'{field}' is not a nonnegative integer") })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("ragged row: {} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, msg: "no data rows".into() });
    }
    CountsTable::from_rows(rows)
}

pub fn read_counts_csv(path: impl AsRef<Path>, header: bool) -> Result<CountsTable> {
    parse_counts_csv(File::open(path)?, header)
}

pub fn format_counts_csv(table: &CountsTable) -> String {
    let mut out = String::new();
    for row in table.counts.chunks(table.cols) {
        let line: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_counts_csv(table: &CountsTable, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(format_counts_csv(table).as_bytes())?;
    w.flush()?;
    Ok(())
}
