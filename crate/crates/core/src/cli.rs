//! Command-line front end: `test` runs the tests on a CSV of counts,
//! `simulate` runs the Monte Carlo comparison.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::escort::EscortParam;
use crate::gmi::{gmi_test_with, Method, TestOptions, TestResult, DEFAULT_SPARSITY_THRESHOLD};
use crate::pearson::{pearson_test, DfMode};
use crate::simulate::{table1_report_with, Hypothesis, Table1Config, DEFAULT_DIM, DEFAULT_ONE_MINUS_P};
use crate::tables::read_counts_csv;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gmi", version, about = "Escort mutual information and Pearson tests of independence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test independence on a CSV contingency table of counts.
    Test(TestArgs),
    /// Run the Monte Carlo size/power comparison on the sparse 11x11 family.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Zab,
    Za,
    Zb,
    PearsonObserved,
    PearsonTheoretical,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Zab => vec![Method::Zab],
            MethodArg::Za => vec![Method::Za],
            MethodArg::Zb => vec![Method::Zb],
            MethodArg::PearsonObserved => vec![Method::PearsonObserved],
            MethodArg::PearsonTheoretical => vec![Method::PearsonTheoretical],
            MethodArg::All => Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypothesisArg {
    H0,
    Ha,
    Both,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Escort exponent (must differ from 1 for the escort-MI tests).
    #[arg(long, default_value_t = 2.0, value_parser = parse_positive)]
    pub lambda: f64,
    /// Significance level.
    #[arg(long, default_value_t = 0.01, value_parser = parse_unit_interval)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Comma-separated counts, one table row per line.
    pub csv: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    pub method: MethodArg,
    /// Nominal dimensions `I,J` for the theoretical-df Pearson test.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<(usize, usize)>,
    /// Advisory threshold on the mean observed cell count n/(I_hat*J_hat).
    #[arg(long, default_value_t = DEFAULT_SPARSITY_THRESHOLD)]
    pub sparsity_threshold: f64,
    /// Skip one header line.
    #[arg(long)]
    pub header: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario(s) by 1-p; defaults to 0.5,0.6,0.7,0.8,0.9.
    #[arg(long, value_delimiter = ',')]
    pub one_minus_p: Vec<f64>,
    /// Sample sizes; defaults to 30,100,500,1000,1500,2000.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<u64>,
    #[arg(long, value_enum, default_value_t = HypothesisArg::Both)]
    pub hypothesis: HypothesisArg,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Side length of the square table.
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dims: usize,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "GMI_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

fn parse_unit_interval(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x < 1.0 => Ok(x),
        _ => Err(format!("expected a number in (0, 1), got '{s}'")),
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [i, j] => match (i.parse::<usize>(), j.parse::<usize>()) {
            (Ok(i), Ok(j)) if i >= 1 && j >= 1 => Ok((i, j)),
            _ => Err(format!("expected two positive integers 'I,J', got '{s}'")),
        },
        _ => Err(format!("expected 'I,J', got '{s}'")),
    }
}

const LAMBDA_ONE: &str = "lambda = 1 is not allowed for the escort-MI tests: \
                          T_A has zero asymptotic variance unless lambda != 1";

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    method: Option<Method>,
    message: String,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::ZeroSample => "ZeroSample",
        Error::DegenerateInput(_) => "DegenerateInput",
        Error::InvalidTable(_) => "InvalidTable",
        Error::InvalidParameter(_) => "InvalidParameter",
        Error::ZeroCellInSupport { .. } => "ZeroCellInSupport",
        Error::InsufficientSupport { .. } => "InsufficientSupport",
        Error::DegenerateVariance { .. } => "DegenerateVariance",
        Error::InvalidDf(_) => "InvalidDf",
        Error::Domain(_) => "DomainError",
        Error::Parse { .. } => "ParseError",
        Error::Io(_) => "IoError",
        Error::Internal(_) => "InternalError",
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Internal(_) => EXIT_INTERNAL,
        e if e.is_degenerate() => EXIT_DEGENERATE,
        _ => EXIT_INPUT,
    }
}

fn report_error(stderr: &mut dyn Write, e: &Error, method: Option<Method>) {
    let d = Diagnostic { error: error_kind(e), method, message: e.to_string() };
    let _ = writeln!(stderr, "{}", serde_json::to_string(&d).expect("diagnostic serializes"));
}

fn emit(out: Option<&PathBuf>, body: &str, stdout: &mut dyn Write) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, body)?,
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match cli.command {
        Command::Test(args) => cmd_test(&args, stdout, stderr),
        Command::Simulate(args) => cmd_simulate(&args, stdout, stderr),
    }
}

pub fn cmd_test(args: &TestArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let methods = args.method.methods();
    let wants_gmi = methods.iter().any(|m| m.gmi().is_some());
    if wants_gmi && args.common.lambda == 1.0 {
        report_error(stderr, &Error::InvalidParameter(LAMBDA_ONE.into()), None);
        return EXIT_INPUT;
    }
    let counts = match read_counts_csv(&args.csv, args.header) {
        Ok(c) => c,
        Err(e) => {
            report_error(stderr, &e, None);
            return exit_code(&e);
        }
    };
    let options = match TestOptions::new(args.common.alpha) {
        Ok(o) => o.with_sparsity_threshold(args.sparsity_threshold),
        Err(e) => {
            report_error(stderr, &e, None);
            return exit_code(&e);
        }
    };
    let mut results: Vec<TestResult<f64>> = Vec::new();
    let mut status = EXIT_OK;
    for method in methods {
        let outcome = match method {
            Method::PearsonObserved => pearson_test(&counts, args.common.alpha, DfMode::Observed),
            Method::PearsonTheoretical => {
                let (rows, cols) = args.dims.unwrap_or((counts.rows(), counts.cols()));
                pearson_test(&counts, args.common.alpha, DfMode::Theoretical { rows, cols }).map(|mut r| {
                    if args.dims.is_none() {
                        r.warnings.push(format!(
                            "no --dims given; using the input matrix shape {rows}x{cols} as the nominal alphabet"
                        ));
                    }
                    r
                })
            }
            gmi_method => EscortParam::new(args.common.lambda)
                .and_then(|lam| gmi_test_with(&counts, lam, &options, gmi_method.gmi().expect("escort-MI method"))),
        };
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => {
                report_error(stderr, &e, Some(method));
                status = status.max(exit_code(&e));
            }
        }
    }
    let body = match args.common.format {
        Format::Json if args.method != MethodArg::All && results.len() == 1 => {
            serde_json::to_string_pretty(&results[0]).expect("result serializes") + "\n"
        }
        Format::Json => serde_json::to_string_pretty(&results).expect("results serialize") + "\n",
        Format::Tsv => results_tsv(&results),
    };
    if !results.is_empty() || status == EXIT_OK {
        if let Err(e) = emit(args.common.out.as_ref(), &body, stdout) {
            report_error(stderr, &e, None);
            return EXIT_INPUT;
        }
    }
    status
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| format!("{v}"))
}

pub fn results_tsv(results: &[TestResult<f64>]) -> String {
    let mut out =
        String::from("method\tstatistic\tp_value\treject\talpha\tlambda\tsigma2_hat\tdf\tn\ti_hat\tj_hat\twarnings\n");
    for r in results {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.method,
            r.statistic,
            r.p_value,
            r.reject,
            r.alpha,
            opt(r.lambda),
            opt(r.sigma2_hat),
            r.df.map_or_else(|| "NA".into(), |d| d.to_string()),
            r.n,
            r.i_hat,
            r.j_hat,
            r.warnings.join("; ")
        ));
    }
    out
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    if args.common.lambda == 1.0 {
        report_error(stderr, &Error::InvalidParameter(LAMBDA_ONE.into()), None);
        return EXIT_INPUT;
    }
    let one_minus_p = if args.one_minus_p.is_empty() { DEFAULT_ONE_MINUS_P.to_vec() } else { args.one_minus_p.clone() };
    let defaults = Table1Config::default();
    let config = Table1Config {
        tail_masses: one_minus_p.iter().map(|q| 1.0 - q).collect(),
        sizes: if args.sizes.is_empty() { defaults.sizes.clone() } else { args.sizes.clone() },
        replicates: args.replicates,
        base_seed: args.seed,
        lambda: args.common.lambda,
        alpha: args.common.alpha,
        dim: args.dims,
        hypotheses: match args.hypothesis {
            HypothesisArg::H0 => vec![Hypothesis::H0],
            HypothesisArg::Ha => vec![Hypothesis::Ha],
            HypothesisArg::Both => vec![Hypothesis::H0, Hypothesis::Ha],
        },
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => {
            report_error(stderr, &Error::Internal(e.to_string()), None);
            return EXIT_INTERNAL;
        }
    };
    let report = match pool.install(|| table1_report_with(&config)) {
        Ok(r) => r,
        Err(e) => {
            report_error(stderr, &e, None);
            return exit_code(&e);
        }
    };
    let elapsed: f64 = report.scenarios.iter().map(|s| s.elapsed).sum();
    let _ = writeln!(stderr, "simulated {} scenario(s) in {elapsed:.1}s", report.scenarios.len());
    for flag in report.scenarios.iter().flat_map(|s| &s.flags) {
        let _ = writeln!(stderr, "note: {flag}");
    }
    let body = match args.common.format {
        Format::Json => report.to_json(),
        Format::Tsv => report.to_tsv(),
    };
    if let Err(e) = emit(args.common.out.as_ref(), &body, stdout) {
        report_error(stderr, &e, None);
        return EXIT_INPUT;
    }
    EXIT_OK
}
