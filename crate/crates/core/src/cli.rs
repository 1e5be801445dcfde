//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification violations (reports are still
//! written), 2 invalid input or flags, 3 I/O failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::basis::{Basis, BasisBlock, ExpansionDocument, Permutation};
use crate::error::Error;
use crate::rational::Rational;
use crate::stepfn::StepFunction;
use crate::verify::suites::{run_suite, Suite, SuiteConfig};
use crate::verify::VerifyReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "nonneg-basis",
    version,
    about = "Non-negative Schauder basis of L1(0,∞): blocks, expansions and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect basis blocks.
    Basis {
        #[command(subcommand)]
        command: BasisCommand,
    },
    /// Expand a step function (JSON) in the basis.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Keep only the first K Schauder coefficients.
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rebuild a step function from an expansion.
    Synthesize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Partial-sum norm ratios ‖S_K f‖₁/‖f‖₁ as CSV.
    PartialSums {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run seeded verification suites; one report line per suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum BasisCommand {
    Show {
        #[arg(long)]
        index: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(required = true, value_parser = parse_suite)]
    suites: Vec<Suite>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, or `auto`.
    #[arg(long, env = "NONNEG_BASIS_THREADS", value_parser = parse_threads)]
    threads: Option<Threads>,
    #[arg(long)]
    imax: Option<usize>,
    #[arg(long, value_parser = parse_exponent)]
    p: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Include the worst trial's witness even without violations.
    #[arg(long)]
    witness: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Threads {
    Auto,
    Fixed(usize),
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
        _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

fn parse_exponent(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if p.is_finite() && p >= 1.0 => Ok(p),
        _ => Err(format!("expected a real p ≥ 1, got `{s}`")),
    }
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn read_step_function(path: &Path) -> Result<StepFunction, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn read_expansion(path: &Path) -> Result<ExpansionDocument, Failure> {
    ExpansionDocument::from_json(&read(path)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            match &f {
                Failure::Invalid(msg) | Failure::Io(msg) => eprintln!("error: {msg}"),
            }
            f.code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Basis {
            command: BasisCommand::Show { index, format },
        } => {
            let i = usize::try_from(index)
                .ok()
                .filter(|&i| i >= 1)
                .ok_or(Failure::Invalid(Error::ZeroIndex.to_string()))?;
            let block = Basis::identity().build_block(i);
            let text = match format {
                Format::Json => block_json(&block) + "\n",
                Format::Csv => block_csv(&block),
            };
            emit(None, &text)?;
        }
        Command::Analyze {
            input,
            kmax,
            output,
        } => {
            let f = read_step_function(&input)?;
            let basis = Basis::identity();
            let mut expansion = basis.analyze(&f);
            if let Some(k) = kmax {
                expansion = expansion.truncated(k);
            }
            let doc = ExpansionDocument {
                permutation: Permutation::Identity,
                expansion,
            };
            emit(output.as_deref(), &(doc.to_json() + "\n"))?;
        }
        Command::Synthesize { input, output } => {
            let doc = read_expansion(&input)?;
            let basis = Basis::with_permutation(doc.permutation)
                .map_err(|v| Failure::Invalid(format!("permutation is not admissible: {v:?}")))?;
            let f = basis.synthesize(&doc.expansion).trimmed();
            let text = serde_json::to_string_pretty(&f).expect("step function serialises");
            emit(output.as_deref(), &(text + "\n"))?;
        }
        Command::PartialSums {
            input,
            kmax,
            output,
        } => {
            let f = read_step_function(&input)?;
            let profile = Basis::identity().basis_constant_profile(&f, kmax)?;
            let mut csv = String::from("k,ratio,ratio_float\n");
            for (k, ratio) in profile.iter().enumerate() {
                writeln!(csv, "{},{},{}", k + 1, ratio, ratio.to_f64()).unwrap();
            }
            emit(output.as_deref(), &csv)?;
        }
        Command::Verify(args) => return verify(args),
    }
    Ok(EXIT_OK)
}

fn verify(args: VerifyArgs) -> Result<i32, Failure> {
    let threads = match args.threads.unwrap_or(Threads::Auto) {
        Threads::Auto => 0,
        Threads::Fixed(n) => n,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))?;
    let config = SuiteConfig {
        trials: args.trials,
        seed: args.seed,
        imax: args.imax,
        p: args.p,
    };
    let mut suites = args.suites.clone();
    suites.sort_by_key(|s| s.name());
    suites.dedup();
    let reports: Vec<VerifyReport> =
        pool.install(|| suites.iter().map(|&s| run_suite(s, &config)).collect());

    let mut text = String::new();
    if args.format == Format::Csv {
        text.push_str("check,trials,violations,worst_margin\n");
    }
    for r in &reports {
        match args.format {
            Format::Json => {
                text.push_str(&r.to_json(args.witness).to_string());
                text.push('\n');
            }
            Format::Csv => {
                let margin = r.worst_margin.as_ref().map_or(String::new(), |m| match m {
                    crate::verify::Margin::Exact(q) => q.to_string(),
                    crate::verify::Margin::Float(x) => format!("{x:e}"),
                });
                writeln!(text, "{},{},{},{}", r.check, r.trials, r.violations, margin).unwrap();
            }
        }
    }
    emit(args.output.as_deref(), &text)?;
    Ok(if reports.iter().all(VerifyReport::passed) {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

fn block_json(block: &BasisBlock) -> String {
    let value = serde_json::json!({
        "index": block.index,
        "pi": block.pi,
        "haar": block.haar,
        "support_included": block.support_included(),
        "h": block.h,
        "u": block.u,
        "x": block.x,
        "y": block.y,
    });
    serde_json::to_string_pretty(&value).expect("block serialises")
}

/// One row per function and grid cell: `function,left,right,value`.
fn block_csv(block: &BasisBlock) -> String {
    let mut out = format!(
        "# index={} pi={} haar=({},{},{})\nfunction,left,right,value\n",
        block.index,
        block.pi,
        block.haar.j(),
        block.haar.n(),
        block.haar.i()
    );
    for (name, f) in [
        ("h", &block.h),
        ("u", &block.u),
        ("x", &block.x),
        ("y", &block.y),
    ] {
        let w = Rational::dyadic(f.resolution());
        for (t, v) in f.values().iter().enumerate() {
            let left = &w * Rational::from_int(t as i64);
            let right = &left + &w;
            writeln!(out, "{name},{left},{right},{v}").unwrap();
        }
    }
    out
}
