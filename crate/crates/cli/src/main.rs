use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use vvmf::catalog::{catalog, catalog_json};
use vvmf::golden::Scope;
use vvmf::numeric::{parse_rational, parse_rational_list, Precision};
use vvmf::report::{encode_csv, encode_json, encode_markdown};
use vvmf::rug::{Integer, Rational};
use vvmf::scan::{compute, scan, verify, ScanConfig, ScanRow, SCAN_KEEP};

const EXIT_MISMATCH: u8 = 1;
const EXIT_SOLVER_FAILURE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "vvmf", version, about = "Extremal character vectors for rank-2 and rank-3 modular categories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CatalogFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum RowFormat {
    Json,
    Csv,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Rank2,
    Rank3,
    All,
}

#[derive(clap::Args)]
struct Numerics {
    /// q-coefficients screened per component
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..=2000))]
    terms: u32,
    /// Working precision in bits
    #[arg(long, env = "VVMF_PREC_BITS", default_value_t = 256, value_parser = clap::value_parser!(u32).range(64..=8192))]
    prec_bits: u32,
    /// Denominator bound for reconstructed gauge ratios
    #[arg(long, default_value_t = 1_000_000_000_000_000_000)]
    max_denominator: u64,
    /// Worker threads (0 = available parallelism)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl Numerics {
    fn config(&self, keep: usize, dump_connection: bool) -> Result<ScanConfig, String> {
        let precision = Precision::new(self.prec_bits).map_err(|e| e.to_string())?;
        if self.max_denominator == 0 {
            return Err("--max-denominator must be positive".into());
        }
        Ok(ScanConfig { terms: self.terms as usize, precision, max_denominator: Integer::from(self.max_denominator), jobs: self.jobs, keep, dump_connection })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the built-in modular data
    Catalog {
        #[arg(long, value_enum, default_value = "text")]
        format: CatalogFormat,
    },
    /// Screen every extremal candidate up to a central charge
    Scan {
        /// Family label or "all"
        #[arg(long)]
        family: String,
        #[arg(long, value_parser = rational)]
        cmax: Rational,
        #[command(flatten)]
        numerics: Numerics,
        #[arg(long, value_enum, default_value = "json")]
        format: RowFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 2 if any candidate hits a solver failure
        #[arg(long)]
        strict: bool,
    },
    /// Run a single candidate and print its full expansion
    Compute {
        #[arg(long)]
        family: String,
        #[arg(long, value_parser = rational)]
        c: Rational,
        /// Minimal energies, comma separated
        #[arg(long, value_parser = rational_list)]
        h: RationalList,
        #[command(flatten)]
        numerics: Numerics,
        /// Include A, B, chi and the gauge ratios
        #[arg(long)]
        dump_connection: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: RowFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Recompute the reference tables and report every difference
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        scope: ScopeArg,
        #[command(flatten)]
        numerics: Numerics,
    },
}

#[derive(Clone)]
struct RationalList(Vec<Rational>);

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn rational_list(s: &str) -> Result<RationalList, String> {
    parse_rational_list(s).map(RationalList).map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Io(String),
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn render(rows: &[ScanRow], format: RowFormat) -> String {
    match format {
        RowFormat::Json => encode_json(rows),
        RowFormat::Csv => encode_csv(rows),
        RowFormat::Md => encode_markdown(rows),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn finish_rows(rows: &[ScanRow], format: RowFormat, out: Option<&PathBuf>, strict: bool, started: Instant) -> Result<u8, Failure> {
    emit(&render(rows, format), out)?;
    let failures = rows.iter().filter(|r| r.is_failure()).count();
    let accepted = rows.iter().filter(|r| r.is_accepted()).count();
    eprintln!("{} rows, {accepted} accepted, {failures} solver failures, {:.1}s", rows.len(), started.elapsed().as_secs_f64());
    Ok(if strict && failures > 0 { EXIT_SOLVER_FAILURE } else { 0 })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let started = Instant::now();
    match cli.command {
        Command::Catalog { format } => {
            let text = match format {
                CatalogFormat::Json => catalog_json() + "\n",
                CatalogFormat::Text => {
                    let mut s = String::from("label            rank  c0     twists\n");
                    for d in catalog() {
                        let twists: Vec<String> = d.twists.iter().map(|t| t.to_string()).collect();
                        s.push_str(&format!("{:<16} {:<5} {:<6} {}\n", d.label, d.rank, d.base_charge.to_string(), twists.join(", ")));
                    }
                    s
                }
            };
            emit(&text, None)?;
            Ok(0)
        }
        Command::Scan { family, cmax, numerics, format, out, strict } => {
            let cfg = numerics.config(SCAN_KEEP, false).map_err(usage)?;
            let rows = scan(&family, &cmax, &cfg).map_err(usage)?;
            finish_rows(&rows, format, out.as_ref(), strict, started)
        }
        Command::Compute { family, c, h, numerics, dump_connection, format, out, strict } => {
            let cfg = numerics.config(numerics.terms as usize, dump_connection).map_err(usage)?;
            let rows = compute(&family, &c, &h.0, &cfg).map_err(usage)?;
            finish_rows(&rows, format, out.as_ref(), strict, started)
        }
        Command::Verify { scope, numerics } => {
            let cfg = numerics.config(SCAN_KEEP, false).map_err(usage)?;
            let scope = match scope {
                ScopeArg::Rank2 => Scope::Rank2,
                ScopeArg::Rank3 => Scope::Rank3,
                ScopeArg::All => Scope::All,
            };
            let report = verify(scope, &cfg).map_err(usage)?;
            emit(&report.render(), None)?;
            eprintln!("{} candidates recomputed in {:.1}s", report.rows.len(), started.elapsed().as_secs_f64());
            Ok(if report.passed() { 0 } else { EXIT_MISMATCH })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
