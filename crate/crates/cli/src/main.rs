//! Command-line interface: exact evaluation of single sums, verification
//! suites with pass/fail exit codes, and measurement sweeps to CSV/JSON.
//!
//! Exit codes: 0 = all checks passed, 1 = a verification failed,
//! 2 = usage or configuration error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use padic_expsums_cli::config::{Format, SweepConfig};
use padic_expsums_cli::output::{write_csv, write_json_lines, ResultRow};
use padic_expsums_cli::suites::{run_suite, SuiteError};
use padic_expsums_cli::sweeps::run_sweep;
use padic_expsums_core::characters::make_char;
use padic_expsums_core::expsums::{kloosterman_brute, kloosterman_closed_parts, ramanujan_brute, ramanujan_closed, KloostermanClosedForm};
use padic_expsums_core::modarith::PrimePowerModulus;
use padic_expsums_core::padic::SqrtBranch;
use padic_expsums_core::papersums::{c_def, c_zero_closed, g_closed, g_kloosterman, CSumParams, ClosedConvention, GSumParams};

#[derive(Parser)]
#[command(name = "padic-expsums", version, about = "Exact exponential sums modulo odd prime powers")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalFlags {
    /// Seed for every randomized sampling decision.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Budget in summand evaluations; exceeding it is a config error.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Absolute tolerance override for comparison checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Output format for rows.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads (any count gives byte-identical output).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Flat key-value config file (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write rows to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Restrict grid primes (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    p: Vec<u64>,
    /// Restrict grid exponents n (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    n: Vec<u32>,
    /// Restrict grid exponents r (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    r: Vec<u32>,
    /// Restrict auxiliary moduli c (comma separated).
    #[arg(long = "c-list", global = true, value_delimiter = ',')]
    c_list: Vec<u64>,
    /// Random sample count for sampled grids.
    #[arg(long, global = true)]
    samples: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single sum and print its value (exact phase form when available).
    Eval {
        #[command(subcommand)]
        kind: EvalKind,
    },
    /// Run a verification suite; exit 0 iff every grid point passes.
    Verify {
        /// postnikov | kloosterman | statphase | gsum | czero | csupport | reciprocity | all
        suite: String,
    },
    /// Run a measurement sweep and emit its table.
    Sweep {
        /// cancellation | sdt-constant | gauss-magnitude
        measurement: String,
    },
}

#[derive(Subcommand)]
enum EvalKind {
    /// Kloosterman sum S(a, b; p^n), brute force and closed form.
    Kloosterman {
        #[arg(long)]
        a: i64,
        #[arg(long)]
        b: i64,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
    },
    /// Ramanujan sum S(0, u; c) via the divisor-sum identity.
    Ramanujan {
        #[arg(long)]
        u: i64,
        #[arg(long)]
        c: u64,
    },
    /// 𝒞(0, ℓ₁, ℓ₂): the exact diagonal evaluation.
    Czero {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        l1: i64,
        #[arg(long)]
        l2: i64,
        #[arg(long, default_value_t = 1)]
        k: u64,
    },
    /// G(m, ℓ, c) via closed-form Kloosterman values (and the closed form
    /// where it applies).
    Gsum {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = 1)]
        c: u64,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        l: i64,
        #[arg(long, default_value_t = 1)]
        k: u64,
    },
    /// 𝒞(m̃, ℓ₁, ℓ₂) by the literal u-sum.
    Csum {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = 1)]
        c: u64,
        #[arg(long, default_value_t = 1)]
        d: u64,
        #[arg(long)]
        mt: i64,
        #[arg(long)]
        l1: i64,
        #[arg(long)]
        l2: i64,
        #[arg(long, default_value_t = 1)]
        k: u64,
    },
    /// χ(u) for the primitive character of index k mod p^n, as an exact phase.
    Char {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        u: i64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(failed) => {
            if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn build_config(flags: &GlobalFlags, verify: bool) -> Result<SweepConfig, String> {
    let mut cfg = if verify {
        SweepConfig::verify_defaults()
    } else {
        SweepConfig::sweep_defaults()
    };
    if let Some(path) = &flags.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(budget) = flags.budget {
        cfg.budget = budget;
    }
    if flags.tolerance.is_some() {
        cfg.tolerance = flags.tolerance;
    }
    if let Some(workers) = flags.workers {
        cfg.workers = workers.max(1);
    }
    if let Some(format) = &flags.format {
        cfg.format = format.parse()?;
    }
    if let Some(samples) = flags.samples {
        cfg.sample_policy.random_samples = samples;
    }
    cfg.primes = flags.p.clone();
    cfg.n_values = flags.n.clone();
    cfg.r_values = flags.r.clone();
    cfg.c_values = flags.c_list.clone();
    Ok(cfg)
}

fn emit_rows(rows: &[ResultRow], cfg: &SweepConfig, out: &Option<PathBuf>) -> Result<(), String> {
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => write_csv(&mut buf, rows),
        Format::Json => write_json_lines(&mut buf, rows),
    }
    .map_err(|e| e.to_string())?;
    match out {
        Some(path) => std::fs::write(path, buf).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(&buf).map_err(|e| e.to_string()),
    }
}

/// Returns Ok(true) when a verification produced failures (exit 1).
fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Eval { kind } => {
            run_eval(kind).map_err(|e| e.to_string())?;
            Ok(false)
        }
        Command::Verify { suite } => {
            let cfg = build_config(&cli.global, true)?;
            let report = run_suite(&suite, &cfg).map_err(|e| match e {
                SuiteError::UnknownSuite(_) => e.to_string(),
                SuiteError::Core(ref c) => format!("{c}"),
            })?;
            emit_rows(&report.rows, &cfg, &cli.global.out)?;
            println!("verify {suite}: {}", report.summary);
            Ok(report.summary.failed > 0)
        }
        Command::Sweep { measurement } => {
            let cfg = build_config(&cli.global, false)?;
            let rows = run_sweep(&measurement, &cfg).map_err(|e| e.to_string())?;
            emit_rows(&rows, &cfg, &cli.global.out)?;
            println!("sweep {measurement}: {} rows", rows.len());
            Ok(false)
        }
    }
}

fn run_eval(kind: EvalKind) -> Result<(), padic_expsums_core::Error> {
    match kind {
        EvalKind::Kloosterman { a, b, p, n } => {
            let q = PrimePowerModulus::new(p, n)?;
            let brute = kloosterman_brute(a, b, q.value());
            println!(
                "S({a}, {b}; {}^{}) = {:.12} {} {:.12}i   ({} terms, brute force)",
                p,
                n,
                brute.value.re,
                if brute.value.im < 0.0 { "-" } else { "+" },
                brute.value.im.abs(),
                brute.term_count
            );
            if n >= 2 && a % p as i64 != 0 && b % p as i64 != 0 {
                let branch = SqrtBranch::canonical(p);
                match kloosterman_closed_parts(a, b, &q, &branch)? {
                    KloostermanClosedForm::Zero => println!("closed form: 0 (ab is not a square unit)"),
                    form @ KloostermanClosedForm::Terms { .. } => {
                        if let KloostermanClosedForm::Terms { n, p, ref terms } = form {
                            println!(
                                "closed form: {p}^({n}/2) * [ {} * {} + {} * {} ] = {:.12}",
                                terms[0].0, terms[0].1, terms[1].0, terms[1].1,
                                form.to_complex().re
                            );
                        }
                    }
                }
            }
        }
        EvalKind::Ramanujan { u, c } => {
            if c == 0 {
                return Err(padic_expsums_core::Error::InvalidArgument("c must be ≥ 1".into()));
            }
            println!("S(0, {u}; {c}) = {}", ramanujan_closed(u, c));
            let brute = ramanujan_brute(u, c);
            println!("brute force: {:.12} ({} terms)", brute.value.re, brute.term_count);
        }
        EvalKind::Czero { p, n, r, l1, l2, k } => {
            let chi = make_char(p, n, k)?;
            let params = CSumParams::new(&chi, r, 1, 1, 0, l1, l2)?;
            println!("{}", c_zero_closed(&params)?);
        }
        EvalKind::Gsum { p, n, r, c, m, l, k } => {
            let chi = make_char(p, n, k)?;
            let params = GSumParams::new(&chi, r, c, m, l)?;
            let v = g_kloosterman(&params)?;
            println!("G({m}, {l}, {c}) mod {p}^{n} (r = {r}) = {:.12} + {:.12}i", v.re, v.im);
            let conv = ClosedConvention::default();
            match g_closed(&params, &conv.branch(p), conv.alpha_lift(&chi)) {
                Ok(w) => println!("closed form: {:.12} + {:.12}i", w.re, w.im),
                Err(e) => println!("closed form not applicable: {e}"),
            }
        }
        EvalKind::Csum { p, n, r, c, d, mt, l1, l2, k } => {
            let chi = make_char(p, n, k)?;
            let params = CSumParams::new(&chi, r, c, d, mt, l1, l2)?;
            let v = c_def(&params)?;
            println!("C({mt}, {l1}, {l2}) mod {p}^{n} (r = {r}, c = {c}, d = {d}) = {:.12} + {:.12}i", v.re, v.im);
        }
        EvalKind::Char { p, n, k, u } => {
            let chi = make_char(p, n, k)?;
            match chi.eval(u) {
                Some(ph) => println!("χ_{{{k}}}({u}) mod {p}^{n} = {ph}"),
                None => println!("χ_{{{k}}}({u}) mod {p}^{n} = 0"),
            }
        }
    }
    Ok(())
}
