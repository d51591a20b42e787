//! The `ecpp` command: `prove`, `verify`, `classpoly` and `bench`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ecpp_arith::is_probable_prime;
use ecpp_cert::{parse, serialize, verify_chain};
use ecpp_core::classpoly::{cache_path, format_cache, hilbert_class_poly_cached};
use ecpp_core::prover::{Phase, PhaseStats, Prover, ProverConfig, ProverError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

/// Environment variable naming the class polynomial cache directory.
pub const HD_CACHE_ENV: &str = "ECPP_HD_CACHE";

#[derive(Parser, Debug)]
#[command(name = "ecpp", version, about = "Elliptic curve primality proving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prove N prime and write a certificate.
    Prove {
        /// Decimal, or of the form a^b+c / a^b-c.
        n: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the randomized root finding.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        opts: ProverOpts,
    },
    /// Check a certificate.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Compute a Hilbert class polynomial and store it in cache format.
    Classpoly {
        d: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prove random primes and report per-phase statistics as TSV.
    Bench {
        #[arg(long)]
        digits: u32,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Seed for the random primes and the prover.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        opts: ProverOpts,
    },
}

#[derive(Args, Debug)]
struct ProverOpts {
    #[arg(long)]
    dmax: Option<u64>,
    #[arg(long)]
    hmax: Option<u64>,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    smooth_bound: Option<u64>,
    #[arg(long)]
    delta: Option<u32>,
    #[arg(long)]
    subset_size: Option<usize>,
    #[arg(long)]
    strict_2n: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl ProverOpts {
    fn config(&self, seed: u64) -> ProverConfig {
        let d = ProverConfig::default();
        ProverConfig {
            d_max: self.dmax.unwrap_or(d.d_max),
            h_max: self.hmax.unwrap_or(d.h_max),
            pool_size: self.pool_size.unwrap_or(d.pool_size),
            smooth_bound: self.smooth_bound.unwrap_or(d.smooth_bound),
            delta: self.delta.unwrap_or(d.delta),
            max_subset_size: self.subset_size.unwrap_or(d.max_subset_size),
            rng_seed: seed,
            strict_2n: self.strict_2n,
            threads: self.threads.max(1),
            hd_cache: hd_cache_dir(),
            ..d
        }
    }
}

fn hd_cache_dir() -> Option<PathBuf> {
    std::env::var_os(HD_CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Parses `N` in decimal or as `a^b`, `a^b+c`, `a^b-c`.
pub fn parse_number(s: &str) -> Result<BigUint, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let dec = |t: &str| -> Result<BigUint, String> {
        if t.is_empty() || !t.bytes().all(|c| c.is_ascii_digit()) {
            return Err(format!("not a decimal integer: {t:?}"));
        }
        t.parse::<BigUint>().map_err(|e| e.to_string())
    };
    let Some((base, rest)) = s.split_once('^') else {
        return dec(&s);
    };
    let (exp, adj) = match rest.find(['+', '-']) {
        Some(i) => (&rest[..i], Some((&rest[i..i + 1], &rest[i + 1..]))),
        None => (rest, None),
    };
    let exp: u32 = exp.parse().map_err(|_| format!("bad exponent: {exp:?}"))?;
    let mut n = dec(base)?.pow(exp);
    match adj {
        Some(("+", c)) => n += dec(c)?,
        Some((_, c)) => {
            let c = dec(c)?;
            if c > n {
                return Err("expression is negative".into());
            }
            n -= c;
        }
        None => {}
    }
    Ok(n)
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. Output goes to the given writers.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let res = match cli.command {
        Command::Prove { n, out: path, seed, opts } => cmd_prove(&n, path.as_deref(), &opts.config(seed), out, err),
        Command::Verify { input } => cmd_verify(&input, out, err),
        Command::Classpoly { d, out: path } => cmd_classpoly(d, path, out),
        Command::Bench { digits, count, seed, opts } => cmd_bench(digits, count, seed, &opts.config(seed), out),
    };
    match res {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn cmd_prove(
    n: &str,
    path: Option<&Path>,
    config: &ProverConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    let n = parse_number(n)?;
    let mut prover = Prover::new(config.clone()).map_err(|e| e.to_string())?;
    match prover.prove(&n) {
        Ok(cert) => {
            let text = serialize(&cert);
            match path {
                Some(p) => fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display()))?,
                None => out.write_all(text.as_bytes()).map_err(|e| e.to_string())?,
            }
            let _ = writeln!(err, "prime: {} step(s)", cert.steps.len());
            Ok(EXIT_OK)
        }
        Err(e @ ProverError::Composite { .. }) => {
            let _ = writeln!(err, "composite: {e}");
            Ok(EXIT_NEGATIVE)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_verify(input: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let text = fs::read_to_string(input).map_err(|e| format!("{}: {e}", input.display()))?;
    let cert = parse(&text).map_err(|e| format!("{}: {e}", input.display()))?;
    match verify_chain(&cert) {
        Ok(()) => {
            let _ = writeln!(out, "valid: {} is prime", cert.number());
            Ok(EXIT_OK)
        }
        Err(e) => {
            let _ = writeln!(out, "invalid: {e}");
            let _ = writeln!(err, "certificate rejected");
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn cmd_classpoly(d: u64, path: Option<PathBuf>, out: &mut dyn Write) -> Result<i32, String> {
    let poly = hilbert_class_poly_cached(d, hd_cache_dir().as_deref()).map_err(|e| e.to_string())?;
    let path = path.unwrap_or_else(|| cache_path(&hd_cache_dir().unwrap_or_else(|| PathBuf::from(".")), d));
    fs::write(&path, format_cache(&poly)).map_err(|e| format!("{}: {e}", path.display()))?;
    let _ = writeln!(out, "H_{d}: degree {} written to {}", poly.degree(), path.display());
    Ok(EXIT_OK)
}

/// A random probable prime with exactly `digits` decimal digits.
pub fn random_prime(digits: u32, rng: &mut ChaCha8Rng) -> BigUint {
    let lo = BigUint::from(10u32).pow(digits.saturating_sub(1));
    let hi = BigUint::from(10u32).pow(digits);
    loop {
        let mut n = rng.gen_biguint_range(&lo, &hi);
        if n.is_zero() {
            continue;
        }
        n |= BigUint::one();
        while n < hi {
            if is_probable_prime(&n, 20) {
                return n;
            }
            n += 2u32;
        }
    }
}

/// Rows of the benchmark table, in output order.
pub const BENCH_ROWS: [&str; 14] = [
    "SQRT", "CORN", "EXTRACT", "PRP", "HD", "jmod", "1st", "2nd", "total", "check", "nsteps", "certif", "D", "h",
];

/// Per-prime samples for each row of [`BENCH_ROWS`]. Times are in
/// seconds, certificate sizes in kbytes.
pub fn bench_samples(digits: u32, count: usize, seed: u64, config: &ProverConfig) -> Result<Vec<Vec<f64>>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prover = Prover::new(config.clone()).map_err(|e| e.to_string())?;
    let mut rows = vec![Vec::with_capacity(count); BENCH_ROWS.len()];
    for _ in 0..count {
        let n = random_prime(digits, &mut rng);
        prover.reset_stats();
        let cert = prover.prove(&n).map_err(|e| format!("{n}: {e}"))?;
        let t = Instant::now();
        verify_chain(&cert).map_err(|e| format!("{n}: own certificate rejected: {e}"))?;
        let check = t.elapsed().as_secs_f64();
        let s: &PhaseStats = prover.stats();
        let mut vals: Vec<f64> = Phase::ALL.iter().map(|&p| s.time(p).as_secs_f64()).collect();
        vals.extend([
            s.total.as_secs_f64(),
            check,
            s.steps as f64,
            s.cert_bytes as f64 / 1000.0,
            s.max_d as f64,
            s.max_h as f64,
        ]);
        for (row, v) in rows.iter_mut().zip(vals) {
            row.push(v);
        }
    }
    Ok(rows)
}

/// `(min, max, avg, std)` with the population standard deviation.
pub fn summarize(xs: &[f64]) -> (f64, f64, f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - avg) * (x - avg)).sum::<f64>() / xs.len() as f64;
    (min, max, avg, var.sqrt())
}

fn cmd_bench(digits: u32, count: usize, seed: u64, config: &ProverConfig, out: &mut dyn Write) -> Result<i32, String> {
    if digits < 2 {
        return Err("--digits must be at least 2".into());
    }
    let rows = bench_samples(digits, count, seed, config)?;
    let mut text = String::from("phase\tmin\tmax\tavg\tstd\n");
    for (name, xs) in BENCH_ROWS.iter().zip(&rows) {
        let (min, max, avg, std) = summarize(xs);
        text.push_str(&format!("{name}\t{min:.4}\t{max:.4}\t{avg:.4}\t{std:.4}\n"));
    }
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}
