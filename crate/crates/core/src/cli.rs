//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 a check ran
//! and failed (identity z above threshold, invalid partition, oracle failure).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::json;

use crate::dynamics::RingCounts;
use crate::ensemble::{sample_goe, Ensemble, VarianceProfile};
use crate::error::Error;
use crate::experiments::{self, write_atomic, ExperimentConfig};
use crate::identities::{self, IdentityReport};
use crate::matrix::SymmetricMatrix;
use crate::oracle;
use crate::parallel::Parallelism;
use crate::partition::{entries_partition, AdmissiblePartition};
use crate::paths::{path_spectrum_sweep, PathGrid};
use crate::rng::SeedStream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Version of the CSV/JSON output layouts.
pub const OUTPUT_SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "eigenchaos", version, about = "Eigenvector decorrelation experiments and identity checks")]
pub struct Cli {
    /// Worker threads (falls back to EIGENCHAOS_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment config and write its CSV and metadata sidecar.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo check of one variance identity.
    CheckIdentity(IdentityArgs),
    /// Validate a partition file.
    ValidatePartition {
        #[arg(long)]
        file: PathBuf,
    },
    /// Spectral statistics along the segment between two matrices.
    SweepPath(SweepArgs),
    /// Finite-difference, reconstruction and closed-form checks.
    OracleSuite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the build identity.
    Version,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IdentityKind {
    /// OU variance identity.
    Ou,
    /// Block-resampling variance identity.
    Pdbr,
    /// Ordering and bounds of the T_k ladder.
    Ladder,
    /// Block-difference covariance against its closed form.
    PdbouCov,
    /// T_+ / T_- dominance.
    TPlusMinus,
    /// Monotonicity of the OU overlap.
    Overlap,
}

#[derive(Debug, clap::Args)]
pub struct IdentityArgs {
    pub which: IdentityKind,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub alpha: usize,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Time for t-plus-minus.
    #[arg(long, default_value_t = 0.4)]
    pub t: f64,
    /// K_B for pdbou-cov.
    #[arg(long, default_value_t = 0)]
    pub k_b: u32,
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Partition file; defaults to one block per entry.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Horizon and node count of the OU time grid.
    #[arg(long, default_value_t = 6.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 17)]
    pub nodes: usize,
    /// Pass threshold on z (default 3, or 4 for pdbou-cov).
    #[arg(long)]
    pub z_max: Option<f64>,
    /// JSON report path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Matrix text files; when omitted, a GOE draw and a copy with one
    /// entry block resampled are used.
    #[arg(long, requires = "y")]
    pub x: Option<PathBuf>,
    #[arg(long, requires = "x")]
    pub y: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub alpha: usize,
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Counts written as integers or in exponent form (`1e6`).
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a count: {s:?}"))?;
    if f >= 0.0 && f.fract() == 0.0 && f < 2f64.powi(63) {
        Ok(f as u64)
    } else {
        Err(format!("not a nonnegative integer: {s:?}"))
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::NotSymmetric { .. }
        | Error::NonFinite { .. }
        | Error::InvalidProfile(_)
        | Error::InfeasibleTiling { .. }
        | Error::Parse { .. }
        | Error::TimeCap { .. }
        | Error::EnumerationTooLarge { .. }
        | Error::ConfigNotFound(_)
        | Error::Json(_) => EXIT_INVALID,
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => EXIT_INVALID,
        Error::InvalidPartition(_) => EXIT_CHECK_FAILED,
        Error::NoConvergence { .. }
        | Error::NearDegenerate { .. }
        | Error::DegenerateAlongPath { .. }
        | Error::DegenerateBudget { .. }
        | Error::Io(_) => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing the human-readable summary to `out` and errors to `err`.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INVALID;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let par = Parallelism::resolve(cli.threads);
    match execute(cli.command, &par, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: Command, par: &Parallelism, out: &mut (dyn Write + Send)) -> crate::Result<i32> {
    match cmd {
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let res = experiments::run_with(&cfg, par)?;
            write!(out, "{}", experiments::summary(&res))?;
            match output.or_else(|| cfg.output.clone()) {
                Some(path) => {
                    let meta = res.write(&path)?;
                    writeln!(out, "wrote {} and {}", path.display(), meta.display())?;
                }
                None => write!(out, "{}", res.to_csv())?,
            }
            Ok(EXIT_OK)
        }
        Command::CheckIdentity(args) => par.install(|| check_identity(&args, out))?,
        Command::ValidatePartition { file } => {
            let text = std::fs::read_to_string(&file)?;
            let p = AdmissiblePartition::from_text(&text)?;
            writeln!(out, "valid partition: n = {}, m = {}, nu = {}", p.dim(), p.m(), p.nu())?;
            Ok(EXIT_OK)
        }
        Command::SweepPath(args) => sweep(&args, out),
        Command::OracleSuite { seed } => {
            let start = std::time::Instant::now();
            let report = par.install(|| oracle::oracle_suite(seed))??;
            write!(out, "{report}")?;
            writeln!(out, "oracle suite {} in {:.1} s", if report.passed() { "passed" } else { "FAILED" }, start.elapsed().as_secs_f64())?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Version => {
            writeln!(out, "{}", crate::version_string())?;
            writeln!(out, "output schema {OUTPUT_SCHEMA}")?;
            Ok(EXIT_OK)
        }
    }
}

fn load_partition(args: &IdentityArgs) -> crate::Result<AdmissiblePartition> {
    match &args.partition {
        Some(path) => {
            let p = AdmissiblePartition::from_text(&std::fs::read_to_string(path)?)?;
            if p.dim() != args.n {
                return Err(Error::DimensionMismatch { expected: args.n, got: p.dim() });
            }
            Ok(p)
        }
        None => entries_partition(args.n),
    }
}

fn emit_report(report: &IdentityReport, z_max: f64, extra_ok: bool, output: Option<&Path>, out: &mut (dyn Write + Send)) -> crate::Result<i32> {
    let passed = report.passes(z_max) && extra_ok;
    writeln!(
        out,
        "{}: lhs = {:.6e} ± {:.2e}, rhs = {:.6e} ± {:.2e}, z = {:.3} (max {z_max}) -> {}",
        report.name,
        report.lhs.mean,
        report.lhs.std_error,
        report.rhs.mean,
        report.rhs.std_error,
        report.z,
        if passed { "pass" } else { "FAIL" }
    )?;
    if let Some(path) = output {
        write_atomic(path, serde_json::to_string_pretty(&report.to_json())?.as_bytes())?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> crate::Result<()> {
    if let Some(path) = path {
        write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())?;
    }
    Ok(())
}

fn check_identity(a: &IdentityArgs, out: &mut (dyn Write + Send)) -> crate::Result<i32> {
    let z_max = a.z_max.unwrap_or(if a.which == IdentityKind::PdbouCov { 4.0 } else { 3.0 });
    let output = a.output.as_deref();
    match a.which {
        IdentityKind::Ou => {
            let grid = identities::ou_time_grid(a.tau, a.t_max, a.nodes)?;
            let r = identities::ou_variance_identity_check(a.n, a.alpha, a.tau, &grid, a.trials, a.seed)?;
            emit_report(&r, z_max, true, output, out)
        }
        IdentityKind::Pdbr => {
            let p = load_partition(a)?;
            let r = identities::pdbr_variance_identity_check(&Ensemble::goe(a.n), &p, a.alpha, a.trials, a.seed)?;
            emit_report(&r, z_max, true, output, out)
        }
        IdentityKind::Ladder => {
            let p = load_partition(a)?;
            let l = identities::t_k_ladder(&Ensemble::goe(a.n), &p, a.alpha, a.trials, a.seed)?;
            for (k, t) in l.t.iter().enumerate() {
                writeln!(out, "T_{k} = {:.6e} ± {:.2e}", t.mean, t.std_error)?;
            }
            for v in &l.violations {
                writeln!(out, "violation: {v}")?;
            }
            writeln!(out, "ladder {}", if l.holds() { "holds" } else { "FAILED" })?;
            write_json(output, &serde_json::to_value(&l)?)?;
            Ok(if l.holds() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        IdentityKind::PdbouCov => {
            let p = load_partition(a)?;
            let profile = VarianceProfile::goe(a.n)?;
            let mut rng = SeedStream::new(a.seed, u64::MAX).rng();
            let mut counts: Vec<u32> = (0..p.m()).map(|_| rng.random_range(0..3)).collect();
            let (i, j) = if a.n > 1 { (0, 1) } else { (0, 0) };
            let block = p.block_of(i, j);
            counts[block] = a.k_b;
            let k = RingCounts::new(&p, counts)?;
            let r = identities::pdbou_diff_cov_mc(&p, &profile, a.tau, &k, block, (i, j), a.trials, a.seed)?;
            emit_report(&r, z_max, true, output, out)
        }
        IdentityKind::TPlusMinus => {
            let p = load_partition(a)?;
            let r = identities::t_plus_minus(&p, a.alpha, a.eta, a.tau, a.t, a.trials, 3, a.trials.min(20_000), a.seed)?;
            let probes_ok = r.probes.iter().all(|p| p.nonnegative());
            writeln!(
                out,
                "T_+ = {:.6e} ± {:.2e}, T_- = {:.6e} ± {:.2e}, t = {} (cap {:.4})",
                r.t_plus.mean, r.t_plus.std_error, r.t_minus.mean, r.t_minus.std_error, r.t, r.cap
            )?;
            let ok = match r.dominance {
                Some(d) => {
                    writeln!(out, "dominance ½T_+ >= T_-: {}", if d { "holds" } else { "FAILED" })?;
                    d
                }
                None => {
                    writeln!(out, "t exceeds the cap; dominance not asserted")?;
                    true
                }
            };
            writeln!(out, "derivative products non-negative: {}", if probes_ok { "yes" } else { "NO" })?;
            write_json(output, &serde_json::to_value(&r)?)?;
            Ok(if ok && probes_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        IdentityKind::Overlap => {
            let grid: Vec<f64> = (0..a.nodes).map(|k| a.t_max * k as f64 / (a.nodes - 1).max(1) as f64).collect();
            let c = identities::ou_overlap_monotonicity(a.n, a.alpha, a.tau, &grid, a.trials, a.seed)?;
            for (t, m) in c.times.iter().zip(&c.overlap) {
                writeln!(out, "t = {t:.4}: {:.6} ± {:.2e}", m.mean, m.std_error)?;
            }
            for v in &c.violations {
                writeln!(out, "violation: {v}")?;
            }
            write_json(output, &json!({ "times": c.times, "overlap": c.overlap, "violations": c.violations, "seed": a.seed }))?;
            Ok(if c.monotone() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn sweep(a: &SweepArgs, out: &mut (dyn Write + Send)) -> crate::Result<i32> {
    let (x, y) = match (&a.x, &a.y) {
        (Some(xp), Some(yp)) => (SymmetricMatrix::from_text(&std::fs::read_to_string(xp)?)?, SymmetricMatrix::from_text(&std::fs::read_to_string(yp)?)?),
        _ => {
            let mut rng = SeedStream::new(a.seed, 0).rng();
            let x = sample_goe(a.n, &mut rng);
            let p = entries_partition(a.n)?;
            let b = rng.random_range(0..p.m());
            let fresh = sample_goe(a.n, &mut rng);
            let mut y = x.clone();
            for &(i, j) in p.block(b).upper() {
                y.set(i, j, fresh.get(i, j));
            }
            (x, y)
        }
    };
    let grid = PathGrid::uniform(a.grid)?;
    let s = path_spectrum_sweep(&x, &y, &grid, a.alpha)?;
    match &a.output {
        Some(path) => {
            write_atomic(path, s.to_csv().as_bytes())?;
            writeln!(
                out,
                "sup M = {:.4e}, sup S_alpha = {:.4e}, inf gap = {:.4e}; wrote {}",
                s.sup_m(),
                s.sup_s_alpha(),
                s.inf_delta(),
                path.display()
            )?;
        }
        None => write!(out, "{}", s.to_csv())?,
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_exponent_form() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }
}
