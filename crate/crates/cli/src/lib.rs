//! The `kaczlab` command line: solve a system, inspect its contraction
//! rates, enumerate per-order factors, run multi-trial benchmarks, and
//! generate synthetic instances.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use kaczlab::io::{
    read_matrix_market, save_matrix_market, write_records, ExperimentRecord, OutputFormat,
    ProblemInstance, Provenance,
};
use kaczlab::linalg::spectral_norm;
use kaczlab::{
    generate_synthetic, rho_rk, rho_rrk, rho_rrk_sampled, solve, DenseMatrix, Error, RateAnalyzer,
    Rng, SolverConfig, Variant, DEFAULT_ENUMERATION_LIMIT,
};

/// Methods run by `bench`, in output order.
pub const BENCH_METHODS: [Variant; 4] = [Variant::Rrk, Variant::Sok, Variant::Ik, Variant::Rk];

#[derive(Debug, Parser)]
#[command(name = "kaczlab", version, about = "Kaczmarz solvers and contraction-rate analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve Ax = b from x0 = 0 and write a JSON report.
    Solve(SolveArgs),
    /// Print spectral quantities, RK/IK rates and, for small m, the full rate table.
    Analyze(AnalyzeArgs),
    /// Print every per-order contraction factor, largest first.
    Enumerate(EnumerateArgs),
    /// Run rrk, sok, ik and rk over several trials and write per-epoch RSE curves.
    Bench(BenchArgs),
    /// Write a synthetic instance as Matrix Market files.
    Gen(GenArgs),
}

/// Where the system comes from. A matrix file without `--rhs` is paired with
/// `x* ~ N(0, I)` drawn from the seed and `b = A x*`.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Matrix Market file holding A.
    #[arg(long, value_name = "PATH", conflicts_with = "gen", required_unless_present = "gen")]
    pub matrix: Option<PathBuf>,
    /// Synthetic instance, e.g. `m=50,n=30,rank=15` (rank defaults to min(m, n)).
    #[arg(long, value_name = "SPEC")]
    pub gen: Option<GenSpec>,
    /// Matrix Market m×1 file holding b (only with --matrix).
    #[arg(long, value_name = "PATH", requires = "matrix")]
    pub rhs: Option<PathBuf>,
    #[arg(long, env = "KACZLAB_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value = "rrk", value_parser = ["rrk", "sok", "ik", "rk", "rrsgd"])]
    pub variant: String,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub rse_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub res_tol: f64,
    /// Constant step for rrsgd; defaults to 1/(√2·m·‖A‖₂²).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Report path (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Estimate ρ_RRK from N random orders (a lower bound).
    #[arg(long, value_name = "N")]
    pub sample: Option<usize>,
    /// Summary path (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Table path (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Early stop on RSE; the default runs the full curve.
    #[arg(long, default_value_t = f64::MIN_POSITIVE)]
    pub rse_tol: f64,
    #[arg(long, default_value_t = f64::MIN_POSITIVE)]
    pub res_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to json for a `.json` path and csv otherwise.
    #[arg(long, value_parser = ["csv", "json"])]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_name = "SPEC")]
    pub gen: GenSpec,
    #[arg(long, env = "KACZLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Path for A; b and x* go next to it as `<stem>_b.mtx` and `<stem>_x.mtx`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    pub rank: Option<usize>,
}

impl FromStr for GenSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (mut m, mut n, mut rank) = (None, None, None);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got '{part}'"))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| format!("'{value}' is not a nonnegative integer"))?;
            match key.trim() {
                "m" => m = Some(value),
                "n" => n = Some(value),
                "rank" => rank = Some(value),
                other => return Err(format!("unknown key '{other}' (expected m, n, rank)")),
            }
        }
        Ok(GenSpec {
            m: m.ok_or("missing m=")?,
            n: n.ok_or("missing n=")?,
            rank,
        })
    }
}

impl GenSpec {
    fn instance(&self, seed: u64) -> kaczlab::Result<ProblemInstance> {
        generate_synthetic(self.m, self.n, self.rank.unwrap_or(self.m.min(self.n)), seed)
    }
}

/// Exit status: 1 for parse, I/O and usage problems, 2 for numerical ones.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Io(_) | Error::Usage(_) | Error::InvalidInput(_) | Error::Capacity { .. } => 1,
        Error::Domain(_) | Error::ZeroRow { .. } | Error::Consistency { .. } => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs a parsed command; `Ok` carries the exit code for runs that finished
/// with a numerical warning.
pub fn execute(command: &Command) -> kaczlab::Result<u8> {
    match command {
        Command::Solve(a) => cmd_solve(a),
        Command::Analyze(a) => cmd_analyze(a).map(|()| 0),
        Command::Enumerate(a) => cmd_enumerate(a).map(|()| 0),
        Command::Bench(a) => cmd_bench(a).map(|()| 0),
        Command::Gen(a) => cmd_gen(a).map(|()| 0),
    }
}

/// Reads a Matrix Market file, naming the path in I/O errors.
fn read_file(path: &Path) -> kaczlab::Result<DenseMatrix> {
    read_matrix_market(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn load(source: &SourceArgs) -> kaczlab::Result<ProblemInstance> {
    match (&source.matrix, &source.gen) {
        (Some(path), _) => {
            let matrix = read_file(path)?;
            match &source.rhs {
                None => Ok(ProblemInstance::with_random_solution(matrix, source.seed, Provenance::MatrixMarket)),
                Some(rhs_path) => {
                    let rhs = read_file(rhs_path)?;
                    if rhs.cols() != 1 || rhs.rows() != matrix.rows() {
                        return Err(Error::Usage(format!(
                            "--rhs must be {}x1, got {}x{}",
                            matrix.rows(),
                            rhs.rows(),
                            rhs.cols()
                        )));
                    }
                    let mut inst = ProblemInstance::with_random_solution(matrix, source.seed, Provenance::MatrixMarket);
                    inst.rhs = rhs.into_vec();
                    inst.known_solution = None;
                    Ok(inst)
                }
            }
        }
        (None, Some(spec)) => spec.instance(source.seed),
        (None, None) => Err(Error::Usage("one of --matrix or --gen is required".into())),
    }
}

fn write_json_file(path: &Path, value: &serde_json::Value) -> kaczlab::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// `1/(√2·m·‖A‖₂²)`, the largest step the reshuffled-SGD rate covers.
pub fn default_gamma(a: &DenseMatrix) -> kaczlab::Result<f64> {
    let l = spectral_norm(a)?;
    if l == 0.0 {
        return Err(Error::Domain("default step size of a zero matrix".into()));
    }
    Ok(1.0 / (2f64.sqrt() * a.rows() as f64 * l * l))
}

pub fn cmd_solve(args: &SolveArgs) -> kaczlab::Result<u8> {
    let inst = load(&args.source)?;
    let a = &inst.matrix;
    let variant = match args.variant.as_str() {
        "rrsgd" => Variant::RrSgd {
            gamma: match args.gamma {
                Some(g) => g,
                None => default_gamma(a)?,
            },
        },
        other => other.parse()?,
    };
    let config = SolverConfig::new(variant)
        .with_max_epochs(args.epochs)
        .with_tolerances(args.rse_tol, args.res_tol)
        .with_seed(args.source.seed);
    let x0 = vec![0.0; a.cols()];
    let report = solve(a, &inst.rhs, &x0, &config)?;

    println!("variant      {variant}");
    println!("seed         {}", args.source.seed);
    println!("epochs_run   {}", report.epochs_run);
    println!("stop_reason  {:?}", report.stop_reason);
    println!("final_rse    {:.6e}", report.final_rse);
    println!("residual     {:.6e}", report.final_residual);
    if let Some(out) = &args.out {
        let value = serde_json::to_value(&report).map_err(|e| Error::InvalidInput(e.to_string()))?;
        write_json_file(out, &value)?;
    }
    Ok(match &report.warning {
        Some(w) => {
            eprintln!("warning: {w}");
            2
        }
        None => 0,
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> kaczlab::Result<()> {
    let inst = load(&args.source)?;
    let a = &inst.matrix;
    let summary = rho_rk(a)?;
    let rho_ik = RateAnalyzer::new(a)?.rho_ik()?;

    println!("shape          {}x{}", a.rows(), a.cols());
    println!("rank           {}", summary.numerical_rank);
    println!("sigma_min      {:.10}", summary.sigma_min);
    println!("norm_2         {:.10}", summary.spectral_norm_a);
    println!("norm_F         {:.10}", summary.frobenius_norm_a);
    println!("rho_RK         {:.10}", summary.rho_rk);
    println!("rho_RK^m       {:.10}", summary.rho_rk_per_epoch);
    println!("rho_IK         {:.10}", rho_ik);

    let mut report = json!({
        "shape": [a.rows(), a.cols()],
        "seed": args.source.seed,
        "spectral": summary,
        "rho_ik": rho_ik,
    });

    match rho_rrk(a, DEFAULT_ENUMERATION_LIMIT) {
        Ok(table) => {
            println!("rho_RRK        {:.10}  (argmax {})", table.rho_rrk, table.argmax);
            println!();
            println!("{:<24} factor", "order");
            for e in &table.entries {
                println!("{:<24} {:.10}", e.permutation.to_string(), e.factor);
            }
            report["rho_rrk"] = json!(table.rho_rrk);
            report["table"] = table_json(&table.entries);
        }
        Err(Error::Capacity { m, limit }) => {
            if args.sample.is_none() {
                println!("rho_RRK        not enumerated: {m} rows exceeds the limit of {limit}; pass --sample N for a lower bound");
            }
        }
        Err(e) => return Err(e),
    }
    if let Some(samples) = args.sample {
        let mut rng = Rng::new(args.source.seed);
        let lower = rho_rrk_sampled(a, samples, &mut rng)?;
        println!("rho_RRK >=     {lower:.10}  (sampled lower bound, {samples} random orders)");
        report["rho_rrk_sampled_lower_bound"] = json!({ "value": lower, "samples": samples });
    }
    if let Some(out) = &args.out {
        write_json_file(out, &report)?;
    }
    Ok(())
}

fn table_json(entries: &[kaczlab::RateEntry]) -> serde_json::Value {
    entries
        .iter()
        .map(|e| json!({ "order": e.permutation.to_one_based(), "factor": e.factor }))
        .collect()
}

pub fn cmd_enumerate(args: &EnumerateArgs) -> kaczlab::Result<()> {
    let inst = load(&args.source)?;
    let table = rho_rrk(&inst.matrix, DEFAULT_ENUMERATION_LIMIT)?;
    let sorted: Vec<kaczlab::RateEntry> = table.sorted_descending().into_iter().cloned().collect();
    println!("{:<24} factor", "order");
    for e in &sorted {
        println!("{:<24} {:.10}", e.permutation.to_string(), e.factor);
    }
    if let Some(out) = &args.out {
        let value = json!({
            "seed": args.source.seed,
            "rho_rrk": table.rho_rrk,
            "rho_ik": table.rho_ik,
            "table": table_json(&sorted),
        });
        write_json_file(out, &value)?;
    }
    Ok(())
}

/// Runs every (method, trial) pair and returns the records in method-major,
/// trial-minor order. Trial `t` uses seed `base_seed + t`.
pub fn bench_records(
    inst: &ProblemInstance,
    base_seed: u64,
    trials: usize,
    epochs: usize,
    rse_tol: f64,
    res_tol: f64,
) -> kaczlab::Result<Vec<ExperimentRecord>> {
    if trials == 0 {
        return Err(Error::Usage("--trials must be at least 1".into()));
    }
    let a = &inst.matrix;
    let rho_ik = RateAnalyzer::new(a)?.rho_ik()?;
    let per_epoch_rk = rho_rk(a)?.rho_rk_per_epoch;
    let envelope = |rho: f64| -> Vec<f64> { (0..=epochs).map(|k| rho.powi(k as i32)).collect() };
    let bound_ik = envelope(rho_ik);
    let bound_rk = envelope(per_epoch_rk);
    let x0 = vec![0.0; a.cols()];

    let jobs: Vec<(Variant, usize)> = BENCH_METHODS
        .iter()
        .flat_map(|&v| (0..trials).map(move |t| (v, t)))
        .collect();
    jobs.par_iter()
        .map(|&(variant, trial)| {
            let seed = base_seed.wrapping_add(trial as u64);
            let config = SolverConfig::new(variant)
                .with_max_epochs(epochs)
                .with_tolerances(rse_tol, res_tol)
                .with_seed(seed);
            let started = Instant::now();
            let report = solve(a, &inst.rhs, &x0, &config)?;
            let first = if report.initial_error > 0.0 { 1.0 } else { 0.0 };
            let rse: Vec<f64> = std::iter::once(first).chain(report.traces.iter().map(|t| t.rse)).collect();
            Ok(ExperimentRecord {
                method: variant.name().to_string(),
                trial,
                seed,
                rse,
                wall_time: started.elapsed(),
                bound_ik: Some(bound_ik.clone()),
                bound_rk: Some(bound_rk.clone()),
            })
        })
        .collect()
}

pub fn cmd_bench(args: &BenchArgs) -> kaczlab::Result<()> {
    let inst = load(&args.source)?;
    let format = match &args.format {
        Some(f) => f.parse()?,
        None if args.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => OutputFormat::Json,
        None => OutputFormat::Csv,
    };
    let records = bench_records(&inst, args.source.seed, args.trials, args.epochs, args.rse_tol, args.res_tol)?;
    write_records(&records, &args.out, format)?;
    for method in BENCH_METHODS {
        let finals: Vec<f64> = records
            .iter()
            .filter(|r| r.method == method.name())
            .map(|r| *r.rse.last().expect("epoch 0 is always present"))
            .collect();
        let mut sorted = finals.clone();
        sorted.sort_by(f64::total_cmp);
        println!("{:<5} median final rse {:.6e} over {} trials", method.name(), sorted[sorted.len() / 2], finals.len());
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

/// `<dir>/<stem>_<suffix>.mtx` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.mtx"))
}

pub fn cmd_gen(args: &GenArgs) -> kaczlab::Result<()> {
    let inst = args.gen.instance(args.seed)?;
    let column = |v: &[f64]| DenseMatrix::new(v.len(), 1, v.to_vec());
    save_matrix_market(&inst.matrix, &args.out)?;
    let b_path = sibling(&args.out, "b");
    save_matrix_market(&column(&inst.rhs)?, &b_path)?;
    println!("wrote {}", args.out.display());
    println!("wrote {}", b_path.display());
    if let Some(x) = &inst.known_solution {
        let x_path = sibling(&args.out, "x");
        save_matrix_market(&column(x)?, &x_path)?;
        println!("wrote {}", x_path.display());
    }
    Ok(())
}
