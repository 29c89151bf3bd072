//! The `fastmmd` command line.
//!
//! Results go to stdout (or `--output`) as JSON or CSV. Failures print one
//! JSON line `{"error": {"kind": .., "message": ..}}` on stderr and exit with
//! [`Error::exit_code`].

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::circular;
use crate::dataset::{self, BlobSpec, LabelColumn, SampleSet};
use crate::error::{Error, Result};
use crate::estimate::{EstimateKind, Method};
use crate::fastfood::FastfoodStack;
use crate::fourier::{ClassSums, DenseProjector};
use crate::hypothesis::{self, Estimator, Type2Config};
use crate::kernel::{FrequencyBank, KernelFamily, ShiftInvariantKernel};

/// Version of the JSON documents written by `compute` and `test`.
pub const SCHEMA_VERSION: u32 = 1;
/// `compute`/`bench` refuse the exact method above this many samples without `--force`.
pub const EXACT_SAMPLE_LIMIT: usize = 100_000;

#[derive(Debug, Parser)]
#[command(name = "fastmmd", version, about = "Linear-time maximum mean discrepancy and two-sample tests")]
pub struct Cli {
    /// Worker threads; 1 keeps timings reproducible.
    #[arg(long, env = "FASTMMD_THREADS", default_value_t = 1, global = true)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the squared MMD once.
    Compute(ComputeArgs),
    /// Estimate over a geometric bandwidth grid.
    Sweep(SweepArgs),
    /// Permutation two-sample test.
    Test(TestArgs),
    /// Write a synthetic sample set as CSV.
    Synth(SynthArgs),
    /// Time estimators over a grid of sizes.
    Bench(BenchArgs),
    /// Rejection rates on blob data over a grid of epsilon and L.
    Type2(Type2Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Blobs,
    Ring,
    Hypercube,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Biased,
    Unbiased,
}

impl From<KindArg> for EstimateKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Biased => EstimateKind::Biased,
            KindArg::Unbiased => EstimateKind::Unbiased,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct InputArgs {
    /// CSV with a header row, feature columns and a label column of 1/2.
    #[arg(long, conflicts_with = "synth")]
    pub input: Option<PathBuf>,
    /// Label column name, or a 0-based index.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Generate data instead of reading it.
    #[arg(long, value_enum)]
    pub synth: Option<SynthKind>,
    #[arg(long, default_value_t = 200)]
    pub n_per_class: usize,
    /// Blob covariance ratio.
    #[arg(long, default_value_t = 4.0)]
    pub epsilon: f64,
    /// Hypercube dimension.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
}

impl InputArgs {
    pub fn load(&self) -> Result<SampleSet> {
        match (&self.input, self.synth) {
            (Some(path), _) => dataset::load_csv(path, &LabelColumn::parse(&self.label_column)),
            (None, Some(kind)) => synthesize(kind, self.n_per_class, self.epsilon, self.dim, self.data_seed),
            (None, None) => Err(Error::invalid("input", "pass --input <csv> or --synth <kind>")),
        }
    }
}

fn synthesize(kind: SynthKind, n_per_class: usize, epsilon: f64, dim: usize, seed: u64) -> Result<SampleSet> {
    match kind {
        SynthKind::Blobs => dataset::blob_pair(&BlobSpec::new(epsilon, n_per_class)?, seed),
        SynthKind::Ring => dataset::synth_ring(n_per_class, seed),
        SynthKind::Hypercube => dataset::synth_hypercube(n_per_class, dim, seed),
    }
}

#[derive(Clone, Debug, Args)]
pub struct KernelArgs {
    #[arg(long, default_value = "gaussian")]
    pub kernel: KernelFamily,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Kernel value at zero.
    #[arg(long, default_value_t = 1.0)]
    pub k0: f64,
}

impl KernelArgs {
    pub fn kernel(&self) -> Result<ShiftInvariantKernel> {
        ShiftInvariantKernel::new(self.kernel, self.sigma, self.k0)
    }
}

#[derive(Clone, Debug, Args)]
pub struct EstimatorArgs {
    #[arg(long, default_value = "fourier")]
    pub method: Method,
    /// Defaults to unbiased, or biased for the circular method.
    #[arg(long, value_enum)]
    pub estimate: Option<KindArg>,
    /// Number of frequencies `L`.
    #[arg(long, default_value_t = 1024)]
    pub basis: usize,
    /// B-test block size; defaults to round(sqrt(n)).
    #[arg(long)]
    pub block_size: Option<usize>,
}

impl EstimatorArgs {
    pub fn estimator(&self, kernel: ShiftInvariantKernel) -> Result<Estimator> {
        let kind = self.estimate.map(Into::into).unwrap_or_else(|| default_kind(self.method));
        Ok(Estimator::new(self.method, kernel, kind, self.basis)?.with_block_size(self.block_size))
    }
}

fn default_kind(method: Method) -> EstimateKind {
    if method.supports(EstimateKind::Unbiased) {
        EstimateKind::Unbiased
    } else {
        EstimateKind::Biased
    }
}

#[derive(Clone, Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Per-frequency wrapped samples as CSV (bank methods).
    #[arg(long)]
    pub emit_circle: Option<PathBuf>,
    /// Per-frequency amplitudes as CSV (fourier, fastfood).
    #[arg(long)]
    pub emit_amplitudes: Option<PathBuf>,
    /// The frequency bank as CSV (bank methods).
    #[arg(long)]
    pub dump_bank: Option<PathBuf>,
    /// Allow the exact method above the sample-count guard.
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0.1)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 5)]
    pub steps_per_decade: usize,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Clone, Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub shuffles: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub synth: SynthKind,
    #[arg(long, default_value_t = 200)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 4.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "exact,fourier,fastfood")]
    pub methods: Vec<Method>,
    /// Total sample counts `N`, split evenly between the classes.
    #[arg(long = "n", value_delimiter = ',', default_value = "1000,10000")]
    pub sizes: Vec<usize>,
    #[arg(long = "dims", value_delimiter = ',', default_value = "16")]
    pub dims: Vec<usize>,
    #[arg(long = "bases", value_delimiter = ',', default_value = "128")]
    pub bases: Vec<usize>,
    #[arg(long, value_enum, default_value = "hypercube")]
    pub synth: SynthKind,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Timed runs per cell; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct Type2Args {
    #[arg(long, value_delimiter = ',', default_value = "1.2,2,3,4")]
    pub epsilons: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
    pub bases: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub shuffles: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value = "fourier")]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn open_output<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(stdout)),
    }
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let mut out = open_output(path, stdout)?;
    let text = serde_json::to_string(value).map_err(|e| Error::Numerical(e.to_string()))?;
    writeln!(out, "{text}").and_then(|_| out.flush()).map_err(io_err(path))
}

fn with_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(BufWriter<File>) -> Result<()>,
{
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f(BufWriter::new(file))
}

fn guard_exact(method: Method, n: usize, force: bool) -> Result<()> {
    if method == Method::Exact && n > EXACT_SAMPLE_LIMIT && !force {
        return Err(Error::invalid(
            "method",
            format!("exact MMD on {n} samples exceeds the {EXACT_SAMPLE_LIMIT}-sample guard; pass --force"),
        ));
    }
    Ok(())
}

/// The frequency bank a bank-based estimator draws for `seed`.
fn bank_for(est: &Estimator, dim: usize, seed: u64) -> Result<FrequencyBank> {
    match est.method {
        Method::Fourier | Method::Circular => est.kernel.sample_spectral(est.basis, dim, seed),
        Method::Fastfood => Ok(FastfoodStack::new(dim, est.basis, est.kernel.sigma(), seed)?.materialize()),
        other => Err(Error::Unsupported {
            method: other.name(),
            what: "frequency-bank diagnostics".into(),
        }),
    }
}

fn cmd_compute(args: &ComputeArgs, stdout: &mut dyn Write) -> Result<()> {
    let s = args.input.load()?;
    let est = args.estimator.estimator(args.kernel.kernel()?)?;
    guard_exact(est.method, s.len(), args.force)?;
    let start = Instant::now();
    let result = est.estimate(&s, args.seed)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;

    if let Some(path) = &args.dump_bank {
        let bank = bank_for(&est, s.dim(), args.seed)?;
        with_file(path, |w| bank.write_csv(w))?;
    }
    if let Some(path) = &args.emit_circle {
        let bank = bank_for(&est, s.dim(), args.seed)?;
        with_file(path, |w| circular::write_circle(&s, &bank, w))?;
    }
    if let Some(path) = &args.emit_amplitudes {
        let sums = match est.method {
            Method::Fourier => ClassSums::compute(&s, &DenseProjector::new(&bank_for(&est, s.dim(), args.seed)?))?,
            Method::Fastfood => {
                ClassSums::compute(&s, &FastfoodStack::new(s.dim(), est.basis, est.kernel.sigma(), args.seed)?)?
            }
            other => {
                return Err(Error::Unsupported {
                    method: other.name(),
                    what: "--emit-amplitudes".into(),
                })
            }
        };
        with_file(path, |w| crate::fourier::write_amplitudes(&sums.terms(), w))?;
    }

    let (n1, n2) = s.class_sizes();
    let uses_seed = est.method.uses_basis() || matches!(est.method, Method::Linear | Method::Btest);
    let doc = json!({
        "schema": SCHEMA_VERSION,
        "method": est.method,
        "estimate": est.kind,
        "value_sq": result.value_sq,
        "value": result.value(),
        "L": result.basis,
        "seed": uses_seed.then_some(args.seed),
        "n1": n1,
        "n2": n2,
        "d": s.dim(),
        "wall_time_ms": wall_time_ms,
    });
    match args.format {
        Format::Json => write_json(&doc, args.output.as_deref(), stdout),
        Format::Csv => {
            let mut out = csv::Writer::from_writer(open_output(args.output.as_deref(), stdout)?);
            let keys = ["schema", "method", "estimate", "value_sq", "value", "L", "seed", "n1", "n2", "d", "wall_time_ms"];
            let err = |source| Error::Csv {
                path: "<compute>".into(),
                source,
            };
            out.write_record(keys).map_err(err)?;
            let cell = |v: &serde_json::Value| match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Null => String::new(),
                other => other.to_string(),
            };
            out.write_record(keys.iter().map(|k| cell(&doc[k]))).map_err(err)?;
            out.flush().map_err(io_err(args.output.as_deref()))
        }
    }
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let s = args.input.load()?;
    let est = args.estimator.estimator(args.kernel.kernel()?)?;
    let grid = hypothesis::sigma_grid(args.sigma_min, args.sigma_max, args.steps_per_decade)?;
    let sweep = hypothesis::bandwidth_sweep(&s, &est, &grid, args.repeats, args.seed)?;
    match args.format {
        Format::Csv => sweep.write_csv(open_output(args.output.as_deref(), stdout)?),
        Format::Json => {
            let doc = json!({
                "schema": SCHEMA_VERSION,
                "method": sweep.method,
                "estimate": sweep.estimate,
                "L": if est.method.uses_basis() { est.basis } else { 0 },
                "seed": args.seed,
                "argmax_sigma": sweep.argmax_sigma,
                "points": sweep.points.iter().map(|p| json!({
                    "sigma": p.sigma, "mean": p.mean, "std": p.std, "repeats": p.values.len(),
                })).collect::<Vec<_>>(),
            });
            write_json(&doc, args.output.as_deref(), stdout)
        }
    }
}

fn cmd_test(args: &TestArgs, stdout: &mut dyn Write) -> Result<()> {
    let s = args.input.load()?;
    let est = args.estimator.estimator(args.kernel.kernel()?)?;
    let result = hypothesis::two_sample_test(&s, &est, args.alpha, args.shuffles, args.seed)?;
    let (n1, n2) = s.class_sizes();
    let mut doc = serde_json::to_value(result).map_err(|e| Error::Numerical(e.to_string()))?;
    doc["schema"] = json!(SCHEMA_VERSION);
    doc["n1"] = json!(n1);
    doc["n2"] = json!(n2);
    doc["d"] = json!(s.dim());
    write_json(&doc, args.output.as_deref(), stdout)
}

fn cmd_synth(args: &SynthArgs, stdout: &mut dyn Write) -> Result<()> {
    let s = synthesize(args.synth, args.n_per_class, args.epsilon, args.dim, args.data_seed)?;
    s.write_csv(open_output(args.output.as_deref(), stdout)?)
}

#[derive(Debug, Serialize)]
struct BenchRow {
    method: Method,
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    #[serde(rename = "L")]
    basis: usize,
    wall_time_ms: f64,
    value_sq: f64,
}

/// Median wall time over `runs` timed calls after one untimed warm-up.
pub fn time_median<T, F: FnMut() -> Result<T>>(runs: usize, mut f: F) -> Result<(f64, T)> {
    let mut last = f()?;
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs.max(1) {
        let start = Instant::now();
        last = f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    Ok((times[times.len() / 2], last))
}

fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<()> {
    let kernel = args.kernel.kernel()?;
    for &n in &args.sizes {
        for &m in &args.methods {
            guard_exact(m, n, args.force)?;
        }
        if n < 2 {
            return Err(Error::invalid("n", "need at least one sample per class"));
        }
    }
    let mut out = csv::Writer::from_writer(open_output(args.output.as_deref(), stdout)?);
    let err = |source| Error::Csv {
        path: "<bench>".into(),
        source,
    };
    for &n in &args.sizes {
        for &d in &args.dims {
            let s = synthesize(args.synth, n / 2, 4.0, d, args.seed)?;
            for &method in &args.methods {
                let bases: &[usize] = if method.uses_basis() { &args.bases } else { &[0] };
                for &basis in bases {
                    let est = Estimator::new(method, kernel, default_kind(method), basis.max(1))?;
                    let (ms, value) = time_median(args.runs, || est.estimate(&s, args.seed))?;
                    out.serialize(BenchRow {
                        method,
                        n: s.len(),
                        d: s.dim(),
                        basis,
                        wall_time_ms: ms,
                        value_sq: value.value_sq,
                    })
                    .map_err(err)?;
                    out.flush().map_err(io_err(args.output.as_deref()))?;
                }
            }
        }
    }
    Ok(())
}

fn cmd_type2(args: &Type2Args, stdout: &mut dyn Write) -> Result<()> {
    let estimator = Estimator::new(args.method, args.kernel.kernel()?, default_kind(args.method), 1)?;
    let config = Type2Config {
        epsilons: args.epsilons.clone(),
        bases: args.bases.clone(),
        samples_per_set: args.n_per_class,
        trials: args.trials,
        alpha: args.alpha,
        shuffles: args.shuffles,
        estimator,
        seed: args.seed,
    };
    let cells = hypothesis::type2_experiment(&config)?;
    hypothesis::write_type2_csv(&cells, open_output(args.output.as_deref(), stdout)?)
}

/// Runs a parsed command on a pool of `cli.threads` workers.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::invalid("threads", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    // Standard output is buffered here because the workers cannot share the caller's handle.
    let mut buffer = Vec::new();
    let result = pool.install(|| {
        let out: &mut dyn Write = &mut buffer;
        match &cli.command {
            Command::Compute(a) => cmd_compute(a, out),
            Command::Sweep(a) => cmd_sweep(a, out),
            Command::Test(a) => cmd_test(a, out),
            Command::Synth(a) => cmd_synth(a, out),
            Command::Bench(a) => cmd_bench(a, out),
            Command::Type2(a) => cmd_type2(a, out),
        }
    });
    stdout.write_all(&buffer).and_then(|_| stdout.flush()).map_err(io_err(None))?;
    result
}

/// Short machine-readable name of an error variant.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::ClassTooSmall { .. } => "class_too_small",
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::NonFinite { .. } => "non_finite",
        Error::Parse { .. } => "parse",
        Error::Io { .. } => "io",
        Error::Csv { .. } => "csv",
        Error::Unsupported { .. } => "unsupported",
        Error::Shuffle { source, .. } => error_kind(source),
        Error::Numerical(_) => "numerical",
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let line = json!({"error": {"kind": error_kind(&e), "message": e.to_string()}});
            eprintln!("{line}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<String> {
        let cli = Cli::try_parse_from(std::iter::once("fastmmd").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        execute(&cli, &mut buf)?;
        Ok(String::from_utf8(buf).unwrap())
    }

    #[test]
    fn compute_reports_schema_fields() {
        let out = run(&["compute", "--synth", "ring", "--n-per-class", "20", "--method", "fourier", "--basis", "64"]).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        for key in ["schema", "method", "estimate", "value_sq", "value", "L", "seed", "n1", "n2", "d", "wall_time_ms"] {
            assert!(doc.get(key).is_some(), "missing {key}");
        }
        assert_eq!(doc["schema"], 1);
        assert_eq!(doc["method"], "fourier");
        assert_eq!(doc["estimate"], "unbiased");
        assert_eq!(doc["L"], 64);
        assert_eq!(doc["n1"], 20);
    }

    #[test]
    fn compute_csv_format() {
        let out = run(&["compute", "--synth", "ring", "--n-per-class", "5", "--method", "exact", "--format", "csv"]).unwrap();
        let mut lines = out.lines();
        assert!(lines.next().unwrap().starts_with("schema,method,estimate,value_sq"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("1,exact,unbiased,"));
        assert!(row.contains(",0,,"), "exact has L = 0 and no seed: {row}");
    }

    #[test]
    fn incompatible_estimate_is_rejected() {
        let e = run(&["compute", "--synth", "ring", "--method", "linear", "--estimate", "biased"]).unwrap_err();
        assert!(matches!(e, Error::Unsupported { .. }));
        assert_eq!(e.exit_code(), 2);
        assert!(run(&["compute", "--method", "exact"]).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["fastmmd", "compute", "--method", "nonsense"]), 2);
        assert_eq!(main_with_args(["fastmmd", "frobnicate"]), 2);
        assert_eq!(main_with_args(["fastmmd", "compute", "--synth", "ring", "--basis", "0"]), 2);
    }

    #[test]
    fn bench_guard_and_rows() {
        let e = run(&["bench", "--methods", "exact", "--n", "200000"]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { name: "method", .. }));
        let out = run(&["bench", "--methods", "exact,fourier", "--n", "40", "--dims", "4", "--bases", "8,16", "--runs", "1"]).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "method,N,d,L,wall_time_ms,value_sq");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("exact,40,4,0,"));
        assert!(lines[3].starts_with("fourier,40,4,16,"));
    }

    #[test]
    fn time_median_reports_middle_run() {
        let mut calls = 0;
        let (ms, last) = time_median(3, || {
            calls += 1;
            Ok(calls)
        })
        .unwrap();
        assert_eq!(calls, 4);
        assert_eq!(last, 4);
        assert!(ms >= 0.0);
    }

    #[test]
    fn sweep_json_and_synth_csv() {
        let out = run(&[
            "sweep", "--synth", "ring", "--n-per-class", "10", "--method", "exact", "--repeats", "1", "--format", "json",
        ])
        .unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(doc["points"].as_array().unwrap().len(), 16);
        let csv = run(&["synth", "--synth", "hypercube", "--n-per-class", "3", "--dim", "2"]).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "x1,x2,label");
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn error_kinds_unwrap_shuffles() {
        let inner = Error::Numerical("x".into());
        let e = Error::Shuffle {
            index: 3,
            source: Box::new(inner),
        };
        assert_eq!(error_kind(&e), "numerical");
        assert_eq!(e.exit_code(), 3);
    }
}
