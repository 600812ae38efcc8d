//! Command-line surface for kernel building, Nystrom approximation runs,
//! benchmark sweeps, timing comparisons, verification suites and synthetic
//! matrix generation.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/IO error, 3 verification
//! failure.

use clap::{Args, Parser, Subcommand};
use nystrom_bench::{
    emit_report, run_suite, run_sweep_on, ExperimentInput, ExperimentSpec, MethodSpec,
    ReportFormat, Suite,
};
use nystrom_bench::experiment::DEFAULT_DENSE_CAP;
use nystrom_bench::timing::run_timing_comparison;
use nystrom_core::io;
use nystrom_core::kernel::{self, DatasetFormat, KernelConfig, Normalization};
use nystrom_core::linalg::NormKind;
use nystrom_core::nystrom::{
    approximate, error_ratio, residual_norm, write_approximation, IntersectionMethod,
};
use nystrom_core::oracle::{
    adversarial_residual_norm, build_block_adversarial, lower_bound_value, AdversarialSpec,
};
use nystrom_core::samplers::{sample_columns, RngSeed, SamplerConfig};
use nystrom_core::spsd::SymmetricOps;
use nystrom_core::{Error as CoreError, SpsdMatrix};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nystrom-bench", version, about = "Nystrom low-rank approximation benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel matrix construction.
    Kernel {
        #[command(subcommand)]
        command: KernelCommand,
    },
    /// Single approximation runs.
    Approx {
        #[command(subcommand)]
        command: ApproxCommand,
    },
    /// Benchmark sweeps and timing comparisons.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Run a named verification suite.
    Verify {
        /// One of: core, exactness, fast-path, adversarial, statistical.
        suite: String,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic matrix families.
    Synth {
        #[command(subcommand)]
        command: SynthCommand,
    },
}

#[derive(Subcommand)]
enum KernelCommand {
    /// Build an RBF kernel matrix from a dataset file.
    Build(KernelBuildArgs),
}

#[derive(Args)]
struct KernelBuildArgs {
    #[arg(long)]
    input: PathBuf,
    /// Dataset format: csv or libsvm.
    #[arg(long, default_value = "csv")]
    format: String,
    /// RBF scale.
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// Feature normalization: none, zscore, minmax.
    #[arg(long, default_value = "minmax")]
    normalize: String,
    /// The first row is a header.
    #[arg(long)]
    header: bool,
    /// Drop this 0-based column as a label.
    #[arg(long)]
    label_col: Option<usize>,
    /// Keep only this fraction of entries (writes Matrix Market instead of
    /// the dense binary).
    #[arg(long)]
    sparsify: Option<f64>,
    /// Output path (.nysd dense binary, or .mtx when --sparsify is given).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ApproxCommand {
    /// Sample columns and build one approximation.
    Run(ApproxRunArgs),
}

#[derive(Args)]
struct ApproxRunArgs {
    #[command(flatten)]
    matrix: MatrixInput,
    /// Target rank of the reference error.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Column budget; omit to derive stage budgets from (k, epsilon, mu).
    #[arg(long)]
    c: Option<usize>,
    /// sampler+intersection, e.g. uniform_adaptive2+modified_fast.
    #[arg(long, default_value = "uniform_adaptive2+modified_fast")]
    method: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Read the sampler configuration from a TOML file (flags override c).
    #[arg(long)]
    sampler_config: Option<PathBuf>,
    /// Force the naive modified intersection.
    #[arg(long)]
    force_naive: bool,
    /// Error norm: frobenius or spectral.
    #[arg(long, default_value = "frobenius")]
    norm: String,
    /// Write the approximation (columns + U) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON summary here (defaults to stdout).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Sweep methods over a grid of column budgets.
    Sweep(SweepArgs),
    /// Wall-clock comparison of the intersection computations.
    Timing(TimingArgs),
}

#[derive(Args)]
struct MatrixInput {
    /// Input file (matrix or dataset, see --format).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Input format: matrix formats bin|csv|mtx, or dataset-csv|dataset-libsvm
    /// (build an RBF kernel first, honoring --sigma/--normalize).
    #[arg(long, default_value = "bin")]
    format: String,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value = "minmax")]
    normalize: String,
    #[arg(long)]
    header: bool,
    #[arg(long)]
    label_col: Option<usize>,
    /// Sparsify the built kernel to this nonzero fraction.
    #[arg(long)]
    sparsify: Option<f64>,
    /// Synthesize a block-adversarial matrix "m,k,alpha" instead of reading
    /// a file.
    #[arg(long)]
    adversarial: Option<String>,
    /// Refuse dense inputs above this order.
    #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
    max_dense_order: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    matrix: MatrixInput,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Comma-separated ascending column budgets, e.g. 40,70,100.
    #[arg(long)]
    c: String,
    /// Comma-separated sampler+intersection pairs.
    #[arg(long, default_value = "uniform+modified_fast,uniform_adaptive2+modified_fast")]
    method: String,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value = "frobenius")]
    norm: String,
    /// Zero the recorded timings (byte-stable output for determinism checks).
    #[arg(long)]
    zero_timings: bool,
    #[arg(long)]
    force_naive: bool,
    /// Also compute the rank-k coherence of the input.
    #[arg(long)]
    report_coherence: bool,
    /// Report formats to write: any of csv,json,svg.
    #[arg(long, default_value = "csv,json")]
    emit: String,
    /// Output directory (files sweep.csv / sweep.json / sweep.svg).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TimingArgs {
    #[command(flatten)]
    matrix: MatrixInput,
    #[arg(long, default_value_t = 200)]
    c: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Block-diagonal adversarial matrix with closed-form oracle values.
    Adversarial(SynthAdversarialArgs),
}

#[derive(Args)]
struct SynthAdversarialArgs {
    #[arg(long)]
    m: usize,
    /// Block count (doubles as the oracle target rank).
    #[arg(long)]
    k: usize,
    #[arg(long)]
    alpha: f64,
    /// Column budget used for the reported lower-bound value.
    #[arg(long)]
    c: Option<usize>,
    /// Output format: bin or csv.
    #[arg(long, default_value = "bin")]
    format: String,
    #[arg(long)]
    out: PathBuf,
    /// Write the oracle values (JSON) here (defaults to stdout).
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &CoreError) -> u8 {
    match e {
        CoreError::Parameter(_) | CoreError::Dimension(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<u8, CoreError> {
    match cli.command {
        Command::Kernel { command: KernelCommand::Build(args) } => kernel_build(args),
        Command::Approx { command: ApproxCommand::Run(args) } => approx_run(args),
        Command::Bench { command: BenchCommand::Sweep(args) } => bench_sweep(args),
        Command::Bench { command: BenchCommand::Timing(args) } => bench_timing(args),
        Command::Verify { suite, out } => verify(&suite, out),
        Command::Synth { command: SynthCommand::Adversarial(args) } => synth_adversarial(args),
    }
}

fn kernel_build(args: KernelBuildArgs) -> Result<u8, CoreError> {
    let format: DatasetFormat = args.format.parse()?;
    let normalization: Normalization = args.normalize.parse()?;
    let cfg = KernelConfig {
        sigma: args.sigma,
        normalization,
        sparsify_fraction: args.sparsify,
    };
    cfg.validate()?;
    let data = kernel::load_dataset::<f64>(
        &args.input,
        format,
        normalization,
        args.header,
        args.label_col,
    )?;
    let k = kernel::rbf_kernel(&data, cfg.sigma)?;
    match cfg.sparsify_fraction {
        Some(f) => {
            let sparse = kernel::sparsify(&k, f)?;
            io::write_matrix_market(&args.out, &sparse)?;
            println!(
                "wrote sparse kernel of order {} ({:.3}% nonzero) to {}",
                k.order(),
                100.0 * sparse.logical_nnz() as f64 / (k.order() * k.order()) as f64,
                args.out.display()
            );
        }
        None => {
            io::write_symmetric_binary(&args.out, &k)?;
            println!(
                "wrote dense kernel of order {} to {}",
                k.order(),
                args.out.display()
            );
        }
    }
    Ok(0)
}

impl MatrixInput {
    fn load(&self) -> Result<SpsdMatrix<f64>, CoreError> {
        let mut spec = ExperimentSpec::new(self.as_experiment_input()?, 1);
        spec.max_dense_order = self.max_dense_order;
        spec.load_matrix()
    }

    fn as_experiment_input(&self) -> Result<ExperimentInput, CoreError> {
        if let Some(spec) = &self.adversarial {
            let parts: Vec<&str> = spec.split(',').collect();
            if parts.len() != 3 {
                return Err(CoreError::parameter("--adversarial expects m,k,alpha"));
            }
            return Ok(ExperimentInput::Adversarial(AdversarialSpec {
                m: parts[0].trim().parse().map_err(|_| CoreError::parameter("bad m"))?,
                k: parts[1].trim().parse().map_err(|_| CoreError::parameter("bad k"))?,
                alpha: parts[2].trim().parse().map_err(|_| CoreError::parameter("bad alpha"))?,
            }));
        }
        let path = self
            .input
            .as_ref()
            .ok_or_else(|| CoreError::parameter("--input (or --adversarial) is required"))?;
        Ok(match self.format.as_str() {
            "dataset-csv" | "dataset-libsvm" => ExperimentInput::Dataset {
                path: path.clone(),
                format: self.format.trim_start_matches("dataset-").parse()?,
                kernel: KernelConfig {
                    sigma: self.sigma,
                    normalization: self.normalize.parse()?,
                    sparsify_fraction: self.sparsify,
                },
                header: self.header,
                label_col: self.label_col,
            },
            other => ExperimentInput::Matrix { path: path.clone(), format: other.parse()? },
        })
    }
}

fn approx_run(args: ApproxRunArgs) -> Result<u8, CoreError> {
    let matrix = args.matrix.load()?;
    let method: MethodSpec = args.method.parse()?;
    let norm: NormKind = args.norm.parse()?;

    let mut sampler_cfg = match &args.sampler_config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str::<SamplerConfig>(&text)
                .map_err(|e| CoreError::data(None, format!("bad sampler config: {e}")))?
        }
        None => SamplerConfig::new(method.sampler, args.k),
    };
    sampler_cfg.method = method.sampler;
    sampler_cfg.k = args.k;
    sampler_cfg.epsilon = args.epsilon;
    sampler_cfg.mu = args.mu;
    if let Some(c) = args.c {
        sampler_cfg = sampler_cfg.with_budget(c);
    }

    let leverage = if method.sampler == nystrom_core::samplers::SamplerMethod::Leverage {
        let dense = nystrom_core::Symmetric::from_dense_lower(&matrix.to_dense())?;
        Some(nystrom_core::linalg::leverage_scores_symmetric(&dense, args.k)?)
    } else {
        None
    };

    let seed = RngSeed(args.seed);
    let drawn = sample_columns(&matrix, &sampler_cfg, seed, leverage.as_deref())?;
    let intersection = if args.force_naive && method.intersection == IntersectionMethod::ModifiedFast
    {
        IntersectionMethod::ModifiedNaive
    } else {
        method.intersection
    };
    let approx = approximate(&matrix, &drawn.columns, intersection)?;
    let residual = residual_norm(&matrix, &approx, norm)?;
    let ratio = error_ratio(&matrix, &approx, args.k, norm)?;

    if let Some(out) = &args.out {
        write_approximation(out, &approx, args.seed)?;
    }
    let summary = serde_json::json!({
        "method": args.method,
        "order": matrix.order(),
        "columns": drawn.columns.len(),
        "stage_sizes": drawn.columns.stage_sizes(),
        "seed": args.seed,
        "residual": residual,
        "error_ratio": ratio.value,
        "degenerate": ratio.degenerate,
        "fallback": approx.fallback(),
        "exact_early_exit": drawn.exact_early_exit,
        "clamped": drawn.clamped,
    });
    emit_json(&summary, args.report.as_deref())?;
    Ok(0)
}

fn bench_sweep(args: SweepArgs) -> Result<u8, CoreError> {
    let mut spec = ExperimentSpec::new(args.matrix.as_experiment_input()?, args.k);
    spec.c_values = parse_list(&args.c, "c")?;
    spec.methods = args
        .method
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<MethodSpec>, _>>()?;
    spec.repeats = args.repeats;
    spec.base_seed = args.seed;
    spec.norm = args.norm.parse()?;
    spec.epsilon = args.epsilon;
    spec.mu = args.mu;
    spec.zero_timings = args.zero_timings;
    spec.force_naive = args.force_naive;
    spec.max_dense_order = args.matrix.max_dense_order;
    spec.report_coherence = args.report_coherence;

    let matrix = spec.load_matrix()?;
    let table = run_sweep_on(&spec, &matrix)?;

    std::fs::create_dir_all(&args.out)?;
    for fmt in args.emit.split(',') {
        let fmt = fmt.trim();
        if fmt.is_empty() {
            continue;
        }
        let format: ReportFormat = fmt.parse()?;
        let file = args.out.join(format!("sweep.{fmt}"));
        emit_report(&table, format, &file)?;
        println!("wrote {}", file.display());
    }
    for agg in &table.aggregates {
        println!(
            "{} c={} min_ratio={:.6} mean_ratio={:.6} sampling={:.4}s intersection={:.4}s",
            agg.method, agg.c, agg.min_ratio, agg.mean_ratio, agg.mean_sampling_s,
            agg.mean_intersection_s
        );
    }
    Ok(0)
}

fn bench_timing(args: TimingArgs) -> Result<u8, CoreError> {
    let matrix = args.matrix.load()?;
    let report = run_timing_comparison(&matrix, args.c, args.repeats, RngSeed(args.seed))?;
    for m in &report.methods {
        println!("{}: mean {:.4}s median {:.4}s", m.method, m.mean_s, m.median_s);
    }
    println!(
        "fast vs naive: speedup {:.2}x, max relative U difference {:.2e}",
        report.fast_speedup, report.fast_vs_naive_max_rel_diff
    );
    let value = serde_json::to_value(&report)
        .map_err(|e| CoreError::data(None, format!("JSON serialization failed: {e}")))?;
    emit_json(&value, args.out.as_deref())?;
    Ok(0)
}

fn verify(suite: &str, out: Option<PathBuf>) -> Result<u8, CoreError> {
    let suite: Suite = suite.parse()?;
    let report = run_suite(suite);
    for c in &report.checks {
        println!("{} {} - {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let value = serde_json::to_value(&report)
        .map_err(|e| CoreError::data(None, format!("JSON serialization failed: {e}")))?;
    if let Some(path) = out {
        std::fs::write(&path, format!("{value:#}\n"))?;
    }
    if report.all_passed() {
        println!("suite {} passed ({} checks)", report.suite, report.checks.len());
        Ok(0)
    } else {
        eprintln!("suite {} FAILED", report.suite);
        Ok(3)
    }
}

fn synth_adversarial(args: SynthAdversarialArgs) -> Result<u8, CoreError> {
    let spec = AdversarialSpec { m: args.m, k: args.k, alpha: args.alpha };
    let a = build_block_adversarial::<f64>(&spec)?;
    match args.format.as_str() {
        "bin" | "nysd" => io::write_symmetric_binary(&args.out, &a)?,
        "csv" => io::write_dense_csv(&args.out, &a.to_dense())?,
        other => return Err(CoreError::parameter(format!("unknown output format '{other}'"))),
    }
    let residual = adversarial_residual_norm::<f64>(&spec)?;
    let mut report = serde_json::json!({
        "m": args.m,
        "k": args.k,
        "alpha": args.alpha,
        "best_rank_k_residual_fro": residual,
        "file": args.out.display().to_string(),
    });
    if let Some(c) = args.c {
        report["lower_bound_c"] = serde_json::json!(c);
        report["modified_squared_error_lower_bound"] =
            serde_json::json!(lower_bound_value(args.m, args.k, c, args.alpha)?);
    }
    emit_json(&report, args.report.as_deref())?;
    Ok(0)
}

fn parse_list(text: &str, what: &str) -> Result<Vec<usize>, CoreError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CoreError::parameter(format!("bad {what} value '{s}'")))
        })
        .collect()
}

fn emit_json(value: &serde_json::Value, path: Option<&std::path::Path>) -> Result<(), CoreError> {
    let text = format!("{value:#}\n");
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
