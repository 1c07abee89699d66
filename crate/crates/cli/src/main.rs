//! Single binary exposing the simulate / select / analyze / oracle /
//! experiment pipeline over CSV datasets and versioned JSON artifacts.
//!
//! Exit codes: 0 success, 2 validation/usage errors, 3 enumeration guard
//! exceeded, 4 solver non-convergence or divergence. All randomness flows
//! from the `--seed` flags; a `--threads` cap changes wall time only, never
//! any output byte.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use weaksub::analysis::{
    bound_oblivious, bound_omp, bound_theorem1, concavity_profile, verify_trace, AnalysisReport,
    ConcavityParams, EXHAUSTIVE_P_LIMIT,
};
use weaksub::datagen::{
    appendix_a_instance, ar1_design, derive_seed, gaussian_design, linear_responses,
    logistic_responses, rademacher_sparse_beta, CovarianceModel,
};
use weaksub::evaluate::{brute_force_best_subset, run_experiment, ExperimentConfig, MetricKind};
use weaksub::io;
use weaksub::model::{Algorithm, Dataset, LabelEncoding, SelectionTrace, Support, SCHEMA_VERSION};
use weaksub::select::{
    foba_select_with, forward_stepwise_with, oblivious_select_with, omp_select_with, SelectOptions,
};
use weaksub::solver::SolverConfig;
use weaksub::{Error, ObjectiveSpec};

#[derive(Parser)]
#[command(
    name = "weaksub",
    about = "Greedy subset selection over concave objectives, with curvature and bound analysis",
    version,
    arg_required_else_help = true
)]
struct Cli {
    /// Cap worker parallelism (default: all cores). Outputs are identical
    /// for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Simulate(SimulateArgs),
    /// Run one support-selection algorithm and write its trace.
    Select(SelectArgs),
    /// Compute curvature parameters and (optionally) verify every bound.
    Analyze(AnalyzeArgs),
    /// Exhaustive best k-subset by brute force.
    Oracle(OracleArgs),
    /// The seeded multi-run synthetic experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    /// AR(1) rows with logistic responses.
    Ar1Logistic,
    /// N(0, I + 11ᵀ) rows with linear responses.
    LinearGaussian,
    /// N(0, (1−a)I + a11ᵀ) rows with linear responses.
    Spiked,
    /// The fixed 3-feature worst-case regression instance.
    AppendixA,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long, default_value_t = 600)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    p: usize,
    /// AR(1) coefficient.
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    /// AR(1) innovation variance.
    #[arg(long, default_value_t = 5.0)]
    sigma2: f64,
    /// True support size for the planted coefficients.
    #[arg(long, default_value_t = 50)]
    k_true: usize,
    /// Squared norm of the planted coefficients.
    #[arg(long, default_value_t = 5.0)]
    beta_norm2: f64,
    /// Noise standard deviation for linear responses.
    #[arg(long, default_value_t = 1.0)]
    sigma_noise: f64,
    /// Spike weight for the spiked covariance model.
    #[arg(long, default_value_t = 0.5)]
    cov_a: f64,
    /// Appendix-style instance parameter, 0 < z < 0.5.
    #[arg(long, default_value_t = 0.1)]
    z: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a header row (x0..x{p-1},y).
    #[arg(long)]
    header: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the planted support and coefficients as JSON.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Oblivious,
    Fs,
    Omp,
    Foba,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Oblivious => Algorithm::Oblivious,
            AlgoArg::Fs => Algorithm::ForwardStepwise,
            AlgoArg::Omp => Algorithm::Omp,
            AlgoArg::Foba => Algorithm::Foba,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Ls,
    Logistic,
    LogisticL2,
}

#[derive(Args)]
struct ObjectiveOpts {
    #[arg(long, value_enum)]
    objective: ObjectiveArg,
    /// ℓ2 weight (logistic-l2 only).
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
}

impl ObjectiveOpts {
    fn spec(&self) -> Result<ObjectiveSpec, Error> {
        match self.objective {
            ObjectiveArg::Ls => Ok(ObjectiveSpec::least_squares()),
            ObjectiveArg::Logistic => Ok(ObjectiveSpec::logistic()),
            ObjectiveArg::LogisticL2 => ObjectiveSpec::logistic_l2(self.eta),
        }
    }
}

#[derive(Args)]
struct SolverOpts {
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
}

impl SolverOpts {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct DataOpts {
    #[arg(long)]
    data: PathBuf,
    /// The CSV has a header row.
    #[arg(long)]
    has_header: bool,
}

impl DataOpts {
    fn load(&self, spec: &ObjectiveSpec) -> Result<Dataset, Error> {
        let encoding = if spec.is_logistic() {
            LabelEncoding::Binary01
        } else {
            LabelEncoding::Real
        };
        io::read_dataset_csv(&self.data, self.has_header, encoding)
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Target sparsity (iterations for fs/omp).
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    objective: ObjectiveOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Append a bias column that is always in the support and exempt from
    /// selection.
    #[arg(long)]
    add_bias: bool,
    /// Recorded in the trace for provenance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    objective: ObjectiveOpts,
    #[command(flatten)]
    solver: SolverOpts,
    #[arg(long)]
    k: usize,
    /// Verify every applicable bound against the brute-force optimum using
    /// exhaustive submodularity ratios (requires desk scale: p ≤ 14).
    #[arg(long)]
    exhaustive_gamma: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    objective: ObjectiveOpts,
    #[command(flatten)]
    solver: SolverOpts,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; defaults reproduce the AR(1) logistic
    /// setting.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// `csv` writes `<out>` plus a `.summary.csv` sibling; `json` writes a
    /// single document.
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Print the default configuration as JSON and exit.
    #[arg(long)]
    print_default_config: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("global thread pool initialized once");
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::GuardExceeded { .. } => 3,
        Error::NonConvergence { .. }
        | Error::PerfectSeparation { .. }
        | Error::NonTermination { .. } => 4,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Select(args) => select(args),
        Command::Analyze(args) => analyze(args),
        Command::Oracle(args) => oracle(args),
        Command::Experiment(args) => experiment(args),
    }
}

#[derive(Serialize)]
struct TruthFile {
    schema_version: u32,
    seed: u64,
    support: Vec<usize>,
    beta: Vec<f64>,
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let (data, truth) = match args.model {
        Model::AppendixA => (appendix_a_instance(args.z)?, None),
        Model::Ar1Logistic => {
            let x = ar1_design(args.n, args.p, args.alpha, args.sigma2, derive_seed(args.seed, 0))?;
            let beta = rademacher_sparse_beta(
                args.p,
                args.k_true,
                args.beta_norm2,
                derive_seed(args.seed, 1),
            )?;
            let y = logistic_responses(&x, &beta, derive_seed(args.seed, 2))?;
            (Dataset::new(x, y, LabelEncoding::Binary01)?, Some(beta))
        }
        Model::LinearGaussian | Model::Spiked => {
            let cov = if args.model == Model::Spiked {
                CovarianceModel::Spiked(args.cov_a)
            } else {
                CovarianceModel::IdentityPlusOnes
            };
            let x = gaussian_design(args.n, args.p, cov, derive_seed(args.seed, 0))?;
            let beta = rademacher_sparse_beta(
                args.p,
                args.k_true,
                args.beta_norm2,
                derive_seed(args.seed, 1),
            )?;
            let y = linear_responses(&x, &beta, args.sigma_noise, derive_seed(args.seed, 2))?;
            (Dataset::new(x, y, LabelEncoding::Real)?, Some(beta))
        }
    };
    io::write_dataset_csv(&args.out, &data, args.header)?;
    println!(
        "wrote {}x{} dataset to {} (seed {})",
        data.n(),
        data.p(),
        args.out.display(),
        args.seed
    );
    if let Some(path) = args.truth_out {
        match &truth {
            Some(beta) => {
                io::write_json(
                    &path,
                    &TruthFile {
                        schema_version: SCHEMA_VERSION,
                        seed: args.seed,
                        support: beta.support().as_slice().to_vec(),
                        beta: beta.beta().to_vec(),
                    },
                )?;
                println!("wrote truth to {}", path.display());
            }
            None => {
                return Err(Error::InvalidParameter(
                    "this model has no planted coefficients to write".into(),
                ))
            }
        }
    }
    Ok(())
}

fn run_algorithm(
    algo: Algorithm,
    spec: &ObjectiveSpec,
    data: &Dataset,
    k: usize,
    config: &SolverConfig,
    options: &SelectOptions,
) -> Result<SelectionTrace, Error> {
    match algo {
        Algorithm::Oblivious => oblivious_select_with(spec, data, k, config, options),
        Algorithm::ForwardStepwise => forward_stepwise_with(spec, data, k, config, options),
        Algorithm::Omp => omp_select_with(spec, data, k, config, options),
        Algorithm::Foba => foba_select_with(spec, data, k, config, options),
    }
}

/// R² of a least-squares set-function value.
fn r_squared(f: f64, data: &Dataset) -> f64 {
    let ss: f64 = data.y().iter().map(|v| v * v).sum();
    f * 2.0 * data.n() as f64 / ss
}

fn select(args: SelectArgs) -> Result<(), Error> {
    let spec = args.objective.spec()?;
    let mut data = args.data.load(&spec)?;
    let mut options = SelectOptions {
        forced: Support::empty(),
        seed: args.seed,
    };
    if args.add_bias {
        let p = data.p();
        data = data.with_bias_column();
        options.forced = Support::singleton(p);
    }
    let config = args.solver.config();
    let algo: Algorithm = args.algo.into();
    let trace = run_algorithm(algo, &spec, &data, args.k, &config, &options)?;

    println!("algorithm: {}", trace.algorithm.name());
    println!("selected (in order): {:?}", trace.selection_order());
    println!("support: {:?}", trace.final_support().as_slice());
    println!("f(S): {:.10}", trace.final_f());
    if !spec.is_logistic() {
        println!("R^2: {:.10}", r_squared(trace.final_f(), &data));
    }
    if let Some(path) = args.out {
        io::write_json(&path, &trace)?;
        println!("wrote trace to {}", path.display());
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), Error> {
    let spec = args.objective.spec()?;
    let data = args.data.load(&spec)?;
    let config = args.solver.config();
    let (support, value) = brute_force_best_subset(&spec, &data, args.k, &config)?;
    println!("optimal k={} support: {:?}", args.k, support.as_slice());
    println!("f(S): {:.10}", value);
    if !spec.is_logistic() {
        println!("R^2: {:.10}", r_squared(value, &data));
    }
    if let Some(path) = args.out {
        #[derive(Serialize)]
        struct OracleFile {
            schema_version: u32,
            k: usize,
            support: Vec<usize>,
            f_value: f64,
        }
        io::write_json(
            &path,
            &OracleFile {
                schema_version: SCHEMA_VERSION,
                k: args.k,
                support: support.as_slice().to_vec(),
                f_value: value,
            },
        )?;
        println!("wrote oracle result to {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceSummary {
    algorithm: Algorithm,
    selected_in_order: Vec<usize>,
    support: Vec<usize>,
    f_value: f64,
}

#[derive(Serialize)]
struct BoundFactor {
    name: String,
    value: f64,
    certified: bool,
}

#[derive(Serialize)]
struct AnalyzeFile {
    schema_version: u32,
    objective: ObjectiveSpec,
    k: usize,
    n: usize,
    p: usize,
    params: Vec<ConcavityParams>,
    traces: Vec<TraceSummary>,
    bound_factors: Vec<BoundFactor>,
    /// Present only with `--exhaustive-gamma`.
    verification: Option<Vec<AnalysisReport>>,
}

fn analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let spec = args.objective.spec()?;
    let data = args.data.load(&spec)?;
    let config = args.solver.config();
    let k = args.k;
    let p = data.p();

    let sizes = {
        let mut v = vec![1, k, (2 * k).min(p)];
        v.sort_unstable();
        v.dedup();
        v
    };
    let params = concavity_profile(&spec, &data, &sizes)?;
    let by_k = |size: usize| -> &ConcavityParams {
        params.iter().find(|c| c.k == size).expect("size computed")
    };
    let p1 = *by_k(1);
    let pk = *by_k(k);
    let p2k = *by_k((2 * k).min(p));

    let mut bound_factors = Vec::new();
    let certified = params.iter().all(|c| c.is_certified());
    if pk.m > 0.0 {
        bound_factors.push(BoundFactor {
            name: "theorem1_gamma_lower_bound".into(),
            value: bound_theorem1(pk.m, p1.big_m_tilde)?,
            certified,
        });
        bound_factors.push(BoundFactor {
            name: "theorem3_oblivious_factor".into(),
            value: bound_oblivious(pk.m, p1.m, pk.big_m, p1.big_m, k)?,
            certified,
        });
    }
    if p2k.m > 0.0 {
        bound_factors.push(BoundFactor {
            name: "theorem7_omp_factor".into(),
            value: bound_omp(p2k.m, p2k.big_m, k, k)?,
            certified,
        });
    }

    let options = SelectOptions::default();
    let algorithms = [
        Algorithm::Oblivious,
        Algorithm::ForwardStepwise,
        Algorithm::Omp,
        Algorithm::Foba,
    ];
    let mut traces = Vec::new();
    let mut trace_objects = Vec::new();
    for algo in algorithms {
        let trace = run_algorithm(algo, &spec, &data, k, &config, &options)?;
        traces.push(TraceSummary {
            algorithm: algo,
            selected_in_order: trace.selection_order(),
            support: trace.final_support().as_slice().to_vec(),
            f_value: trace.final_f(),
        });
        trace_objects.push(trace);
    }

    let verification = if args.exhaustive_gamma {
        if p > EXHAUSTIVE_P_LIMIT {
            return Err(Error::GuardExceeded {
                what: "exhaustive verification dimension p".into(),
                limit: EXHAUSTIVE_P_LIMIT as u64,
                actual: p as u64,
            });
        }
        let mut reports = Vec::new();
        for trace in &trace_objects {
            reports.push(verify_trace(&spec, &data, &config, trace, k)?);
        }
        Some(reports)
    } else {
        None
    };

    for summary in &traces {
        println!(
            "{}: support {:?}, f(S) = {:.10}",
            summary.algorithm.name(),
            summary.support,
            summary.f_value
        );
    }
    if let Some(reports) = &verification {
        for report in reports {
            let passed = report.bound_checks.iter().filter(|c| c.pass).count();
            println!(
                "{}: {}/{} bound checks pass (f_opt = {:.10})",
                report.algorithm.name(),
                passed,
                report.bound_checks.len(),
                report.f_opt
            );
            for check in report.bound_checks.iter().filter(|c| !c.pass) {
                println!(
                    "  FAIL {}: lhs {:.6e} < rhs {:.6e} - slack",
                    check.theorem, check.lhs, check.rhs
                );
            }
        }
    }

    if let Some(path) = args.out {
        io::write_json(
            &path,
            &AnalyzeFile {
                schema_version: SCHEMA_VERSION,
                objective: spec,
                k,
                n: data.n(),
                p,
                params,
                traces,
                bound_factors,
                verification,
            },
        )?;
        println!("wrote report to {}", path.display());
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<(), Error> {
    if args.print_default_config {
        println!(
            "{}",
            serde_json::to_string_pretty(&ExperimentConfig::default())?
        );
        return Ok(());
    }
    let mut config: ExperimentConfig = match &args.config {
        Some(path) => io::read_json(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let results = run_experiment(&config)?;

    // Deterministic human summary: the normalized objective at the largest
    // sparsity level, per algorithm.
    let s_last = *config.grid().last().expect("nonempty grid");
    for &algo in &config.algorithms {
        if let Some(cell) = results.cell(algo, s_last, MetricKind::NormObj) {
            println!(
                "{} s={}: norm_obj mean {:.6} (se {:.6})",
                algo.name(),
                s_last,
                cell.mean,
                cell.stderr
            );
        }
    }

    if let Some(path) = args.out {
        match args.format {
            OutFormat::Csv => {
                io::write_experiment_outputs(&path, &results)?;
                println!("wrote results to {} (+ .summary.csv)", path.display());
            }
            OutFormat::Json => {
                io::write_json(&path, &results)?;
                println!("wrote results to {}", path.display());
            }
        }
    }
    Ok(())
}
