//! The `gbt` command line: `fit`, `sample`, `check` and `experiment`.
//!
//! Exit codes: 0 success, 2 input error, 3 solver error, 4 value outside the
//! model's support, 5 property violation. Every command writes a
//! `manifest.txt` of `key=value` lines into `--out-dir`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::comparisons::ComparisonMatrix;
use crate::error::{Error, Result};
use crate::properties::{
    admissible_increases, check_monotone_step, gaussian_scaling_probe, measure_resilience, monotonicity_sweep,
    monte_carlo_moments, MonotoneOutcome, ProbeConfig,
};
use crate::rootlaw::{Family, RootLaw};
use crate::sim::{erdos_renyi_graph, run_experiment, sample_ground_truth, stage_rng, synthesize_comparisons, Experiment, ExperimentConfig, FULL_ALTERNATIVES};
use crate::solver::{map_estimate, PriorConfig, ScoreVector, SolveReport, SolverOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;
pub const EXIT_VIOLATION: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "gbt", version, about = "Generalized Bradley-Terry scoring from pairwise comparisons")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Root law, e.g. `uniform`, `knary:K=21`, `gaussian:sigma0sq=1` [default: uniform]
    #[arg(long, global = true)]
    model: Option<String>,
    /// Prior variance σ² [default: 1]
    #[arg(long = "sigma-sq", global = true)]
    sigma_sq: Option<f64>,
    /// [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// [default: .]
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,
    /// Certified ℓ₂ distance to the exact scores [default: 1e-8]
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// [default: 200]
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Worker threads for experiment sweeps [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key=value` file of defaults for the flags above; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log solver progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit scores to a comparisons CSV (`a,b,r`)
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Synthesize comparisons on an Erdős–Rényi graph
    Sample {
        /// Ground-truth scores CSV (`a,theta`)
        #[arg(long, conflicts_with_all = ["a", "sigma_dagger_sq"])]
        scores: Option<PathBuf>,
        /// Number of alternatives when sampling the ground truth
        #[arg(long)]
        a: Option<usize>,
        /// Ground-truth score variance
        #[arg(long = "sigma-dagger-sq", default_value_t = 1.0)]
        sigma_dagger_sq: f64,
        /// Edge probability
        #[arg(long)]
        pc: f64,
    },
    /// Run property diagnostics
    Check {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Check monotonicity on this comparisons CSV instead of random instances
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 200)]
        probes: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Run one of the three reconstruction experiments
    Experiment {
        #[arg(long, value_enum)]
        which: Which,
        /// Number of seeds, run as seed+1 ..= seed+N
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Alternatives [default: 50]
        #[arg(long)]
        alternatives: Option<usize>,
        /// Use 500 alternatives
        #[arg(long)]
        full_scale: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Monotonicity,
    Resilience,
    Moments,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Sparsity,
    Discretization,
    Regularization,
}

impl From<Which> for Experiment {
    fn from(w: Which) -> Self {
        match w {
            Which::Sparsity => Experiment::Sparsity,
            Which::Discretization => Experiment::Discretization,
            Which::Regularization => Experiment::Regularization,
        }
    }
}

/// Maps a library error to its exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::OutOfSupport { .. } => EXIT_DOMAIN,
        Error::Diverged { .. } | Error::Numeric(_) | Error::Disconnected => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

/// Flags after merging the config file and defaults.
#[derive(Debug, Clone)]
struct Settings {
    model: RootLaw,
    sigma_sq: f64,
    seed: u64,
    out_dir: PathBuf,
    solver: SolverOptions,
    threads: Option<usize>,
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Csv {
            row: i + 1,
            message: format!("config line `{line}` is not key=value"),
        })?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

fn resolve(global: &GlobalArgs) -> Result<Settings> {
    let file = match &global.config {
        Some(p) => read_config(p)?,
        None => BTreeMap::new(),
    };
    for key in file.keys() {
        if !["model", "sigma-sq", "seed", "out-dir", "tolerance", "max-iter", "threads"].contains(&key.as_str()) {
            return Err(Error::InvalidArgument(format!("unknown config key `{key}`")));
        }
    }
    fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match file.get(key) {
            Some(s) => s
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("config value `{s}` for `{key}` is invalid"))),
            None => Ok(default),
        }
    }
    let model: String = pick(global.model.clone(), &file, "model", "uniform".to_string())?;
    let sigma_sq = pick(global.sigma_sq, &file, "sigma-sq", 1.0)?;
    let tolerance = pick(global.tolerance, &file, "tolerance", SolverOptions::default().tolerance)?;
    let max_iterations = pick(global.max_iter, &file, "max-iter", SolverOptions::default().max_iterations)?;
    let threads = match global.threads {
        Some(t) => Some(t),
        None => file.get("threads").map(|s| s.parse()).transpose().map_err(|_| Error::InvalidArgument("bad threads value".into()))?,
    };
    if threads == Some(0) {
        return Err(Error::InvalidArgument("threads must be positive".into()));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")));
    }
    Ok(Settings {
        model: model.parse()?,
        sigma_sq,
        seed: pick(global.seed, &file, "seed", 0)?,
        out_dir: pick(global.out_dir.clone(), &file, "out-dir", PathBuf::from("."))?,
        solver: SolverOptions {
            tolerance,
            max_iterations,
            verbosity: global.verbose as u8,
            ..SolverOptions::default()
        },
        threads,
    })
}

/// Everything needed to repeat a run, written as `manifest.txt`.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub model: String,
    pub sigma_sq: f64,
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub solver: SolverOptions,
    pub extra: Vec<(String, String)>,
    pub version: String,
}

impl RunManifest {
    fn new(command: &str, settings: &Settings) -> Self {
        Self {
            command: command.to_string(),
            model: settings.model.to_string(),
            sigma_sq: settings.sigma_sq,
            inputs: Vec::new(),
            out_dir: settings.out_dir.clone(),
            seed: settings.seed,
            solver: settings.solver,
            extra: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "model={}", self.model);
        let _ = writeln!(s, "sigma_sq={}", self.sigma_sq);
        for p in &self.inputs {
            let _ = writeln!(s, "input={}", p.display());
        }
        let _ = writeln!(s, "out_dir={}", self.out_dir.display());
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "tolerance={}", self.solver.tolerance);
        let _ = writeln!(s, "max_iter={}", self.solver.max_iterations);
        let _ = writeln!(s, "linear_solver={:?}", self.solver.linear_solver);
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k}={v}");
        }
        let _ = writeln!(s, "version={}", self.version);
        s
    }

    fn write(&self) -> Result<()> {
        fs::write(self.out_dir.join("manifest.txt"), self.render())?;
        Ok(())
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot open {}: {e}", path.display()))
    })?))
}

fn report_text(report: &SolveReport) -> String {
    format!(
        "iterations={}\nfinal_gradient_norm={}\ncertified_error={}\nconverged={}\nobjective={}\n",
        report.iterations, report.final_gradient_norm, report.certified_error, report.converged, report.objective
    )
}

fn cmd_fit(settings: &Settings, input: &Path) -> Result<i32> {
    let r = ComparisonMatrix::read_csv(open(input)?, Some(&settings.model))?;
    let prior = PriorConfig::new(settings.sigma_sq)?;
    let mut manifest = RunManifest::new("fit", settings);
    manifest.inputs.push(input.to_path_buf());
    manifest.write()?;
    let outcome = map_estimate(&settings.model, &prior, &r, &settings.solver);
    let (scores, report) = match outcome {
        Ok(x) => x,
        Err(Error::Diverged { report }) => {
            fs::write(settings.out_dir.join("solve_report.txt"), report_text(&report))?;
            return Err(Error::Diverged { report });
        }
        Err(e) => return Err(e),
    };
    scores.write_csv(create(&settings.out_dir, "scores.csv")?)?;
    fs::write(settings.out_dir.join("solve_report.txt"), report_text(&report))?;
    println!(
        "fitted {} alternatives in {} Newton steps, certified error {:.3e}",
        scores.len(),
        report.iterations,
        report.certified_error
    );
    Ok(EXIT_OK)
}

fn cmd_sample(settings: &Settings, scores: Option<&Path>, a: Option<usize>, sigma_dagger_sq: f64, pc: f64) -> Result<i32> {
    let truth = match (scores, a) {
        (Some(path), _) => ScoreVector::read_csv(open(path)?)?,
        (None, Some(n)) => sample_ground_truth(n, sigma_dagger_sq, &mut stage_rng(settings.seed, 0))?,
        (None, None) => return Err(Error::InvalidArgument("give either --scores or --a".into())),
    };
    let pairs = erdos_renyi_graph(truth.len(), pc, &mut stage_rng(settings.seed, 1))?;
    let r = synthesize_comparisons(&settings.model, &truth, &pairs, &mut stage_rng(settings.seed, 2))?;
    r.write_csv(create(&settings.out_dir, "comparisons.csv")?)?;
    truth.write_csv(create(&settings.out_dir, "ground_truth.csv")?)?;
    let mut manifest = RunManifest::new("sample", settings).with("pc", pc);
    match scores {
        Some(path) => manifest.inputs.push(path.to_path_buf()),
        None => manifest = manifest.with("a", truth.len()).with("sigma_dagger_sq", sigma_dagger_sq),
    }
    manifest.write()?;
    println!("sampled {} comparisons over {} alternatives", r.len(), truth.len());
    Ok(EXIT_OK)
}

struct Row {
    name: String,
    status: &'static str,
    detail: String,
}

fn check_monotonicity(settings: &Settings, prior: &PriorConfig, input: Option<&Path>, instances: usize) -> Result<Row> {
    let law = &settings.model;
    let (strict, inconclusive, violated, checks) = match input {
        Some(path) => {
            let r = ComparisonMatrix::read_csv(open(path)?, Some(law))?;
            let mut counts = (0, 0, 0, 0);
            for (a, b, delta) in admissible_increases(law, &r) {
                match check_monotone_step(law, prior, &r, a, b, delta, &settings.solver)?.outcome {
                    MonotoneOutcome::Strict => counts.0 += 1,
                    MonotoneOutcome::Inconclusive => counts.1 += 1,
                    MonotoneOutcome::Violated => counts.2 += 1,
                }
                counts.3 += 1;
            }
            counts
        }
        None => {
            let s = monotonicity_sweep(law, prior, instances, settings.seed, &settings.solver)?;
            (s.strict, s.inconclusive, s.violated, s.checks)
        }
    };
    Ok(Row {
        name: "monotonicity".into(),
        status: if violated == 0 { "pass" } else { "FAIL" },
        detail: format!("{checks} steps: {strict} strict, {inconclusive} inconclusive, {violated} violated"),
    })
}

fn check_resilience(settings: &Settings, prior: &PriorConfig, probes: usize) -> Result<Row> {
    let law = &settings.model;
    let config = ProbeConfig { probes, seed: settings.seed, solver: settings.solver, ..ProbeConfig::default() };
    let probe = measure_resilience(law, prior, &config)?;
    probe.write_csv(create(&settings.out_dir, "resilience.csv")?)?;
    let mut detail = format!("max ratio {:.4} against bound {:.4}", probe.observed_ratio, probe.bound);
    if law.family() == Family::Gaussian {
        let mut rng = stage_rng(settings.seed, 3);
        let alts = Arc::new(crate::comparisons::AlternativeSet::numbered(config.alternatives)?);
        let truth = ScoreVector::new(alts, (0..config.alternatives).map(|i| i as f64 / 4.0 - 0.5).collect())?;
        let pairs = erdos_renyi_graph(config.alternatives, 1.0, &mut rng)?;
        let r = synthesize_comparisons(law, &truth, &pairs, &mut rng)?;
        let points = gaussian_scaling_probe(law, prior, &r, &[10.0, 100.0, 1000.0], &settings.solver)?;
        let ratios: Vec<String> = points.iter().map(|p| format!("{:.3}", p.ratio)).collect();
        let _ = write!(detail, "; scaling R by 10, 100, 1000 gives ratios {} (unbounded)", ratios.join(", "));
    }
    Ok(Row {
        name: "resilience".into(),
        status: if probe.within_bound() { "pass" } else { "FAIL" },
        detail,
    })
}

fn check_moments(settings: &Settings, samples: usize) -> Result<Row> {
    let mut rng = stage_rng(settings.seed, 4);
    let mut worst: f64 = 0.0;
    for theta in [-2.0, 0.0, 2.0] {
        let c = monte_carlo_moments(&settings.model, theta, samples, &mut rng)?;
        worst = worst.max(c.mean_z).max(c.variance_z);
    }
    Ok(Row {
        name: "moments".into(),
        status: if worst <= 5.0 { "pass" } else { "FAIL" },
        detail: format!("largest deviation {worst:.2} standard errors over θ ∈ {{-2, 0, 2}}"),
    })
}

fn cmd_check(
    settings: &Settings,
    suite: Suite,
    input: Option<&Path>,
    instances: usize,
    probes: usize,
    samples: usize,
) -> Result<i32> {
    let prior = PriorConfig::new(settings.sigma_sq)?;
    let mut rows = Vec::new();
    if matches!(suite, Suite::Monotonicity | Suite::All) {
        rows.push(check_monotonicity(settings, &prior, input, instances)?);
    }
    if matches!(suite, Suite::Resilience | Suite::All) {
        rows.push(check_resilience(settings, &prior, probes)?);
    }
    if matches!(suite, Suite::Moments | Suite::All) {
        rows.push(check_moments(settings, samples)?);
    }
    let mut manifest = RunManifest::new("check", settings)
        .with("suite", format!("{suite:?}").to_lowercase())
        .with("instances", instances)
        .with("probes", probes)
        .with("samples", samples);
    if let Some(p) = input {
        manifest.inputs.push(p.to_path_buf());
    }
    manifest.write()?;
    for row in &rows {
        println!("{:<14} {:<5} {}", row.name, row.status, row.detail);
    }
    Ok(if rows.iter().all(|r| r.status == "pass") { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_experiment(settings: &Settings, which: Which, seeds: u64, alternatives: Option<usize>, full_scale: bool) -> Result<i32> {
    let which = Experiment::from(which);
    let mut config = ExperimentConfig::desk(which);
    if full_scale {
        config.alternatives = FULL_ALTERNATIVES;
    }
    if let Some(n) = alternatives {
        config.alternatives = n;
    }
    config.seeds = (settings.seed + 1..=settings.seed + seeds).collect();
    config.solver = settings.solver;
    if which != Experiment::Regularization {
        config.prior = PriorConfig::new(settings.sigma_sq)?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = settings.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let result = pool.install(|| run_experiment(which, &config))?;

    result.write_per_seed_csv(create(&settings.out_dir, "per_seed.csv")?)?;
    result.write_summary_csv(create(&settings.out_dir, "summary.csv")?)?;
    let mut manifest = RunManifest::new("experiment", settings)
        .with("which", which.name())
        .with("alternatives", config.alternatives)
        .with("seeds", format!("{}..={}", settings.seed + 1, settings.seed + seeds))
        .with("p_c", config.p_c)
        .with("sigma_dagger_sq", config.sigma_dagger_sq)
        .with("gen_law", &config.gen_law)
        .with("fit_laws", config.fit_laws.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";"))
        .with("sweep", config.sweep.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"));
    manifest.model = config.fit_laws[0].to_string();
    if which == Experiment::Regularization {
        manifest.sigma_sq = f64::NAN;
    }
    for note in &result.notes {
        manifest = manifest.with("note", note);
    }
    manifest.write()?;

    println!("{:<20} {:>12} {:>12}", "param", "mean", "std");
    for p in &result.points {
        let flag = if p.failed() { "  (failed seeds)" } else { "" };
        println!("{:<20} {:>12.6} {:>12.6}{flag}", p.param, p.mean, p.std);
    }
    for p in &result.points {
        for (seed, msg) in &p.failures {
            eprintln!("{} seed {seed}: {msg}", p.param);
        }
    }
    Ok(if result.has_failures() { EXIT_SOLVER } else { EXIT_OK })
}

fn dispatch(cli: Cli) -> Result<i32> {
    let settings = resolve(&cli.global)?;
    if cli.global.verbose {
        let _ = env_logger::Builder::new().filter_level(log::LevelFilter::Debug).try_init();
    }
    fs::create_dir_all(&settings.out_dir)?;
    match cli.command {
        Command::Fit { input } => cmd_fit(&settings, &input),
        Command::Sample { scores, a, sigma_dagger_sq, pc } => cmd_sample(&settings, scores.as_deref(), a, sigma_dagger_sq, pc),
        Command::Check { suite, input, instances, probes, samples } => {
            cmd_check(&settings, suite, input.as_deref(), instances, probes, samples)
        }
        Command::Experiment { which, seeds, alternatives, full_scale } => {
            cmd_experiment(&settings, which, seeds, alternatives, full_scale)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
