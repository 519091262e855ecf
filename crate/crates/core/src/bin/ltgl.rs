use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ltgl::datagen::{self, GeneratorConfig, Perturbation};
use ltgl::evaluation::{self, CandidateScore, MccvPlan};
use ltgl::io::{self, RunConfig};
use ltgl::{empirical_covariances, solver, Error, Hyperparameters, PenaltyKind, Result};

#[derive(Parser)]
#[command(
    name = "ltgl",
    version,
    about = "Latent-variable time-varying graphical lasso"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground truth.
    Generate(GenerateArgs),
    /// Fit a model to a dataset.
    Fit(FitArgs),
    /// Score an estimate against ground truth.
    Evaluate(EvaluateArgs),
    /// Choose hyperparameters by Monte Carlo cross-validation.
    Select(SelectArgs),
    /// Frobenius deviation between consecutive time points.
    Deviation(DeviationArgs),
    /// Time fits over a sweep of dimensions.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct Common {
    /// TOML file with [hyperparameters], [generator], [mccv] and [grid] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(p) => io::read_config(p),
            None => Ok(RunConfig::default()),
        }
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.output_dir).map_err(|source| Error::Io {
            path: self.output_dir.clone(),
            source,
        })?;
        Ok(self.output_dir.join(name))
    }
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// Use `inf` to switch the latent component off.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    psi: Option<PenaltyKind>,
    #[arg(long)]
    phi: Option<PenaltyKind>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
}

impl HyperArgs {
    fn apply(&self, mut hp: Hyperparameters) -> Hyperparameters {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { hp.$f = v; } )* };
        }
        set!(alpha, tau, beta, eta, rho, psi, phi, max_iter, eps_abs, eps_rel);
        hp
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    d: Option<usize>,
    /// Number of latent variables.
    #[arg(long = "latent", short = 'H')]
    latent: Option<usize>,
    #[arg(long = "time-points", short = 'T')]
    time_points: Option<usize>,
    /// Samples per time point.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_parser = parse_perturbation)]
    kind: Option<Perturbation>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    sparsity: Option<f64>,
}

fn parse_perturbation(s: &str) -> std::result::Result<Perturbation, String> {
    match s {
        "p1" => Ok(Perturbation::P1),
        "p2" => Ok(Perturbation::P2),
        _ => Err(format!("unknown perturbation `{s}` (expected p1 or p2)")),
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Use raw second moments instead of centering each block.
    #[arg(long)]
    no_center: bool,
    /// Include the per-iteration residuals in the output.
    #[arg(long)]
    history: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// Ground-truth (or reference estimate) JSON.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    tau_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    eta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    psi_grid: Vec<PenaltyKind>,
    #[arg(long, value_delimiter = ',')]
    phi_grid: Vec<PenaltyKind>,
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    no_center: bool,
}

#[derive(Args)]
struct DeviationArgs {
    #[command(flatten)]
    common: Common,
    /// Estimate or ground-truth JSON.
    #[arg(long)]
    estimate: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
    dims: Vec<usize>,
    #[arg(long = "time-points", short = 'T', default_value_t = 5)]
    time_points: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Select(a) => select(a),
        Command::Deviation(a) => deviation(a),
        Command::Benchmark(a) => benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::InvalidData(e.to_string()))?;
    s.push('\n');
    io::write_atomic(path, s.as_bytes())
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let mut cfg = a.common.load()?.generator;
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { cfg.$f = v; } )* };
    }
    set!(d, latent, time_points, n, kind, epsilon, sparsity);
    if let Some(s) = a.common.seed {
        cfg.seed = s;
    }
    let (truth, data) = datagen::generate_dataset(&cfg)?;
    io::write_dataset(&a.common.out("dataset.csv")?, &data)?;
    io::write_truth(&a.common.out("truth.json")?, &truth)?;
    #[derive(Serialize)]
    struct Manifest<'a> {
        seed: u64,
        generator: &'a GeneratorConfig,
    }
    write_json(
        &a.common.out("manifest.json")?,
        &Manifest {
            seed: cfg.seed,
            generator: &cfg,
        },
    )?;
    println!(
        "wrote {} blocks of {}x{} to {}",
        data.time_points(),
        cfg.n,
        cfg.d,
        a.common.output_dir.display()
    );
    Ok(())
}

fn load_covariances(path: &Path, center: bool) -> Result<ltgl::CovarianceSequence> {
    let data = io::read_dataset(path)?;
    Ok(if center {
        empirical_covariances(&data.centered())
    } else {
        empirical_covariances(&data)
    })
}

fn fit(a: &FitArgs) -> Result<()> {
    let hp = a.hyper.apply(a.common.load()?.hyperparameters);
    let covs = load_covariances(&a.data, !a.no_center)?;
    let est = solver::fit(&covs, &hp, None)?;
    io::write_estimate(&a.common.out("estimate.json")?, &est, a.history)?;
    println!(
        "{} after {} iterations (mode {}), objective {}",
        if est.converged {
            "converged"
        } else {
            "stopped"
        },
        est.iterations,
        solver::mode_of(&hp).label(),
        est.objective_value
    );
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let (tt, tl) = io::read_network_pair(&a.truth)?;
    let (et, el) = io::read_network_pair(&a.estimate)?;
    let s = evaluation::score(&tt, &tl, &et, &el)?;
    write_json(&a.common.out("evaluation.json")?, &s)?;
    println!(
        "F1 {}  ACC {}  MRE {}  MSE {}",
        s.f1, s.accuracy, s.mre, s.mse
    );
    Ok(())
}

fn select(a: &SelectArgs) -> Result<()> {
    let cfg = a.common.load()?;
    let base = a.hyper.apply(cfg.hyperparameters);
    let mut grid = cfg.grid.clone();
    macro_rules! set {
        ($($flag:ident => $f:ident),*) => { $( if !a.$flag.is_empty() { grid.$f = a.$flag.clone(); } )* };
    }
    set!(alpha_grid => alpha, tau_grid => tau, beta_grid => beta, eta_grid => eta, psi_grid => psi, phi_grid => phi);
    let mut plan = cfg.mccv;
    if let Some(v) = a.nu {
        plan.nu = v;
    }
    if let Some(v) = a.repeats {
        plan.repeats = v;
    }
    if let Some(v) = a.common.seed {
        plan.seed = v;
    }
    if a.no_center {
        plan.center = false;
    } else if a.common.config.is_none() {
        plan.center = true;
    }
    let data = io::read_dataset(&a.data)?;
    let sel = evaluation::select_hyperparams(&data, &grid.expand(&base), &plan)?;
    #[derive(Serialize)]
    struct Report<'a> {
        best: &'a Hyperparameters,
        plan: &'a MccvPlan,
        table: Vec<Row<'a>>,
    }
    #[derive(Serialize)]
    struct Row<'a> {
        params: &'a Hyperparameters,
        /// `null` for candidates with an infeasible fit.
        mean_loglik: Option<f64>,
    }
    let table = sel
        .table
        .iter()
        .map(|c: &CandidateScore| Row {
            params: &c.params,
            mean_loglik: c.mean_loglik.is_finite().then_some(c.mean_loglik),
        })
        .collect();
    write_json(
        &a.common.out("selection.json")?,
        &Report {
            best: &sel.best,
            plan: &plan,
            table,
        },
    )?;
    let b = &sel.best;
    println!(
        "best alpha {} tau {} beta {} eta {} psi {} phi {}",
        b.alpha, b.tau, b.beta, b.eta, b.psi, b.phi
    );
    Ok(())
}

fn deviation(a: &DeviationArgs) -> Result<()> {
    let (theta, lowrank) = io::read_network_pair(&a.estimate)?;
    let marginal: Vec<_> = theta.iter().zip(&lowrank).map(|(t, l)| t.sub(l)).collect();
    let dt = evaluation::temporal_deviation(&theta)?;
    let dl = evaluation::temporal_deviation(&lowrank)?;
    let dr = evaluation::temporal_deviation(&marginal)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidData(e.to_string());
    w.write_record(["step", "theta", "lowrank", "marginal"])
        .map_err(csv_err)?;
    for i in 0..dt.len() {
        w.write_record([
            format!("{}-{}", i + 1, i + 2),
            dt[i].to_string(),
            dl[i].to_string(),
            dr[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    io::write_atomic(&a.common.out("deviation.csv")?, &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}

fn benchmark(a: &BenchmarkArgs) -> Result<()> {
    let cfg = a.common.load()?;
    let hp = a.hyper.apply(cfg.hyperparameters);
    let seed = a.common.seed.unwrap_or(cfg.generator.seed);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidData(e.to_string());
    w.write_record(["d", "T", "seconds", "iterations", "converged"])
        .map_err(csv_err)?;
    println!("d\tT\tseconds\titerations\tconverged");
    for &d in &a.dims {
        let gen = GeneratorConfig {
            d,
            time_points: a.time_points,
            n: a.n,
            seed,
            latent: cfg.generator.latent.min(d.saturating_sub(1)),
            ..cfg.generator.clone()
        };
        let (_, data) = datagen::generate_dataset(&gen)?;
        let covs = empirical_covariances(&data.centered());
        let start = Instant::now();
        let est = solver::fit(&covs, &hp, None)?;
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{d}\t{}\t{secs:.3}\t{}\t{}",
            a.time_points, est.iterations, est.converged
        );
        w.write_record([
            d.to_string(),
            a.time_points.to_string(),
            secs.to_string(),
            est.iterations.to_string(),
            est.converged.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    io::write_atomic(&a.common.out("benchmark.csv")?, &bytes)
}
