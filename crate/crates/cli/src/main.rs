//! `gsample`: sampling-set design for bandlimited graph signals.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use gsample_core::bench::{self, ScenarioConfig};
use gsample_core::design::{
    design_pipeline, invertibility_probability_bound, min_sample_size, Criterion, SolverOptions,
};
use gsample_core::estimation::{
    apply_noise, blue_estimate, error_covariance_for_allocation, reconstruction_error, sequence_from_allocation,
    standard_normal_vec, SnrReference,
};
use gsample_core::graph::{laplacian, load_edge_list, random_geometric, save_edge_list, watts_strogatz};
use gsample_core::rng::seeded;
use gsample_core::spectral::{eigendecompose, BandlimitedSpec};

#[derive(Parser)]
#[command(name = "gsample", version, about = "Sampling-set design for bandlimited graph signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random graph and write it as an edge list.
    GenerateGraph(GenerateArgs),
    /// Solve the relaxed design and quantize it to per-node sample quotas.
    Design(DesignArgs),
    /// Reconstruct a signal from samples taken according to a design.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo comparison and write per-trial CSV.
    Bench(BenchArgs),
    /// Minimum budget for invertibility with probability eta, and the
    /// probability bound at a given budget.
    Bound(BoundArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// `watts-strogatz` or `random-geometric`.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    /// Ring half-degree (watts-strogatz).
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Rewiring probability (watts-strogatz).
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Connection radius (random-geometric).
    #[arg(long, default_value_t = 0.6)]
    radius: f64,
    /// Gaussian kernel width (random-geometric).
    #[arg(long, default_value_t = 0.3)]
    kernel_width: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 3_000)]
    subgradient_iters: usize,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions { max_iter: self.max_iter, tol: self.tol, subgradient_iters: self.subgradient_iters }
    }
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    bandwidth: usize,
    #[arg(long)]
    budget: usize,
    /// a, d or e.
    #[arg(long, default_value = "a")]
    criterion: Criterion,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Design JSON written by `design`.
    #[arg(long)]
    design: PathBuf,
    /// Sample values, one per line, in the design's sampling order. When
    /// omitted a random bandlimited signal is simulated.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// SNR in dB for simulation; `inf` for noiseless.
    #[arg(long, default_value = "10")]
    snr_db: String,
    /// Power the SNR refers to: `samples` (sampled values) or `signal`
    /// (whole signal).
    #[arg(long, default_value = "samples")]
    snr_reference: SnrReference,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON scenario config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// g1-paper, g1-desk, g2-paper or g2-desk.
    #[arg(long)]
    preset: Option<String>,
    /// Signal model for presets: f1 or f2.
    #[arg(long, default_value = "f2")]
    signal: String,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides the configured SNR reference (`samples` or `signal`).
    #[arg(long)]
    snr_reference: Option<SnrReference>,
    /// Per-trial CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-(method, grid point) summary CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Fill the wall_ms column (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Print the effective config as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    sigma_min: f64,
    /// Number of nodes N.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.9)]
    eta: f64,
    /// Also evaluate the probability bound at this budget.
    #[arg(long)]
    budget: Option<usize>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenerateGraph(a) => generate(a),
        Command::Design(a) => design(a),
        Command::Estimate(a) => estimate(a),
        Command::Bench(a) => run_bench(a),
        Command::Bound(a) => bound(a),
    }
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let g = match a.kind.as_str() {
        "watts-strogatz" | "ws" => watts_strogatz(a.n, a.k, a.beta, a.seed)?,
        "random-geometric" | "rgg" => random_geometric(a.n, a.radius, a.kernel_width, a.seed)?,
        other => bail!("unknown graph kind `{other}` (expected watts-strogatz or random-geometric)"),
    };
    save_edge_list(&g, &a.out)?;
    eprintln!("wrote {} nodes, {} edges to {}", g.n(), g.edge_count(), a.out.display());
    Ok(())
}

#[derive(Serialize, serde::Deserialize)]
struct DesignFile {
    schema: u32,
    criterion: Criterion,
    bandwidth: usize,
    budget: usize,
    p: Vec<f64>,
    m: Vec<usize>,
    objective: f64,
    quantized_objective: f64,
    gap: f64,
    iterations: usize,
    converged: bool,
    sigma_min: f64,
    invertibility_bound: f64,
    fallback_steps: usize,
}

fn design(a: DesignArgs) -> Result<()> {
    let g = load_edge_list(&a.graph)?;
    let basis = eigendecompose(&laplacian(&g))?;
    let out = design_pipeline(&basis, a.bandwidth, a.budget, a.criterion, a.seed, &a.solver.options())?;
    let d = &out.diagnostics;
    let file = DesignFile {
        schema: bench::SCHEMA_VERSION,
        criterion: d.criterion,
        bandwidth: d.bandwidth,
        budget: d.budget,
        p: out.relaxed.weights.as_slice().to_vec(),
        m: out.design.allocation.counts().to_vec(),
        objective: d.relaxed_objective,
        quantized_objective: d.quantized_objective,
        gap: d.duality_gap,
        iterations: d.iterations,
        converged: d.converged,
        sigma_min: d.sigma_min,
        invertibility_bound: d.invertibility_bound,
        fallback_steps: d.fallback_steps,
    };
    emit(a.out.as_ref(), &to_json(&file)?)
}

#[derive(Serialize)]
struct EstimateFile {
    schema: u32,
    bandwidth: usize,
    coeff_estimate: Vec<f64>,
    signal_estimate: Vec<f64>,
    error_covariance_trace: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_l2: Option<f64>,
}

fn parse_snr(s: &str) -> Result<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        other => other.parse().with_context(|| format!("invalid SNR `{s}`")),
    }
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let g = load_edge_list(&a.graph)?;
    let design: DesignFile = serde_json::from_str(&fs::read_to_string(&a.design)?)
        .with_context(|| format!("reading design {}", a.design.display()))?;
    let basis = eigendecompose(&laplacian(&g))?;
    let rows = basis.design_rows(design.bandwidth)?;
    let alloc = gsample_core::design::SampleAllocation::new(design.m.clone())?;
    if alloc.n() != g.n() {
        bail!("design has {} nodes, graph has {}", alloc.n(), g.n());
    }
    let seq = sequence_from_allocation(&alloc);
    let cov = error_covariance_for_allocation(&rows, &alloc)?;
    let (y, truth, noise_std) = match &a.samples {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let vals = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.parse::<f64>().with_context(|| format!("invalid sample `{l}`")))
                .collect::<Result<Vec<_>>>()?;
            (DVector::from_vec(vals), None, None)
        }
        None => {
            let mut rng = seeded(a.seed);
            let normal = Normal::new(1.0, 0.5)?;
            let coeffs: Vec<f64> = (0..design.bandwidth).map(|_| normal.sample(&mut rng)).collect();
            let f = basis.synthesize_bandlimited(&BandlimitedSpec::new(coeffs)?)?;
            let z = standard_normal_vec(seq.len(), &mut rng);
            let y = apply_noise(&f, &seq, parse_snr(&a.snr_db)?, a.snr_reference, &z)?;
            (y.values, Some(f), Some(y.noise_std))
        }
    };
    let est = blue_estimate(&rows, &seq, &y)?;
    let error_l2 = truth.as_ref().map(|f| reconstruction_error(f, &est.signal_estimate)).transpose()?;
    let file = EstimateFile {
        schema: bench::SCHEMA_VERSION,
        bandwidth: design.bandwidth,
        coeff_estimate: est.coeff_estimate.iter().copied().collect(),
        signal_estimate: est.signal_estimate.iter().copied().collect(),
        error_covariance_trace: cov.trace,
        noise_std,
        error_l2,
    };
    emit(a.out.as_ref(), &to_json(&file)?)
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => ScenarioConfig::from_json(&fs::read_to_string(path)?)
            .with_context(|| format!("reading config {}", path.display()))?,
        (None, Some(p)) => ScenarioConfig::preset(p, &a.signal)?,
        (None, None) => bail!("bench needs --config or --preset"),
    };
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(r) = a.snr_reference {
        cfg.signal.snr_reference = r;
    }
    cfg.validate()?;
    if a.print_config {
        return emit(None, &to_json(&cfg)?);
    }
    let run = bench::run_scenario(&cfg)?;
    let mut buf = Vec::new();
    bench::write_trials_csv(&run.records, &mut buf, a.timing)?;
    emit(a.out.as_ref(), &buf)?;
    let summary = bench::summarize(&run.records)?;
    if let Some(path) = &a.summary {
        let mut buf = Vec::new();
        bench::write_summary_csv(&summary, &mut buf)?;
        emit(Some(path), &buf)?;
    }
    for row in &summary {
        eprintln!(
            "{:<9} K={:<3} M={:<4} snr={:<4} mean={:.6} std={:.6} failed={}/{}",
            row.method,
            row.bandwidth,
            row.budget,
            row.snr_db,
            row.mean_error_l2,
            row.std_error_l2,
            row.failures,
            row.trials
        );
    }
    Ok(())
}

fn bound(a: BoundArgs) -> Result<()> {
    let m = min_sample_size(a.sigma_min, a.n, a.eta)?;
    println!("M = {m}");
    let at_m = invertibility_probability_bound(a.sigma_min, m, a.n)?;
    println!("bound(M = {m}) = {at_m:.6}");
    if let Some(budget) = a.budget {
        let b = invertibility_probability_bound(a.sigma_min, budget, a.n)?;
        println!("bound(M = {budget}) = {b:.6}");
    }
    Ok(())
}
