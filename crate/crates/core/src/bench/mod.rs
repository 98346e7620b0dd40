//! Seeded Monte Carlo comparison of sampling-set selectors.
//!
//! One graph per scenario. For each grid point (bandwidth `K`, SNR) and
//! trial, a bandlimited signal and a standard-normal noise vector are drawn
//! once and shared by every method, so methods differ only in where they
//! sample. Random streams are keyed by `(master_seed, purpose, grid point,
//! trial)`, which makes the output independent of thread scheduling.

mod config;
mod summary;

pub use config::{GraphSpec, Method, ScenarioConfig, SignalSpec, SnrDb, SCHEMA_VERSION};
pub use summary::{summarize, write_summary_csv, write_trials_csv, SummaryRow, TRIAL_CSV_HEADER};

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baselines::{greedy_sigma_min, top_m_selection};
use crate::design::{quantize_design, solve_relaxed, RelaxedSolution};
use crate::error::{invalid, Error, Result};
use crate::estimation::{apply_noise, blue_estimate, reconstruction_error, sequence_from_allocation};
use crate::estimation::{standard_normal_vec, SamplingSequence};
use crate::graph::{laplacian, load_edge_list, random_geometric, watts_strogatz, WeightedGraph};
use crate::rng::{substream, tag};
use crate::spectral::{eigendecompose, BandlimitedSpec, DesignRows, SpectralBasis};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "GSAMPLE_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub method: Method,
    pub criterion: crate::design::Criterion,
    pub bandwidth: usize,
    pub budget: usize,
    pub snr_db: SnrDb,
    pub trial: usize,
    /// `None` for failed trials.
    pub error_l2: Option<f64>,
    pub solver_gap: Option<f64>,
    pub wall_ms: f64,
    /// `"ok"` or `"failed: <reason>"`.
    pub status: String,
    /// Digest of the standard-normal noise draws of this trial.
    pub noise_digest: u64,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.error_l2.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub bandwidth: usize,
    pub snr_db: SnrDb,
}

/// Bandwidth-major, SNR-minor enumeration of the signal grid.
pub fn grid_points(spec: &SignalSpec) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for k in spec.bandwidths() {
        for &snr_db in &spec.snr_db_grid {
            out.push(GridPoint { index: out.len(), bandwidth: k, snr_db });
        }
    }
    out
}

pub fn build_graph(spec: &GraphSpec, master_seed: u64) -> Result<WeightedGraph> {
    match spec {
        GraphSpec::WattsStrogatz { n, k, beta, seed } => watts_strogatz(*n, *k, *beta, seed.unwrap_or(master_seed)),
        GraphSpec::RandomGeometric { n, radius, kernel_width, seed } => {
            random_geometric(*n, *radius, *kernel_width, seed.unwrap_or(master_seed))
        }
        GraphSpec::File { path } => load_edge_list(path),
    }
}

/// Selections that depend only on the bandwidth, computed once per `K`.
struct BandwidthPlan {
    rows: DesignRows,
    budget: usize,
    relaxed: Option<std::result::Result<RelaxedSolution, String>>,
    greedy: Option<std::result::Result<SamplingSequence, String>>,
    top_m: Option<std::result::Result<SamplingSequence, String>>,
}

fn plan_bandwidth(basis: &SpectralBasis, k: usize, cfg: &ScenarioConfig) -> Result<BandwidthPlan> {
    let rows = basis.design_rows(k)?;
    let budget = cfg.budget_rule * k;
    let wants = |m: Method| cfg.methods.contains(&m);
    let relaxed = (wants(Method::Proposed) || wants(Method::M3))
        .then(|| solve_relaxed(&rows, cfg.criterion, &cfg.solver).map_err(|e| e.to_string()));
    let greedy = wants(Method::M1).then(|| greedy_sigma_min(&rows, budget).map_err(|e| e.to_string()));
    let top_m = match (&relaxed, wants(Method::M3)) {
        (Some(r), true) => Some(
            r.as_ref()
                .map_err(Clone::clone)
                .and_then(|sol| top_m_selection(&sol.weights, budget).map_err(|e| e.to_string())),
        ),
        _ => None,
    };
    Ok(BandwidthPlan { rows, budget, relaxed, greedy, top_m })
}

/// Everything a run produces besides the records.
pub struct ScenarioRun {
    pub graph: WeightedGraph,
    pub records: Vec<TrialRecord>,
}

/// Runs every (grid point, trial, method) combination of the scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let graph = build_graph(&cfg.graph, cfg.master_seed)?;
    let n = graph.n();
    if cfg.signal.bandwidth_max > n {
        return Err(invalid(format!("bandwidth_max {} exceeds node count {n}", cfg.signal.bandwidth_max)));
    }
    let basis = eigendecompose(&laplacian(&graph))?;
    let pool = thread_pool()?;
    let records = pool.install(|| -> Result<Vec<TrialRecord>> {
        let bandwidths = cfg.signal.bandwidths();
        let plans: Vec<BandwidthPlan> =
            bandwidths.par_iter().map(|&k| plan_bandwidth(&basis, k, cfg)).collect::<Result<_>>()?;
        let plans: BTreeMap<usize, BandwidthPlan> = bandwidths.into_iter().zip(plans).collect();
        let tasks: Vec<(GridPoint, usize)> =
            grid_points(&cfg.signal).into_iter().flat_map(|g| (0..cfg.trials).map(move |t| (g, t))).collect();
        let per_task: Vec<Vec<TrialRecord>> = tasks
            .par_iter()
            .map(|&(g, t)| run_trial(cfg, &basis, &plans[&g.bandwidth], g, t))
            .collect::<Result<_>>()?;
        Ok(per_task.into_iter().flatten().collect())
    })?;
    Ok(ScenarioRun { graph, records })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads: usize =
            v.trim().parse().map_err(|_| invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(threads.max(1));
    }
    builder.build().map_err(|e| invalid(format!("thread pool: {e}")))
}

fn digest(z: &[f64]) -> u64 {
    let mut h = Sha256::new();
    for x in z {
        h.update(x.to_le_bytes());
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 is 32 bytes"))
}

fn run_trial(
    cfg: &ScenarioConfig,
    basis: &SpectralBasis,
    plan: &BandwidthPlan,
    g: GridPoint,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let (gi, ti) = (g.index as u64, trial as u64);
    let mut signal_rng = substream(cfg.master_seed, tag::SIGNAL, gi, ti);
    let normal = Normal::new(cfg.signal.coeff_mean, cfg.signal.coeff_std)
        .map_err(|e| invalid(format!("coefficient distribution: {e}")))?;
    let coeffs: Vec<f64> = (0..g.bandwidth).map(|_| normal.sample(&mut signal_rng)).collect();
    let truth = basis.synthesize_bandlimited(&BandlimitedSpec::new(coeffs)?)?;
    let z = standard_normal_vec(plan.budget, &mut substream(cfg.master_seed, tag::NOISE, gi, ti));
    let noise_digest = digest(&z);

    Ok(cfg
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = run_method(cfg, plan, method, g, trial, &truth, &z);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let (error_l2, status) = match outcome {
                Ok(e) => (Some(e), "ok".to_string()),
                Err(reason) => (None, format!("failed: {reason}")),
            };
            let solver_gap = match method {
                Method::Proposed | Method::M3 => plan.relaxed.as_ref().and_then(|r| r.as_ref().ok()).map(|r| r.gap),
                Method::M1 => None,
            };
            TrialRecord {
                scenario: cfg.scenario.clone(),
                method,
                criterion: cfg.criterion,
                bandwidth: g.bandwidth,
                budget: plan.budget,
                snr_db: g.snr_db,
                trial,
                error_l2,
                solver_gap,
                wall_ms,
                status,
                noise_digest,
            }
        })
        .collect())
}

fn run_method(
    cfg: &ScenarioConfig,
    plan: &BandwidthPlan,
    method: Method,
    g: GridPoint,
    trial: usize,
    truth: &DVector<f64>,
    z: &[f64],
) -> std::result::Result<f64, String> {
    let missing = || "selection unavailable".to_string();
    let sequence = match method {
        Method::Proposed => {
            let relaxed = plan.relaxed.as_ref().ok_or_else(missing)?.as_ref().map_err(Clone::clone)?;
            let mut rng = substream(cfg.master_seed, tag::QUANTIZE + method.stream_id(), g.index as u64, trial as u64);
            let design = quantize_design(&plan.rows, &relaxed.weights, plan.budget, cfg.criterion, &mut rng)
                .map_err(|e| e.to_string())?;
            sequence_from_allocation(&design.allocation)
        }
        Method::M1 => plan.greedy.as_ref().ok_or_else(missing)?.clone()?,
        Method::M3 => plan.top_m.as_ref().ok_or_else(missing)?.clone()?,
    };
    let estimate = (|| -> Result<f64> {
        let y = apply_noise(truth, &sequence, g.snr_db.0, cfg.signal.snr_reference, z)?;
        let est = blue_estimate(&plan.rows, &sequence, &y.values)?;
        reconstruction_error(truth, &est.signal_estimate)
    })();
    estimate.map_err(|e: Error| e.to_string())
}
