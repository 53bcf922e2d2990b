//! The decompose / optimize / reconstruct flows.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addergraph::{merge, AdderGraph, GraphError};
use crate::decompose::{
    build_xc_instance, chunk_divide_binary, chunk_divide_csd, enumerate_pattern_sets, solve_pattern_decomposition_range,
    DecomposeError, Decomposition, Encoding, PatternSearchOptions,
};
use crate::mcm_engine::{
    reconstruct_naive, reconstruct_optimal_until, solve_mcm_heuristic, solve_mcm_optimal_until, McmError, McmInstance,
    McmOptions, McmSolution,
};
use crate::numrep::BigNat;
use crate::satcore::{Backend, Deadline};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Mcm(#[from] McmError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionMode {
    #[default]
    Chunk,
    Sat,
    Enumerate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReconstructionMode {
    #[default]
    Naive,
    Sat,
}

/// How the adder graph over the unique patterns is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternMcm {
    #[default]
    Optimal,
    Heuristic,
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub width: u32,
    pub encoding: Encoding,
    pub decomposition: DecompositionMode,
    pub reconstruction: ReconstructionMode,
    pub pattern_mcm: PatternMcm,
    /// Limit for each exact step (pattern search, pattern MCM, reconstruction).
    pub sat_timeout: Duration,
    /// Wall-clock limit for the whole enumeration.
    pub enumeration_budget: Option<Duration>,
    pub seed: u64,
    pub backend: Backend,
    pub exhaustive_depth: usize,
    pub exhaustive_probe: Duration,
    /// Extra total pattern counts explored by the SAT decomposition.
    pub tp_slack: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            width: 4,
            encoding: Encoding::Binary,
            decomposition: DecompositionMode::Chunk,
            reconstruction: ReconstructionMode::Naive,
            pattern_mcm: PatternMcm::Optimal,
            sat_timeout: Duration::from_secs(600),
            enumeration_budget: None,
            seed: 0,
            backend: Backend::default(),
            exhaustive_depth: 4,
            exhaustive_probe: Duration::from_secs(10),
            tp_slack: 0,
        }
    }
}

impl FlowConfig {
    fn check(&self) -> Result<(), FlowError> {
        if self.width == 0 {
            return Err(FlowError::Config("pattern width must be at least 1".into()));
        }
        Ok(())
    }

    fn mcm_options(&self) -> McmOptions {
        McmOptions {
            timeout: self.sat_timeout,
            backend: self.backend.clone(),
            exhaustive_depth: self.exhaustive_depth,
            exhaustive_probe: self.exhaustive_probe,
            stop: None,
        }
    }

    fn step_deadline(&self) -> Deadline {
        Deadline::after(self.sat_timeout)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fallbacks {
    /// The pattern search timed out and chunk division was used.
    pub decomposition: bool,
    /// The pattern MCM timed out and the heuristic graph was used.
    pub pattern_mcm: bool,
    /// The exact reconstruction timed out and the naive one was used.
    pub reconstruction: bool,
    /// The enumeration budget ran out before the design space was covered.
    pub enumeration: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTimes {
    pub decompose: Duration,
    pub pattern_mcm: Duration,
    pub reconstruct: Duration,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    /// Exact covers visited.
    pub covers: usize,
    /// Distinct unique-pattern sets among them.
    pub pattern_sets: usize,
    /// Total adders -> number of covers.
    pub histogram: BTreeMap<usize, usize>,
    /// Total adders -> number of distinct pattern sets.
    pub set_histogram: BTreeMap<usize, usize>,
    /// Every candidate was solved to proven optimality.
    pub all_optimal: bool,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub flow: &'static str,
    pub width: u32,
    pub encoding: Encoding,
    pub graph: AdderGraph,
    pub total_adders: usize,
    pub bit_adders: u64,
    pub pattern_adders: usize,
    pub reconstruction_adders: usize,
    pub total_patterns: usize,
    pub unique_patterns: usize,
    pub decomposition: Decomposition,
    pub pattern_optimal: bool,
    pub reconstruction_optimal: bool,
    pub fallbacks: Fallbacks,
    pub times: StepTimes,
    pub seed: u64,
    pub enumeration: Option<EnumerationStats>,
}

/// Everything in a [`FlowResult`] except wall times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlowSummary {
    pub flow: &'static str,
    pub width: u32,
    pub total_adders: usize,
    pub bit_adders: u64,
    pub pattern_adders: usize,
    pub reconstruction_adders: usize,
    pub total_patterns: usize,
    pub unique_patterns: usize,
    pub fallbacks: Fallbacks,
    pub seed: u64,
    pub graph_json: String,
}

impl FlowResult {
    pub fn summary(&self) -> FlowSummary {
        FlowSummary {
            flow: self.flow,
            width: self.width,
            total_adders: self.total_adders,
            bit_adders: self.bit_adders,
            pattern_adders: self.pattern_adders,
            reconstruction_adders: self.reconstruction_adders,
            total_patterns: self.total_patterns,
            unique_patterns: self.unique_patterns,
            fallbacks: self.fallbacks,
            seed: self.seed,
            graph_json: self.graph.to_json(),
        }
    }
}

pub const FLOW_CHUNK: &str = "chunk+naive (baseline)";
pub const FLOW_CSD: &str = "csd-heuristic";
pub const FLOW_CHUNK_CSD_SAT: &str = "chunk";
pub const FLOW_SAT: &str = "sat";
pub const FLOW_ENUMERATE: &str = "enumerate";

struct Composed {
    graph: AdderGraph,
    recon_adders: usize,
    pattern: McmSolution,
    recon_optimal: bool,
    recon_timed_out: bool,
    mcm_time: Duration,
    recon_time: Duration,
}

impl Composed {
    fn total(&self) -> usize {
        self.graph.adder_count()
    }
}

fn compose(
    d: &Decomposition,
    mcm: PatternMcm,
    recon: ReconstructionMode,
    opts: &McmOptions,
    mcm_deadline: &Deadline,
    recon_deadline: &Deadline,
) -> Result<Composed, FlowError> {
    let start = Instant::now();
    let patterns: Vec<BigNat> = d.unique_patterns().into_iter().collect();
    let inst = McmInstance::new(&patterns)?;
    let pattern = match mcm {
        PatternMcm::Optimal => solve_mcm_optimal_until(&inst, opts, mcm_deadline)?,
        PatternMcm::Heuristic => solve_mcm_heuristic(&inst)?,
    };
    let mcm_time = start.elapsed();
    let start = Instant::now();
    let (recon_graph, recon_optimal, recon_timed_out) = match recon {
        ReconstructionMode::Naive => (reconstruct_naive(d)?, false, false),
        ReconstructionMode::Sat => {
            let s = reconstruct_optimal_until(d, opts, recon_deadline)?;
            (s.graph, s.proven_optimal, s.timed_out)
        }
    };
    let recon_time = start.elapsed();
    let graph = merge(&pattern.graph, &recon_graph)?;
    debug_assert!(graph.realizes(&d.targets));
    Ok(Composed { graph, recon_adders: recon_graph.pruned().adder_count(), pattern, recon_optimal, recon_timed_out, mcm_time, recon_time })
}

fn finish(flow: &'static str, cfg: &FlowConfig, d: Decomposition, c: Composed, decompose_time: Duration, decomposition_fallback: bool) -> FlowResult {
    let total = c.total();
    FlowResult {
        flow,
        width: cfg.width,
        encoding: d.encoding,
        bit_adders: c.graph.bit_adder_count(),
        total_adders: total,
        pattern_adders: total - c.recon_adders,
        reconstruction_adders: c.recon_adders,
        total_patterns: d.total_patterns(),
        unique_patterns: d.unique_patterns().len(),
        graph: c.graph,
        decomposition: d,
        pattern_optimal: c.pattern.proven_optimal,
        reconstruction_optimal: c.recon_optimal,
        fallbacks: Fallbacks {
            decomposition: decomposition_fallback,
            pattern_mcm: c.pattern.timed_out,
            reconstruction: c.recon_timed_out,
            enumeration: false,
        },
        times: StepTimes { decompose: decompose_time, pattern_mcm: c.mcm_time, reconstruct: c.recon_time },
        seed: cfg.seed,
        enumeration: None,
    }
}

fn run_chunk(flow: &'static str, targets: &[BigNat], cfg: &FlowConfig, encoding: Encoding) -> Result<FlowResult, FlowError> {
    cfg.check()?;
    let start = Instant::now();
    let d = match encoding {
        Encoding::Binary => chunk_divide_binary(targets, cfg.width)?,
        Encoding::Csd => chunk_divide_csd(targets, cfg.width)?,
    };
    let t = start.elapsed();
    let opts = cfg.mcm_options();
    let c = compose(&d, cfg.pattern_mcm, cfg.reconstruction, &opts, &cfg.step_deadline(), &cfg.step_deadline())?;
    Ok(finish(flow, cfg, d, c, t, false))
}

/// CSD chunk division, MCM over the patterns, then reconstruction
/// (naive unless the configuration asks for the exact one).
pub fn run_heuristic_csd(targets: &[BigNat], cfg: &FlowConfig) -> Result<FlowResult, FlowError> {
    run_chunk(FLOW_CSD, targets, cfg, Encoding::Csd)
}

/// Binary chunk division, MCM over the patterns, naive reconstruction.
pub fn run_baseline_chunk(targets: &[BigNat], cfg: &FlowConfig) -> Result<FlowResult, FlowError> {
    let flow = if cfg.reconstruction == ReconstructionMode::Naive { FLOW_CHUNK } else { FLOW_CHUNK_CSD_SAT };
    run_chunk(flow, targets, cfg, Encoding::Binary)
}

/// SAT pattern decomposition, exact pattern MCM and exact reconstruction.
/// The chunk division is evaluated the same way and the cheaper of the two
/// is kept, so a slow or unlucky pattern search never makes things worse.
pub fn run_sat_flow(targets: &[BigNat], cfg: &FlowConfig) -> Result<FlowResult, FlowError> {
    cfg.check()?;
    if cfg.encoding != Encoding::Binary {
        return Err(FlowError::Config("the SAT pattern decomposition works on binary digits".into()));
    }
    let start = Instant::now();
    let search_opts = PatternSearchOptions { timeout: cfg.sat_timeout, backend: cfg.backend.clone(), tp_slack: cfg.tp_slack };
    let searches = solve_pattern_decomposition_range(targets, cfg.width, &search_opts)?;
    let decompose_time = start.elapsed();
    let fallback = searches.iter().any(|s| s.fallback);

    let mut candidates: Vec<Decomposition> = Vec::new();
    let mut seen = BTreeSet::new();
    for d in searches.into_iter().map(|s| s.decomposition).chain([chunk_divide_binary(targets, cfg.width)?]) {
        if seen.insert(d.signature()) {
            candidates.push(d);
        }
    }
    let opts = cfg.mcm_options();
    let mut best: Option<(Decomposition, Composed)> = None;
    for d in candidates {
        let c = compose(&d, PatternMcm::Optimal, ReconstructionMode::Sat, &opts, &cfg.step_deadline(), &cfg.step_deadline())?;
        if best.as_ref().map_or(true, |(_, b)| c.total() < b.total()) {
            best = Some((d, c));
        }
    }
    let (d, c) = best.expect("chunk division is always a candidate");
    Ok(finish(FLOW_SAT, cfg, d, c, decompose_time, fallback))
}

/// Exact pattern MCM and exact reconstruction for every pattern set found by
/// exact-cover enumeration. Costs are memoized per unique-pattern set, since
/// both exact steps depend only on it and the targets.
pub fn run_enumerate_optimal(targets: &[BigNat], cfg: &FlowConfig) -> Result<FlowResult, FlowError> {
    cfg.check()?;
    let budget = cfg.enumeration_budget.map_or_else(Deadline::never, Deadline::after);
    let start = Instant::now();
    let inst = build_xc_instance(targets, cfg.width, cfg.encoding)?;
    let opts = cfg.mcm_options();

    let mut stats = EnumerationStats { all_optimal: true, ..EnumerationStats::default() };
    let mut costs: BTreeMap<BTreeSet<BigNat>, usize> = BTreeMap::new();
    let mut best: Option<(usize, BTreeSet<BigNat>, Decomposition, Composed)> = None;
    let mut complete = true;
    let mut covers = enumerate_pattern_sets(&inst);
    let mut mcm_time = Duration::ZERO;
    let mut recon_time = Duration::ZERO;
    const BATCH: usize = 32;

    'outer: loop {
        // Gather covers until a batch of unseen pattern sets is ready.
        let mut batch: Vec<(BTreeSet<BigNat>, Decomposition)> = Vec::new();
        let mut pending: Vec<BTreeSet<BigNat>> = Vec::new();
        let mut exhausted = false;
        while batch.len() < BATCH {
            if budget.expired() {
                complete = false;
                break;
            }
            let Some(d) = covers.next() else {
                exhausted = true;
                break;
            };
            stats.covers += 1;
            let s = d.unique_patterns();
            if costs.contains_key(&s) || batch.iter().any(|(b, _)| *b == s) {
                pending.push(s);
            } else {
                pending.push(s.clone());
                batch.push((s, d));
            }
        }
        let solved: Vec<Result<(BTreeSet<BigNat>, Decomposition, Composed), FlowError>> = batch
            .into_par_iter()
            .map(|(s, d)| {
                let deadline = budget.tightened(cfg.sat_timeout);
                let c = compose(&d, PatternMcm::Optimal, ReconstructionMode::Sat, &opts, &deadline, &deadline)?;
                Ok((s, d, c))
            })
            .collect();
        for r in solved {
            let (s, d, c) = r?;
            if c.pattern.timed_out || c.recon_timed_out {
                stats.all_optimal = false;
            }
            mcm_time += c.mcm_time;
            recon_time += c.recon_time;
            let total = c.total();
            log::debug!("pattern set {:?}: {} + {} adders", s.iter().map(ToString::to_string).collect::<Vec<_>>(), c.pattern.adder_count, c.recon_adders);
            costs.insert(s.clone(), total);
            *stats.set_histogram.entry(total).or_default() += 1;
            let better = match &best {
                None => true,
                Some((bt, bs, _, _)) => (total, &s) < (*bt, bs),
            };
            if better {
                best = Some((total, s, d, c));
            }
        }
        for s in pending {
            if let Some(&total) = costs.get(&s) {
                *stats.histogram.entry(total).or_default() += 1;
            }
        }
        if exhausted || !complete {
            break 'outer;
        }
    }
    stats.pattern_sets = costs.len();
    let elapsed = start.elapsed();

    let Some((_, _, d, c)) = best else {
        let mut r = run_chunk(FLOW_ENUMERATE, targets, &FlowConfig { pattern_mcm: PatternMcm::Heuristic, reconstruction: ReconstructionMode::Naive, ..cfg.clone() }, cfg.encoding)?;
        r.fallbacks.enumeration = true;
        r.enumeration = Some(stats);
        return Ok(r);
    };
    let mut r = finish(FLOW_ENUMERATE, cfg, d, c, elapsed.saturating_sub(mcm_time + recon_time), false);
    r.times.pattern_mcm = mcm_time;
    r.times.reconstruct = recon_time;
    r.fallbacks.enumeration = !complete;
    r.enumeration = Some(stats);
    Ok(r)
}

/// Dispatches on the configured decomposition mode.
pub fn run_flow(targets: &[BigNat], cfg: &FlowConfig) -> Result<FlowResult, FlowError> {
    match cfg.decomposition {
        DecompositionMode::Chunk => match cfg.encoding {
            Encoding::Binary => run_baseline_chunk(targets, cfg),
            Encoding::Csd => run_heuristic_csd(targets, cfg),
        },
        DecompositionMode::Sat => run_sat_flow(targets, cfg),
        DecompositionMode::Enumerate => run_enumerate_optimal(targets, cfg),
    }
}

/// Runs the configured flow for each width and keeps the cheapest result
/// (ties go to the earlier width).
pub fn run_best_of(targets: &[BigNat], cfg: &FlowConfig, widths: &[u32]) -> Result<FlowResult, FlowError> {
    let mut best: Option<FlowResult> = None;
    for &w in widths {
        let r = run_flow(targets, &FlowConfig { width: w, ..cfg.clone() })?;
        if best.as_ref().map_or(true, |b| r.total_adders < b.total_adders) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| FlowError::Config("no widths given".into()))
}
