//! Adder graphs for sets of constants.
//!
//! [`solve_mcm_optimal`] deepens the adder count from a lower bound and asks
//! a SAT solver (or, for tiny counts, an exhaustive search) for a graph of
//! exactly that size. The same machinery with the unique patterns as extra
//! inputs rebuilds the targets in [`reconstruct_optimal`].

mod encoding;
mod exhaustive;

use std::collections::BTreeMap;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use num_traits::{One, ToPrimitive, Zero};
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::addergraph::{AddOp, AdderGraph, GraphError, Operand};
use crate::decompose::{DecomposeError, Decomposition, PlacedPattern};
use crate::numrep::{bit_width, odd_part, to_csd, BigNat};
use crate::satcore::{Backend, Deadline, SatError, SatStatus};

pub use exhaustive::{mcm_oracle, mcm_oracle_with_inputs, OracleResult};

#[derive(Debug, Error)]
pub enum McmError {
    #[error("no targets given")]
    NoTargets,
    #[error("zero cannot be an input or a target")]
    Zero,
    #[error("{value} does not fit in a {bits}-bit word")]
    WordLength { value: BigNat, bits: u64 },
    #[error("no adder graph with at most {0} adders")]
    Infeasible(usize),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid decomposition: {0}")]
    Decomposition(#[from] DecomposeError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McmInstance {
    /// Available values; the first is always 1.
    pub inputs: Vec<BigNat>,
    pub targets: Vec<BigNat>,
    /// Width of every intermediate value in the exact search.
    pub max_word_length: u64,
    pub adder_budget: Option<usize>,
}

impl McmInstance {
    pub fn new(targets: &[BigNat]) -> Result<Self, McmError> {
        Self::with_inputs(&[], targets)
    }

    /// Instance over `{1} ∪ inputs`. The word length defaults to one bit
    /// more than the widest odd target or input.
    pub fn with_inputs(inputs: &[BigNat], targets: &[BigNat]) -> Result<Self, McmError> {
        if targets.is_empty() {
            return Err(McmError::NoTargets);
        }
        if targets.iter().chain(inputs).any(Zero::is_zero) {
            return Err(McmError::Zero);
        }
        let mut ins = vec![BigNat::one()];
        for v in inputs {
            if !ins.contains(v) {
                ins.push(v.clone());
            }
        }
        let widest = targets.iter().map(odd_part).chain(ins.iter().cloned()).map(|v| bit_width(&v)).max().unwrap_or(1);
        Ok(Self { inputs: ins, targets: targets.to_vec(), max_word_length: widest + 1, adder_budget: None })
    }

    /// Distinct odd parts of the targets, ascending.
    pub fn odd_targets(&self) -> Vec<BigNat> {
        let mut v: Vec<BigNat> = self.targets.iter().map(odd_part).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Odd targets that are not inputs. Each needs its own adder, so their
    /// count bounds the adder count from below.
    pub fn missing_targets(&self) -> Vec<BigNat> {
        self.odd_targets().into_iter().filter(|t| !self.inputs.contains(t)).collect()
    }

    fn check_word_length(&self) -> Result<(), McmError> {
        let bits = self.max_word_length;
        match self.inputs.iter().chain(&self.missing_targets()).find(|v| bit_width(v) > bits) {
            Some(v) => Err(McmError::WordLength { value: v.clone(), bits }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McmSolution {
    pub graph: AdderGraph,
    /// Every smaller adder count was shown infeasible.
    pub proven_optimal: bool,
    pub adder_count: usize,
    /// The search stopped at the deadline and returned the starting graph.
    pub timed_out: bool,
}

impl McmSolution {
    fn new(graph: AdderGraph, proven_optimal: bool, timed_out: bool) -> Self {
        let graph = graph.pruned();
        Self { adder_count: graph.adder_count(), graph, proven_optimal, timed_out }
    }
}

#[derive(Clone, Debug)]
pub struct McmOptions {
    pub timeout: Duration,
    pub backend: Backend,
    /// Adder counts up to this value are decided by exhaustive search
    /// instead of the SAT solver (word lengths up to 64 bits only).
    pub exhaustive_depth: usize,
    /// Larger counts get this long with exhaustive search before the SAT
    /// solver takes over. Zero skips the attempt.
    pub exhaustive_probe: Duration,
    pub stop: Option<Arc<AtomicBool>>,
}

impl Default for McmOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(600),
            backend: Backend::default(),
            exhaustive_depth: 4,
            exhaustive_probe: Duration::from_secs(10),
            stop: None,
        }
    }
}

impl McmOptions {
    pub fn deadline(&self) -> Deadline {
        let d = Deadline::after(self.timeout);
        match &self.stop {
            Some(s) => d.with_stop(s.clone()),
            None => d,
        }
    }
}

/// Binds each target to the operand holding its odd part.
fn bind_targets(g: &mut AdderGraph, targets: &[BigNat]) -> Result<(), GraphError> {
    for t in targets {
        let shift = t.trailing_zeros().unwrap_or(0) as u32;
        let odd = t >> shift;
        let source = match g.input_index(&odd) {
            Some(i) => Operand::Input(i),
            None => {
                let n = g.nodes().iter().position(|n| n.value == odd).ok_or(GraphError::MissingPattern(odd.clone()))?;
                Operand::Node(n)
            }
        };
        g.bind_output(t.clone(), source, shift);
    }
    Ok(())
}

/// Greedy construction: a target one adder away from known values costs one
/// adder, otherwise it is accumulated digit by digit from its CSD form,
/// reusing any prefix value already built. Targets up to 64 bits use a
/// shorter factor-and-peel chain when one exists.
pub fn solve_mcm_heuristic(inst: &McmInstance) -> Result<McmSolution, McmError> {
    let mut g = AdderGraph::with_inputs(inst.inputs.clone());
    let root = Operand::Input(0);
    let mut known: BTreeMap<BigNat, Operand> =
        inst.inputs.iter().enumerate().map(|(i, v)| (v.clone(), Operand::Input(i))).collect();
    for t in inst.odd_targets() {
        if known.contains_key(&t) {
            continue;
        }
        if let Some((l, ls, r, rs, op)) = one_step(&known, &t) {
            let n = g.push_node(l, ls, r, rs, op)?;
            known.insert(t, n);
            continue;
        }
        let digits = to_csd(&t);
        if let Some(plan) = t.to_u64().map(|v| factor_plan(v as u128)) {
            if plan.len() + 1 < digits.nonzero_count() {
                for p in plan {
                    if known.contains_key(&BigNat::from(p.value)) {
                        continue;
                    }
                    let base = known[&BigNat::from(p.base)];
                    let (r, op) = match p.kind {
                        PlanKind::Factor(op) => (base, op),
                        PlanKind::Peel(op) => (root, op),
                    };
                    let n = g.push_node(base, p.shift, r, 0, op)?;
                    known.insert(BigNat::from(p.value), n);
                }
                continue;
            }
        }
        let mut positions = digits.nonzero_positions();
        positions.reverse();
        let mut acc = root;
        let mut value = BigNat::one();
        for pair in positions.windows(2) {
            let gap = (pair[0] - pair[1]) as u32;
            let op = if digits.digit(pair[1]) > 0 { AddOp::Add } else { AddOp::Sub };
            value = match op {
                AddOp::Add => (value << gap) + 1u32,
                AddOp::Sub => (value << gap) - 1u32,
            };
            acc = match known.get(&value) {
                Some(&o) => o,
                None => {
                    let n = g.push_node(acc, gap, root, 0, op)?;
                    known.insert(value.clone(), n);
                    n
                }
            };
        }
        debug_assert_eq!(value, t);
    }
    bind_targets(&mut g, &inst.targets)?;
    Ok(McmSolution::new(g, false, false))
}

#[derive(Clone, Copy)]
enum PlanKind {
    /// `base<<shift ± base`
    Factor(AddOp),
    /// `base<<shift ± 1`
    Peel(AddOp),
}

#[derive(Clone, Copy)]
struct PlanStep {
    base: u128,
    shift: u32,
    kind: PlanKind,
    value: u128,
}

/// Shortest chain from 1 to odd `t` where every step either multiplies by
/// `2^k ± 1` or appends `±1` below a shift.
fn factor_plan(t: u128) -> Vec<PlanStep> {
    fn cost(t: u128, memo: &mut FxHashMap<u128, (usize, Option<PlanStep>)>) -> usize {
        if t == 1 {
            return 0;
        }
        if let Some(&(c, _)) = memo.get(&t) {
            return c;
        }
        let mut best = (usize::MAX, None);
        let mut consider = |step: PlanStep, memo: &mut FxHashMap<u128, (usize, Option<PlanStep>)>| {
            let c = cost(step.base, memo).saturating_add(1);
            if c < best.0 {
                best = (c, Some(step));
            }
        };
        for (near, op) in [(t - 1, AddOp::Add), (t + 1, AddOp::Sub)] {
            let shift = near.trailing_zeros();
            consider(PlanStep { base: near >> shift, shift, kind: PlanKind::Peel(op), value: t }, memo);
        }
        for k in 1..127 {
            let plus = (1u128 << k) + 1;
            if plus > t {
                break;
            }
            for (d, op) in [(plus, AddOp::Add), (plus - 2, AddOp::Sub)] {
                if d > 1 && t % d == 0 {
                    consider(PlanStep { base: t / d, shift: k, kind: PlanKind::Factor(op), value: t }, memo);
                }
            }
        }
        memo.insert(t, best);
        best.0
    }
    let mut memo = FxHashMap::default();
    cost(t, &mut memo);
    let mut plan = Vec::new();
    let mut v = t;
    while let Some(&(_, Some(step))) = memo.get(&v) {
        plan.push(step);
        v = step.base;
    }
    plan.reverse();
    plan
}

/// `t = v<<s + r`, `v<<s - r` or `r - v<<s` for known `v`, `r`. Returns
/// the operands and shifts of a node computing `t`.
fn one_step(known: &BTreeMap<BigNat, Operand>, t: &BigNat) -> Option<(Operand, u32, Operand, u32, AddOp)> {
    let limit = bit_width(t) as u32 + 1;
    for (v, &vo) in known {
        for s in 0..=limit {
            let vs = v << s;
            if &vs < t {
                if let Some(&ro) = known.get(&(t - &vs)) {
                    return Some((vo, s, ro, 0, AddOp::Add));
                }
            } else if &vs > t {
                if let Some(&ro) = known.get(&(&vs - t)) {
                    return Some((vo, s, ro, 0, AddOp::Sub));
                }
            }
            if let Some(&ro) = known.get(&(t + &vs)) {
                return Some((ro, 0, vo, s, AddOp::Sub));
            }
        }
    }
    None
}

/// Minimum adder count by iterative deepening, starting from the heuristic
/// graph as incumbent.
pub fn solve_mcm_optimal(inst: &McmInstance, opts: &McmOptions) -> Result<McmSolution, McmError> {
    let deadline = opts.deadline();
    let heuristic = solve_mcm_heuristic(inst)?;
    deepen(inst, heuristic.graph, opts, &deadline)
}

/// Tries every adder count below the incumbent's. On timeout the incumbent
/// is returned unproven.
fn deepen(inst: &McmInstance, incumbent: AdderGraph, opts: &McmOptions, deadline: &Deadline) -> Result<McmSolution, McmError> {
    inst.check_word_length()?;
    let missing = inst.missing_targets();
    let upper = incumbent.adder_count();
    let end = inst.adder_budget.map_or(upper, |b| upper.min(b + 1));
    let bits = inst.max_word_length;
    for adders in missing.len()..end {
        if deadline.expired() {
            return timed_out(inst, incumbent);
        }
        let step = std::time::Instant::now();
        let machine = bits <= 64;
        let to_u = |v: &BigNat| v.to_u128().expect("word fits");
        let ins: Vec<u128> = if machine { inst.inputs.iter().map(to_u).collect() } else { Vec::new() };
        let ts: Vec<u128> = if machine { missing.iter().map(to_u).collect() } else { Vec::new() };
        let mut method = "exhaustive";
        let exhaustive = if !machine {
            None
        } else if adders <= opts.exhaustive_depth {
            Some(exhaustive::search(&ins, &ts, bits as u32, adders, deadline))
        } else if !opts.exhaustive_probe.is_zero() {
            method = "probe";
            match exhaustive::search(&ins, &ts, bits as u32, adders, &deadline.tightened(opts.exhaustive_probe)) {
                exhaustive::Outcome::Aborted => None,
                decided => Some(decided),
            }
        } else {
            None
        };
        let found = match exhaustive {
            Some(exhaustive::Outcome::Found(steps)) => Some(graph_from_steps(inst, &steps)?),
            Some(exhaustive::Outcome::Infeasible) => None,
            Some(exhaustive::Outcome::Aborted) => return timed_out(inst, incumbent),
            None => {
                if deadline.expired() {
                    return timed_out(inst, incumbent);
                }
                method = "sat";
                let (f, model) = encoding::build(&inst.inputs, &missing, bits as usize, adders);
                let outcome = opts.backend.solve(&f, deadline)?;
                match outcome.status {
                    SatStatus::Satisfiable => Some(graph_from_model(inst, &model.decode(&outcome))?),
                    SatStatus::Unsatisfiable => None,
                    SatStatus::Timeout => return timed_out(inst, incumbent),
                }
            }
        };
        log::debug!(
            "{} targets, inputs {:?}, {} adders, {bits} bits: {} in {:.3}s ({})",
            missing.len(),
            inst.inputs.iter().map(ToString::to_string).collect::<Vec<_>>(),
            adders,
            if found.is_some() { "found" } else { "infeasible" },
            step.elapsed().as_secs_f64(),
            method,
        );
        if let Some(g) = found {
            return Ok(McmSolution::new(g, true, false));
        }
    }
    match inst.adder_budget {
        Some(b) if upper > b => Err(McmError::Infeasible(b)),
        _ => Ok(McmSolution::new(incumbent, true, false)),
    }
}

fn timed_out(inst: &McmInstance, incumbent: AdderGraph) -> Result<McmSolution, McmError> {
    match inst.adder_budget {
        Some(b) if incumbent.adder_count() > b => Err(McmError::Infeasible(b)),
        _ => Ok(McmSolution::new(incumbent, false, true)),
    }
}

fn graph_from_model(inst: &McmInstance, adders: &[encoding::DecodedAdder]) -> Result<AdderGraph, McmError> {
    let mut g = AdderGraph::with_inputs(inst.inputs.clone());
    let n = inst.inputs.len();
    let operand = |k: usize| if k < n { Operand::Input(k) } else { Operand::Node(k - n) };
    for a in adders {
        let (l, r) = (operand(a.left), operand(a.right));
        match (a.negate_left, a.negate_right) {
            (false, false) => g.push_node(l, a.shift, r, 0, AddOp::Add)?,
            (false, true) => g.push_node(l, a.shift, r, 0, AddOp::Sub)?,
            _ => g.push_node(r, 0, l, a.shift, AddOp::Sub)?,
        };
    }
    bind_targets(&mut g, &inst.targets)?;
    g.validate()?;
    Ok(g)
}

fn graph_from_steps(inst: &McmInstance, steps: &[exhaustive::Step]) -> Result<AdderGraph, McmError> {
    let mut g = AdderGraph::with_inputs(inst.inputs.clone());
    let mut index: BTreeMap<u128, Operand> =
        inst.inputs.iter().enumerate().map(|(i, v)| (v.to_u128().expect("word fits"), Operand::Input(i))).collect();
    for s in steps {
        let (l, r) = (index[&s.left], index[&s.right]);
        let n = match s.kind {
            exhaustive::StepKind::Add => g.push_node(l, s.shift, r, 0, AddOp::Add)?,
            exhaustive::StepKind::SubRight => g.push_node(l, s.shift, r, 0, AddOp::Sub)?,
            exhaustive::StepKind::SubLeft => g.push_node(r, 0, l, s.shift, AddOp::Sub)?,
        };
        index.insert(s.value, n);
    }
    bind_targets(&mut g, &inst.targets)?;
    g.validate()?;
    Ok(g)
}

/// Inputs `{1} ∪ S` of a reconstruction graph, in ascending order after 1.
fn reconstruction_inputs(d: &Decomposition) -> Vec<BigNat> {
    let mut inputs = vec![BigNat::one()];
    inputs.extend(d.unique_patterns().into_iter().filter(|v| !v.is_one()));
    inputs
}

/// Accumulates the placements of each target from the most significant one
/// down, adding or subtracting each shifted pattern: `k - 1` adders for a
/// target with `k` placements.
pub fn reconstruct_naive(d: &Decomposition) -> Result<AdderGraph, McmError> {
    d.validate()?;
    let mut g = AdderGraph::with_inputs(reconstruction_inputs(d));
    for (m, target) in d.targets.iter().enumerate() {
        let mut ps: Vec<_> = d.placements_of(m).collect();
        ps.sort_by(|a, b| b.offset.cmp(&a.offset));
        let input = |g: &AdderGraph, p: &PlacedPattern| Operand::Input(g.input_index(p.pattern.value()).expect("pattern is an input"));
        let first = ps[0];
        let (mut acc, mut acc_shift, mut negative) = (input(&g, first), first.offset, first.negated);
        for p in &ps[1..] {
            let operand = input(&g, p);
            let (node, neg) = g.push_signed(acc, (acc_shift - p.offset) as u32, negative, operand, 0, p.negated)?;
            acc = node;
            acc_shift = p.offset;
            negative = neg;
        }
        debug_assert!(!negative);
        g.bind_output(target.clone(), acc, acc_shift as u32);
    }
    g.validate()?;
    Ok(g.pruned())
}

/// Exact reconstruction over the inputs `{1} ∪ S`, seeded with the naive
/// graph; on timeout the naive graph is returned.
pub fn reconstruct_optimal(d: &Decomposition, opts: &McmOptions) -> Result<McmSolution, McmError> {
    let deadline = opts.deadline();
    reconstruct_optimal_until(d, opts, &deadline)
}

pub(crate) fn reconstruct_optimal_until(d: &Decomposition, opts: &McmOptions, deadline: &Deadline) -> Result<McmSolution, McmError> {
    let naive = reconstruct_naive(d)?;
    let inst = McmInstance::with_inputs(&reconstruction_inputs(d), &d.targets)?;
    let heuristic = solve_mcm_heuristic(&inst)?.graph;
    if heuristic.adder_count() >= naive.adder_count() {
        return deepen(&inst, naive, opts, deadline);
    }
    // The smaller heuristic graph only bounds the search; a timeout still
    // falls back to the naive graph.
    let sol = deepen(&inst, heuristic, opts, deadline)?;
    if sol.timed_out {
        return Ok(McmSolution::new(naive, false, true));
    }
    Ok(sol)
}

pub(crate) fn solve_mcm_optimal_until(inst: &McmInstance, opts: &McmOptions, deadline: &Deadline) -> Result<McmSolution, McmError> {
    let heuristic = solve_mcm_heuristic(inst)?;
    deepen(inst, heuristic.graph, opts, deadline)
}
