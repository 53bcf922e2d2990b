//! SAT model for overlapping binary pattern decomposition.
//!
//! For a fixed total pattern count and an upper bound on unique patterns the
//! formula is the conjunction of six groups of clauses:
//!
//! 1. every one bit of every target is mapped to exactly one pattern bit;
//! 2. a pattern bit is set iff some target bit is mapped onto it;
//! 3. bits mapped onto the same pattern keep their relative distance;
//! 4. every pattern equals one of the unique patterns;
//! 5. a pattern takes bits from a single target;
//! 6. unique patterns are odd.
//!
//! Mapping variables only exist for target positions holding a one.

use std::time::Duration;

use super::{check_inputs, chunk_divide_binary, Decomposition, DecomposeError, Encoding, PlacedPattern};
use crate::numrep::{one_positions, BigNat, Pattern};
use crate::satcore::{Backend, CnfFormula, Deadline, Lit, SatOutcome, SatStatus};

/// Variable indices of one instantiated pattern decomposition formula.
#[derive(Clone, Debug)]
pub struct PatternSatModel {
    pub width: usize,
    pub total_patterns: usize,
    pub unique_limit: usize,
    /// `alpha[d][x]`: bit `x` of unique pattern `d`.
    pub alpha: Vec<Vec<Lit>>,
    /// `beta[t][x]`: bit `x` of pattern `t`.
    pub beta: Vec<Vec<Lit>>,
    /// `gamma[m][k][t][x]`: the `k`-th one of target `m` (at bit
    /// `one_positions[m][k]`) is mapped to bit `x` of pattern `t`.
    pub gamma: Vec<Vec<Vec<Vec<Lit>>>>,
    /// `delta[d][t]`: pattern `t` equals unique pattern `d`.
    pub delta: Vec<Vec<Lit>>,
    /// `epsilon[m][t]`: pattern `t` takes bits from target `m`.
    pub epsilon: Vec<Vec<Lit>>,
    pub one_positions: Vec<Vec<u64>>,
    targets: Vec<BigNat>,
}

/// Formulas beyond this many clauses are not built; the search reports them
/// like a timeout.
pub const MAX_CLAUSES: usize = 25_000_000;

/// Clause count of the two quadratic groups (1 and 3).
fn estimated_clauses(ones: &[Vec<u64>], width: usize, tp: usize) -> usize {
    let slots = tp * width;
    ones.iter()
        .map(|ys| {
            let n = ys.len();
            n * slots * slots.saturating_sub(1) / 2 + tp * n * n * width * width / 2
        })
        .sum()
}

/// Builds the decomposition formula for `total_patterns` placements with at
/// most `unique_limit` distinct patterns of width at most `w`.
pub fn build_pattern_cnf(
    targets: &[BigNat],
    w: u32,
    total_patterns: usize,
    unique_limit: usize,
) -> Result<(CnfFormula, PatternSatModel), DecomposeError> {
    build_with_deadline(targets, w, total_patterns, unique_limit, &Deadline::never())
        .map(|r| r.expect("formula exceeds the clause budget"))
}

/// Returns `Ok(None)` when the deadline passes during construction.
fn build_with_deadline(
    targets: &[BigNat],
    w: u32,
    total_patterns: usize,
    unique_limit: usize,
    deadline: &Deadline,
) -> Result<Option<(CnfFormula, PatternSatModel)>, DecomposeError> {
    check_inputs(targets, w)?;
    assert!(total_patterns >= 1 && unique_limit >= 1, "pattern counts must be positive");
    let width = w as usize;
    let tp = total_patterns;
    let up = unique_limit;
    let ones: Vec<Vec<u64>> = targets.iter().map(one_positions).collect();
    if estimated_clauses(&ones, width, tp) > MAX_CLAUSES {
        return Ok(None);
    }

    let mut f = CnfFormula::new();
    let lits = |f: &mut CnfFormula, n: usize| -> Vec<Lit> { f.new_vars(n).into_iter().map(|v| v as Lit).collect() };
    let alpha: Vec<Vec<Lit>> = (0..up).map(|_| lits(&mut f, width)).collect();
    let beta: Vec<Vec<Lit>> = (0..tp).map(|_| lits(&mut f, width)).collect();
    let gamma: Vec<Vec<Vec<Vec<Lit>>>> = ones
        .iter()
        .map(|ys| ys.iter().map(|_| (0..tp).map(|_| lits(&mut f, width)).collect()).collect())
        .collect();
    let delta: Vec<Vec<Lit>> = (0..up).map(|_| lits(&mut f, tp)).collect();
    let epsilon: Vec<Vec<Lit>> = (0..targets.len()).map(|_| lits(&mut f, tp)).collect();

    // 1: exactly one pattern slot per target one.
    for slots_by_bit in &gamma {
        for slots in slots_by_bit {
            let flat: Vec<Lit> = slots.iter().flatten().copied().collect();
            f.add_clause(flat.iter().copied());
            f.at_most_one(&flat);
        }
        if deadline.expired() {
            return Ok(None);
        }
    }

    // 2: pattern bits follow their mappings.
    for t in 0..tp {
        for x in 0..width {
            let mut support = vec![-beta[t][x]];
            for (m, by_bit) in gamma.iter().enumerate() {
                for k in 0..ones[m].len() {
                    let g = by_bit[k][t][x];
                    f.add_clause([-g, beta[t][x]]);
                    support.push(g);
                }
            }
            f.add_clause(support);
        }
    }

    // 3: all bits mapped onto one pattern share the same offset.
    for (m, by_bit) in gamma.iter().enumerate() {
        let ys = &ones[m];
        for t in 0..tp {
            for k1 in 0..ys.len() {
                for x1 in 0..width {
                    for k2 in k1..ys.len() {
                        let dy = (ys[k2] - ys[k1]) as i64;
                        if dy >= width as i64 {
                            // No x2 can match; every combination is invalid.
                            for x2 in 0..width {
                                f.add_clause([-by_bit[k1][t][x1], -by_bit[k2][t][x2]]);
                            }
                            continue;
                        }
                        let x2_start = if k2 == k1 { x1 + 1 } else { 0 };
                        for x2 in x2_start..width {
                            if dy != x2 as i64 - x1 as i64 {
                                f.add_clause([-by_bit[k1][t][x1], -by_bit[k2][t][x2]]);
                            }
                        }
                    }
                }
            }
            if deadline.expired() {
                return Ok(None);
            }
        }
    }

    // 4: each pattern equals some unique pattern.
    for t in 0..tp {
        f.add_clause((0..up).map(|d| delta[d][t]));
        for d in 0..up {
            for x in 0..width {
                f.add_clause([alpha[d][x], -beta[t][x], -delta[d][t]]);
                f.add_clause([-alpha[d][x], beta[t][x], -delta[d][t]]);
            }
        }
    }

    // 5: a pattern draws from one target only.
    for (m, by_bit) in gamma.iter().enumerate() {
        for slots in by_bit {
            for (t, xs) in slots.iter().enumerate() {
                for &g in xs {
                    f.add_clause([-g, epsilon[m][t]]);
                }
            }
        }
    }
    for t in 0..tp {
        for m1 in 0..targets.len() {
            for m2 in m1 + 1..targets.len() {
                f.add_clause([-epsilon[m1][t], -epsilon[m2][t]]);
            }
        }
    }

    // 6: unique patterns are odd.
    for a in &alpha {
        f.add_clause([a[0]]);
    }

    let model = PatternSatModel {
        width,
        total_patterns: tp,
        unique_limit: up,
        alpha,
        beta,
        gamma,
        delta,
        epsilon,
        one_positions: ones,
        targets: targets.to_vec(),
    };
    Ok(Some((f, model)))
}

impl PatternSatModel {
    /// Reads the placements out of a satisfying assignment.
    pub fn extract(&self, outcome: &SatOutcome) -> Decomposition {
        let mut placements = Vec::with_capacity(self.total_patterns);
        for t in 0..self.total_patterns {
            let mut value = BigNat::default();
            for x in 0..self.width {
                if outcome.lit(self.beta[t][x]) {
                    value.set_bit(x as u64, true);
                }
            }
            let anchor = self.gamma.iter().enumerate().find_map(|(m, by_bit)| {
                by_bit.iter().enumerate().find_map(|(k, slots)| {
                    (0..self.width)
                        .find(|&x| outcome.lit(slots[t][x]))
                        .map(|x| (m, self.one_positions[m][k] as usize - x))
                })
            });
            let (target_index, offset) = anchor.expect("every pattern receives its low bit");
            placements.push(PlacedPattern {
                target_index,
                offset,
                pattern: Pattern::new(value).expect("unique patterns are odd"),
                negated: false,
            });
        }
        Decomposition { encoding: Encoding::Binary, targets: self.targets.clone(), placements }
    }
}

#[derive(Clone, Debug)]
pub struct PatternSearchOptions {
    pub timeout: Duration,
    pub backend: Backend,
    /// Also explore total pattern counts up to `min + tp_slack`.
    pub tp_slack: usize,
}

impl Default for PatternSearchOptions {
    fn default() -> Self {
        Self { timeout: Duration::from_secs(600), backend: Backend::default(), tp_slack: 0 }
    }
}

/// Result of the lexicographic (#TP, #UP) search.
#[derive(Clone, Debug)]
pub struct PatternSearch {
    pub decomposition: Decomposition,
    pub total_patterns: usize,
    pub unique_patterns: usize,
    /// The decomposition is the chunk division because the search timed out.
    pub fallback: bool,
    /// Fewer unique patterns were shown infeasible for this total count.
    pub optimal: bool,
    pub sat_calls: usize,
}

/// Minimal #TP (the chunk division count), then minimal #UP by increasing
/// the unique-pattern limit from 1 until the formula becomes satisfiable.
pub fn solve_pattern_decomposition(
    targets: &[BigNat],
    w: u32,
    opts: &PatternSearchOptions,
) -> Result<PatternSearch, DecomposeError> {
    let deadline = Deadline::after(opts.timeout);
    let chunk = chunk_divide_binary(targets, w)?;
    search_fixed_tp(targets, w, chunk.total_patterns(), Some(&chunk), &opts.backend, &deadline)
        .map(|r| r.unwrap_or_else(|| fallback(chunk)))
}

/// One search result per total pattern count in `min..=min + tp_slack`.
/// Counts that time out are reported as chunk-division fallbacks, and counts
/// exceeding the number of target ones are skipped.
pub fn solve_pattern_decomposition_range(
    targets: &[BigNat],
    w: u32,
    opts: &PatternSearchOptions,
) -> Result<Vec<PatternSearch>, DecomposeError> {
    let deadline = Deadline::after(opts.timeout);
    let chunk = chunk_divide_binary(targets, w)?;
    let min = chunk.total_patterns();
    let ones: usize = targets.iter().map(|t| t.count_ones() as usize).sum();
    let mut out = Vec::new();
    for tp in min..=(min + opts.tp_slack).min(ones) {
        let hint = (tp == min).then_some(&chunk);
        match search_fixed_tp(targets, w, tp, hint, &opts.backend, &deadline)? {
            Some(r) => out.push(r),
            None => {
                out.push(fallback(chunk.clone()));
                break;
            }
        }
    }
    Ok(out)
}

fn fallback(chunk: Decomposition) -> PatternSearch {
    PatternSearch {
        total_patterns: chunk.total_patterns(),
        unique_patterns: chunk.unique_patterns().len(),
        decomposition: chunk,
        fallback: true,
        optimal: false,
        sat_calls: 0,
    }
}

/// `Ok(None)` on timeout. `known` is a feasible decomposition with `tp`
/// placements; once the limit reaches its unique count it is returned as is.
fn search_fixed_tp(
    targets: &[BigNat],
    w: u32,
    tp: usize,
    known: Option<&Decomposition>,
    backend: &Backend,
    deadline: &Deadline,
) -> Result<Option<PatternSearch>, DecomposeError> {
    let known_up = known.map(|d| d.unique_patterns().len());
    let mut sat_calls = 0;
    for up in 1..=tp {
        if known_up == Some(up) {
            let d = known.expect("known").clone();
            return Ok(Some(PatternSearch { total_patterns: tp, unique_patterns: up, decomposition: d, fallback: false, optimal: true, sat_calls }));
        }
        let Some((f, model)) = build_with_deadline(targets, w, tp, up, deadline)? else {
            return Ok(None);
        };
        sat_calls += 1;
        let outcome = backend.solve(&f, deadline).map_err(|e| DecomposeError::Backend(e.to_string()))?;
        match outcome.status {
            SatStatus::Timeout => return Ok(None),
            SatStatus::Unsatisfiable => continue,
            SatStatus::Satisfiable => {
                let d = model.extract(&outcome);
                debug_assert!(d.validate_with_width(w).is_ok());
                let unique = d.unique_patterns().len();
                return Ok(Some(PatternSearch { total_patterns: tp, unique_patterns: unique, decomposition: d, fallback: false, optimal: true, sat_calls }));
            }
        }
    }
    // up = tp is always satisfiable when tp does not exceed the number of ones.
    Ok(None)
}
