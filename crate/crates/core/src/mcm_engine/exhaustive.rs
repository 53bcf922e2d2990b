//! Depth-first enumeration of adder sequences over machine integers.
//!
//! Node semantics match the SAT encoding: a node is `a<<s + b`, `a<<s - b`
//! or `b - a<<s` with `a<<s < 2^bits` and a result in `(0, 2^bits)`.
//! Adjacent independent nodes are explored in increasing value order only,
//! which removes permutations of the same graph without losing any.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::satcore::Deadline;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum StepKind {
    /// `left<<shift + right`
    Add,
    /// `left<<shift - right`
    SubRight,
    /// `right - left<<shift`
    SubLeft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Step {
    pub left: u128,
    pub shift: u32,
    pub right: u128,
    pub kind: StepKind,
    pub value: u128,
}

#[derive(Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Found(Vec<Step>),
    Infeasible,
    Aborted,
}

/// Values wider than this are out of reach of the search.
pub(crate) const MAX_BITS: u32 = 100;

/// Searches for exactly `adders` nodes (or fewer) that, together with
/// `inputs`, contain every value in `targets`.
pub(crate) fn search(inputs: &[u128], targets: &[u128], bits: u32, adders: usize, deadline: &Deadline) -> Outcome {
    assert!(bits <= MAX_BITS, "word length {bits} too large for exhaustive search");
    let mut s = Search {
        values: Vec::new(),
        targets: Vec::new(),
        limit: 1u128 << bits,
        bits,
        steps: Vec::new(),
        deadline,
        ticks: 0,
        aborted: false,
    };
    for &v in inputs {
        if !s.values.contains(&v) {
            s.values.push(v);
        }
    }
    for &t in targets {
        if !s.targets.contains(&t) && !s.values.contains(&t) {
            s.targets.push(t);
        }
    }
    let inputs_len = s.values.len();
    if s.dfs(adders, inputs_len) {
        Outcome::Found(s.steps)
    } else if s.aborted {
        Outcome::Aborted
    } else {
        Outcome::Infeasible
    }
}

struct Search<'a> {
    values: Vec<u128>,
    targets: Vec<u128>,
    limit: u128,
    bits: u32,
    steps: Vec<Step>,
    deadline: &'a Deadline,
    ticks: u32,
    aborted: bool,
}

impl Search<'_> {
    /// Every value reachable with one node, keyed by value. The flag tells
    /// whether some way of building it reads the most recent node.
    fn candidates(&self, inputs_len: usize) -> Vec<(Step, bool)> {
        let last = (self.values.len() > inputs_len).then(|| self.values.len() - 1);
        let mut out: Vec<(Step, bool)> = Vec::new();
        let mut index = FxHashMap::default();
        let mut offer = |step: Step, uses_last: bool, out: &mut Vec<(Step, bool)>| {
            if self.values.contains(&step.value) {
                return;
            }
            match index.get(&step.value) {
                Some(&k) => {
                    let entry: &mut (Step, bool) = &mut out[k];
                    if uses_last && !entry.1 {
                        *entry = (step, true);
                    }
                }
                None => {
                    index.insert(step.value, out.len());
                    out.push((step, uses_last));
                }
            }
        };
        for (i, &a) in self.values.iter().enumerate() {
            for (j, &b) in self.values.iter().enumerate() {
                let uses_last = last == Some(i) || last == Some(j);
                for shift in 0..self.bits {
                    let la = a << shift;
                    if la >= self.limit {
                        break;
                    }
                    let mut push = |kind, value| offer(Step { left: a, shift, right: b, kind, value }, uses_last, &mut out);
                    if la + b < self.limit {
                        push(StepKind::Add, la + b);
                    }
                    if la > b {
                        push(StepKind::SubRight, la - b);
                    }
                    if b > la {
                        push(StepKind::SubLeft, b - la);
                    }
                }
            }
        }
        out.sort_by_key(|(s, _)| s.value);
        out
    }

    /// A node equal to `t` built from the current values, preferring one
    /// that reads the most recent node.
    fn reach(&self, t: u128, inputs_len: usize) -> Option<(Step, bool)> {
        let last = (self.values.len() > inputs_len).then(|| self.values.len() - 1);
        let mut found = None;
        for (i, &a) in self.values.iter().enumerate() {
            for shift in 0..self.bits {
                let la = a << shift;
                if la >= self.limit {
                    break;
                }
                let ways = [(t.checked_sub(la), StepKind::Add), (la.checked_sub(t), StepKind::SubRight), (Some(t + la), StepKind::SubLeft)];
                for (b, kind) in ways {
                    let Some(j) = b.and_then(|b| self.values.iter().position(|&v| v == b)) else {
                        continue;
                    };
                    let step = Step { left: a, shift, right: self.values[j], kind, value: t };
                    if last == Some(i) || last == Some(j) {
                        return Some((step, true));
                    }
                    found.get_or_insert((step, false));
                }
            }
        }
        found
    }

    /// Superset of the values `v` such that one node reading `v` turns the
    /// current values plus `v` into `t`.
    fn helpers(&self, t: u128) -> FxHashSet<u128> {
        let mut out = FxHashSet::default();
        for &x in &self.values {
            helpers_via(t, x, self.bits, self.limit, |v| {
                out.insert(v);
            });
        }
        out.extend(divisors(t, self.bits));
        out
    }

    fn two_step_base(&self, t: u128) -> TwoStep {
        let mut reach = FxHashSet::default();
        for (i, &a) in self.values.iter().enumerate() {
            for &b in &self.values[i..] {
                one_step(a, b, self.bits, self.limit, |u| {
                    reach.insert(u);
                });
            }
        }
        let mut goal = self.helpers(t);
        let hit = reach.contains(&t) || goal.iter().any(|u| reach.contains(u));
        goal.insert(t);
        TwoStep { reach, goal, own: FxHashSet::default(), hit }
    }

    /// Whether two more nodes can produce `t`, where the newest value was
    /// pushed after `base` was computed. Never rejects a feasible state.
    fn two_steps_from(&self, t: u128, base: &mut TwoStep) -> bool {
        if base.hit {
            return true;
        }
        let v = *self.values.last().expect("nonempty");
        let TwoStep { reach, goal, own, .. } = base;
        own.clear();
        let mut hit = false;
        helpers_via(t, v, self.bits, self.limit, |u| {
            hit |= reach.contains(&u);
            own.insert(u);
        });
        if hit {
            return true;
        }
        for &y in &self.values {
            one_step(v, y, self.bits, self.limit, |u| {
                hit |= goal.contains(&u) || own.contains(&u);
            });
            if hit {
                return true;
            }
        }
        false
    }

    fn dfs(&mut self, remaining: usize, inputs_len: usize) -> bool {
        let missing: Vec<u128> = self.targets.iter().copied().filter(|t| !self.values.contains(t)).collect();
        if missing.is_empty() {
            return true;
        }
        if missing.len() > remaining {
            return false;
        }
        self.ticks += 1;
        if (self.ticks == 1 || self.ticks % 256 == 0) && self.deadline.expired() {
            self.aborted = true;
        }
        if self.aborted {
            return false;
        }
        if let [t] = missing[..] {
            if let Some((step, _)) = self.reach(t, inputs_len) {
                self.values.push(step.value);
                self.steps.push(step);
                return true;
            }
            if remaining == 1 {
                return false;
            }
        }
        let last_value = (self.values.len() > inputs_len).then(|| *self.values.last().expect("nonempty"));
        let next: Vec<(Step, bool)> = if missing.len() == remaining {
            missing.iter().filter_map(|&t| self.reach(t, inputs_len)).collect()
        } else if let ([t], 2) = (&missing[..], remaining) {
            // In a minimal graph the second to last node feeds the last one.
            let useful = self.helpers(*t);
            self.candidates(inputs_len).into_iter().filter(|(s, _)| useful.contains(&s.value)).collect()
        } else if let ([t], 3) = (&missing[..], remaining) {
            let mut base = self.two_step_base(*t);
            let mut next = Vec::new();
            for (step, uses_last) in self.candidates(inputs_len) {
                self.values.push(step.value);
                if self.two_steps_from(*t, &mut base) {
                    next.push((step, uses_last));
                }
                self.values.pop();
            }
            next
        } else {
            self.candidates(inputs_len)
        };
        for (step, uses_last) in next {
            if let Some(lv) = last_value {
                if !uses_last && step.value < lv {
                    continue;
                }
            }
            self.values.push(step.value);
            self.steps.push(step);
            if self.dfs(remaining - 1, inputs_len) {
                return true;
            }
            self.values.pop();
            self.steps.pop();
            if self.aborted {
                return false;
            }
        }
        false
    }
}

/// Values one node away from the current set, split for incremental use.
struct TwoStep {
    reach: FxHashSet<u128>,
    /// The target and every value one node away from it.
    goal: FxHashSet<u128>,
    /// Scratch set for the newest value's helpers.
    own: FxHashSet<u128>,
    /// Two nodes suffice without the newest value.
    hit: bool,
}

/// Every value of one node combining `a` and `b` in either role.
fn one_step(a: u128, b: u128, bits: u32, limit: u128, mut f: impl FnMut(u128)) {
    for (x, y) in [(a, b), (b, a)] {
        for s in 0..bits {
            let lx = x << s;
            if lx >= limit {
                break;
            }
            if lx + y < limit {
                f(lx + y);
            }
            if lx != y {
                f(lx.abs_diff(y));
            }
        }
    }
}

/// Values `v` such that one node combining `v` and `x` gives `t`.
fn helpers_via(t: u128, x: u128, bits: u32, limit: u128, mut f: impl FnMut(u128)) {
    let mut add = |v: u128| {
        if v > 0 && v < limit {
            f(v);
        }
    };
    for s in 0..bits {
        let m = (1u128 << s) - 1;
        // v<<s combined with x
        if t > x && (t - x) & m == 0 {
            add((t - x) >> s);
        }
        if (t + x) & m == 0 {
            add((t + x) >> s);
        }
        if x > t && (x - t) & m == 0 {
            add((x - t) >> s);
        }
        // x<<s combined with v
        let lx = x << s;
        if lx < limit {
            add(t.wrapping_sub(lx));
            add(lx.wrapping_sub(t));
            add(t + lx);
        }
    }
}

/// Values `v` with `t = v<<s + v` or `t = v<<s - v`.
fn divisors(t: u128, bits: u32) -> Vec<u128> {
    let mut out = Vec::new();
    for s in 0..bits {
        let plus = (1u128 << s) + 1;
        let minus = (1u128 << s) - 1;
        if t % plus == 0 {
            out.push(t / plus);
        }
        if minus > 0 && t % minus == 0 {
            out.push(t / minus);
        }
    }
    out
}

/// Result of [`mcm_oracle`](super::mcm_oracle).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleResult {
    Exact(usize),
    /// No solution within the depth limit.
    Unknown,
}

fn normalize(values: &[u64]) -> Vec<u128> {
    let mut out: Vec<u128> = values.iter().filter(|&&v| v > 0).map(|&v| (v >> v.trailing_zeros()) as u128).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Minimum adder count for `targets` (odd parts) starting from `inputs`,
/// by iterative deepening over exhaustive search.
pub fn mcm_oracle_with_inputs(inputs: &[u64], targets: &[u64], depth_limit: usize) -> OracleResult {
    let mut ins = normalize(inputs);
    if !ins.contains(&1) {
        ins.insert(0, 1);
    }
    let ts = normalize(targets);
    let widest = ts.iter().chain(&ins).map(|v| 128 - v.leading_zeros()).max().unwrap_or(1);
    let lower = ts.iter().filter(|t| !ins.contains(t)).count();
    let never = Deadline::never();
    for depth in lower..=depth_limit {
        if let Outcome::Found(_) = search(&ins, &ts, widest + 1, depth, &never) {
            return OracleResult::Exact(depth);
        }
    }
    OracleResult::Unknown
}

/// Minimum adder count for `targets` from the single input 1.
pub fn mcm_oracle(targets: &[u64], depth_limit: usize) -> OracleResult {
    mcm_oracle_with_inputs(&[1], targets, depth_limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_costs() {
        assert_eq!(mcm_oracle(&[1], 3), OracleResult::Exact(0));
        assert_eq!(mcm_oracle(&[64], 3), OracleResult::Exact(0));
        assert_eq!(mcm_oracle(&[3], 3), OracleResult::Exact(1));
        assert_eq!(mcm_oracle(&[7], 3), OracleResult::Exact(1));
        assert_eq!(mcm_oracle(&[11], 3), OracleResult::Exact(2));
        assert_eq!(mcm_oracle(&[45], 3), OracleResult::Exact(2));
        assert_eq!(mcm_oracle(&[11, 93], 4), OracleResult::Exact(3));
    }

    #[test]
    fn unknown_beyond_limit() {
        assert_eq!(mcm_oracle(&[11], 1), OracleResult::Unknown);
    }

    #[test]
    fn inputs_shorten_paths() {
        assert_eq!(mcm_oracle_with_inputs(&[3, 5], &[2795], 3), OracleResult::Exact(2));
        assert_eq!(mcm_oracle_with_inputs(&[11], &[11 * 4], 3), OracleResult::Exact(0));
    }

    /// Depth-limited search without any pruning or ordering.
    fn plain(values: &mut Vec<u128>, t: u128, bits: u32, depth: usize) -> bool {
        if values.contains(&t) {
            return true;
        }
        if depth == 0 {
            return false;
        }
        let limit = 1u128 << bits;
        let n = values.len();
        for i in 0..n {
            for j in 0..n {
                let b = values[j];
                for s in 0..bits {
                    let la = values[i] << s;
                    if la >= limit {
                        break;
                    }
                    for v in [la + b, la.wrapping_sub(b), b.wrapping_sub(la)] {
                        if v > 0 && v < limit && !values.contains(&v) {
                            values.push(v);
                            let ok = plain(values, t, bits, depth - 1);
                            values.pop();
                            if ok {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }

    fn plain_cost(inputs: &[u64], t: u64, depth_limit: usize) -> OracleResult {
        let mut values: Vec<u128> = inputs.iter().map(|&v| v as u128).collect();
        let bits = values.iter().chain([&(t as u128)]).map(|v| 128 - v.leading_zeros()).max().unwrap() + 1;
        (0..=depth_limit)
            .find(|&d| plain(&mut values, t as u128, bits, d))
            .map_or(OracleResult::Unknown, OracleResult::Exact)
    }

    #[test]
    fn agrees_with_plain_search() {
        for t in (1..128u64).step_by(2) {
            assert_eq!(mcm_oracle(&[t], 3), plain_cost(&[1], t, 3), "t = {t}");
        }
        for inputs in [[1u64, 3], [1, 11], [1, 25]] {
            for t in (1..64u64).step_by(2) {
                assert_eq!(mcm_oracle_with_inputs(&inputs, &[t], 3), plain_cost(&inputs, t, 3), "{inputs:?} -> {t}");
            }
        }
    }

    #[test]
    fn found_steps_replay() {
        let Outcome::Found(steps) = search(&[1], &[11, 93], 8, 3, &Deadline::never()) else { panic!() };
        let mut have = vec![1u128];
        for s in &steps {
            assert!(have.contains(&s.left) && have.contains(&s.right));
            let la = s.left << s.shift;
            let v = match s.kind {
                StepKind::Add => la + s.right,
                StepKind::SubRight => la - s.right,
                StepKind::SubLeft => s.right - la,
            };
            assert_eq!(v, s.value);
            have.push(v);
        }
        assert!(have.contains(&11) && have.contains(&93));
    }

    #[test]
    fn zero_deadline_aborts() {
        let d = Deadline::after(std::time::Duration::ZERO);
        let r = search(&[1], &[0b1010_1101_0110_1011], 17, 6, &d);
        assert_eq!(r, Outcome::Aborted);
    }
}
