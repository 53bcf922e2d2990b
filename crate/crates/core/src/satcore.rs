//! CNF construction, DIMACS I/O and satisfiability backends.
//!
//! The default backend is an embedded CaDiCaL. An external DIMACS solver can
//! be selected instead; it is expected to follow the SAT competition output
//! conventions (`s SATISFIABLE` / `s UNSATISFIABLE` and `v` model lines).

use std::fmt::Write as _;
use std::io::{Read as _, Write as _};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

/// Environment variable naming an external solver binary.
pub const SOLVER_ENV: &str = "VLCM_SAT_SOLVER";

pub type Var = u32;
pub type Lit = i32;

#[derive(Debug, Error)]
pub enum SatError {
    #[error("failed to run solver {program:?}: {source}")]
    Launch { program: PathBuf, source: std::io::Error },
    #[error("solver I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver output not understood: {0}")]
    Protocol(String),
    #[error("solver returned a model violating clause #{0}")]
    BadModel(usize),
    #[error("DIMACS parse error on line {line}: {message}")]
    Dimacs { line: usize, message: String },
}

/// A formula in conjunctive normal form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: u32,
    /// Clause `k` is `lits[starts[k]..starts[k + 1]]`.
    lits: Vec<Lit>,
    starts: Vec<usize>,
    has_empty_clause: bool,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allocates a fresh variable (indices start at 1).
    pub fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        self.num_vars
    }

    pub fn new_vars(&mut self, n: usize) -> Vec<Var> {
        (0..n).map(|_| self.new_var()).collect()
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.starts.len()
    }

    pub fn clause(&self, k: usize) -> &[Lit] {
        let end = self.starts.get(k + 1).copied().unwrap_or(self.lits.len());
        &self.lits[self.starts[k]..end]
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = &[Lit]> + '_ {
        (0..self.starts.len()).map(|k| self.clause(k))
    }

    /// True once an empty clause was added.
    pub fn is_trivially_unsat(&self) -> bool {
        self.has_empty_clause
    }

    /// Adds a clause.
    ///
    /// # Panics
    /// If a literal is zero or refers to an unallocated variable.
    pub fn add_clause<I: IntoIterator<Item = Lit>>(&mut self, lits: I) {
        let start = self.lits.len();
        for l in lits {
            assert!(l != 0 && l.unsigned_abs() <= self.num_vars, "literal {l} out of range");
            self.lits.push(l);
        }
        if self.lits.len() == start {
            self.has_empty_clause = true;
        }
        self.starts.push(start);
    }

    /// Pairwise at-most-one.
    pub fn at_most_one(&mut self, lits: &[Lit]) {
        for (i, &a) in lits.iter().enumerate() {
            for &b in &lits[i + 1..] {
                self.add_clause([-a, -b]);
            }
        }
    }

    pub fn exactly_one(&mut self, lits: &[Lit]) {
        self.add_clause(lits.iter().copied());
        self.at_most_one(lits);
    }

    /// Fresh variable `o` with `o <-> (a & b)`.
    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let o = self.new_var() as Lit;
        self.add_clause([-o, a]);
        self.add_clause([-o, b]);
        self.add_clause([o, -a, -b]);
        o
    }

    /// Fresh variable `o` with `o <-> (a | b | ...)`. An empty input yields a
    /// variable forced false.
    pub fn or(&mut self, lits: &[Lit]) -> Lit {
        let o = self.new_var() as Lit;
        for &l in lits {
            self.add_clause([o, -l]);
        }
        let mut big = vec![-o];
        big.extend_from_slice(lits);
        self.add_clause(big);
        o
    }

    /// Fresh variable `o` with `o <-> (a xor b)`.
    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let o = self.new_var() as Lit;
        self.add_clause([-o, a, b]);
        self.add_clause([-o, -a, -b]);
        self.add_clause([o, -a, b]);
        self.add_clause([o, a, -b]);
        o
    }

    /// Full adder cell: returns `(sum, carry_out)` constrained by the usual
    /// eight sum and six carry clauses.
    pub fn full_adder(&mut self, a: Lit, b: Lit, c: Lit) -> (Lit, Lit) {
        let s = self.new_var() as Lit;
        let co = self.new_var() as Lit;
        self.add_clause([a, b, c, -s]);
        self.add_clause([a, b, -c, s]);
        self.add_clause([a, -b, c, s]);
        self.add_clause([-a, b, c, s]);
        self.add_clause([-a, -b, -c, s]);
        self.add_clause([-a, -b, c, -s]);
        self.add_clause([-a, b, -c, -s]);
        self.add_clause([a, -b, -c, -s]);
        self.add_clause([-a, -b, co]);
        self.add_clause([a, b, -co]);
        self.add_clause([-a, -c, co]);
        self.add_clause([a, c, -co]);
        self.add_clause([-b, -c, co]);
        self.add_clause([b, c, -co]);
        (s, co)
    }

    /// Checks an assignment (indexed by variable, slot 0 unused).
    pub fn check_model(&self, model: &[bool]) -> Result<(), SatError> {
        let value = |l: Lit| model.get(l.unsigned_abs() as usize).copied().unwrap_or(false) == (l > 0);
        for (i, c) in self.clauses().enumerate() {
            if !c.iter().any(|&l| value(l)) {
                return Err(SatError::BadModel(i));
            }
        }
        Ok(())
    }
}

/// Standard DIMACS CNF text.
pub fn emit_dimacs(f: &CnfFormula) -> String {
    let mut s = String::with_capacity(8 * f.lits.len() + 32);
    let _ = writeln!(s, "p cnf {} {}", f.num_vars, f.num_clauses());
    for c in f.clauses() {
        for l in c {
            let _ = write!(s, "{l} ");
        }
        s.push_str("0\n");
    }
    s
}

/// Parses DIMACS CNF text. Comment lines are skipped; clauses may span lines.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, SatError> {
    let mut f = CnfFormula::new();
    let mut declared_clauses = None;
    let mut current = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('c') || t.starts_with('%') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "cnf" {
                return Err(SatError::Dimacs { line: line_no, message: "expected 'p cnf V C'".into() });
            }
            let parse = |s: &str| s.parse::<u32>().map_err(|_| SatError::Dimacs { line: line_no, message: format!("bad count {s:?}") });
            f.num_vars = parse(parts[1])?;
            declared_clauses = Some(parse(parts[2])? as usize);
            continue;
        }
        if declared_clauses.is_none() {
            return Err(SatError::Dimacs { line: line_no, message: "clause before header".into() });
        }
        for tok in t.split_whitespace() {
            let l: Lit = tok.parse().map_err(|_| SatError::Dimacs { line: line_no, message: format!("bad literal {tok:?}") })?;
            if l == 0 {
                f.add_clause(std::mem::take(&mut current));
            } else if l.unsigned_abs() > f.num_vars {
                return Err(SatError::Dimacs { line: line_no, message: format!("literal {l} exceeds variable count") });
            } else {
                current.push(l);
            }
        }
    }
    if !current.is_empty() {
        f.add_clause(current);
    }
    match declared_clauses {
        None => Err(SatError::Dimacs { line: 0, message: "missing header".into() }),
        Some(n) if n != f.num_clauses() => {
            Err(SatError::Dimacs { line: 0, message: format!("header declares {n} clauses, found {}", f.num_clauses()) })
        }
        Some(_) => Ok(f),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatStatus {
    Satisfiable,
    Unsatisfiable,
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatOutcome {
    pub status: SatStatus,
    /// Indexed by variable; slot 0 is unused. Present iff satisfiable.
    pub model: Option<Vec<bool>>,
}

impl SatOutcome {
    fn unsat() -> Self {
        Self { status: SatStatus::Unsatisfiable, model: None }
    }

    fn timeout() -> Self {
        Self { status: SatStatus::Timeout, model: None }
    }

    pub fn is_sat(&self) -> bool {
        self.status == SatStatus::Satisfiable
    }

    /// Truth value of a literal in the model (false without a model).
    pub fn lit(&self, l: Lit) -> bool {
        self.model.as_ref().and_then(|m| m.get(l.unsigned_abs() as usize)).map(|&v| v == (l > 0)).unwrap_or(false)
    }
}

/// Wall-clock limit plus an optional shared stop flag.
#[derive(Clone, Debug)]
pub struct Deadline {
    at: Option<Instant>,
    stop: Option<Arc<AtomicBool>>,
}

impl Deadline {
    pub fn after(timeout: Duration) -> Self {
        Self { at: Instant::now().checked_add(timeout), stop: None }
    }

    pub fn never() -> Self {
        Self { at: None, stop: None }
    }

    pub fn with_stop(mut self, stop: Arc<AtomicBool>) -> Self {
        self.stop = Some(stop);
        self
    }

    pub fn expired(&self) -> bool {
        self.stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed)) || self.at.is_some_and(|at| Instant::now() >= at)
    }

    pub fn remaining(&self) -> Option<Duration> {
        self.at.map(|at| at.saturating_duration_since(Instant::now()))
    }

    /// The earlier of this deadline and `now + timeout`.
    pub fn tightened(&self, timeout: Duration) -> Self {
        let other = Instant::now().checked_add(timeout);
        let at = match (self.at, other) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Self { at, stop: self.stop.clone() }
    }
}

struct DeadlineCallbacks(Deadline);

impl cadical::Callbacks for DeadlineCallbacks {
    fn terminate(&mut self) -> bool {
        self.0.expired()
    }
}

/// Which solver answers satisfiability queries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// CaDiCaL linked into the binary.
    #[default]
    Embedded,
    /// Any solver reading DIMACS from a file argument.
    External { program: PathBuf, args: Vec<String> },
}

impl Backend {
    /// External backend when `VLCM_SAT_SOLVER` is set, embedded otherwise.
    pub fn from_env() -> Self {
        match std::env::var_os(SOLVER_ENV) {
            Some(p) if !p.is_empty() => Backend::External { program: PathBuf::from(p), args: Vec::new() },
            _ => Backend::Embedded,
        }
    }

    /// Solves `f`. A satisfying model is checked against every clause before
    /// it is returned.
    pub fn solve(&self, f: &CnfFormula, deadline: &Deadline) -> Result<SatOutcome, SatError> {
        if f.has_empty_clause {
            return Ok(SatOutcome::unsat());
        }
        if deadline.expired() {
            return Ok(SatOutcome::timeout());
        }
        let outcome = match self {
            Backend::Embedded => solve_embedded(f, deadline),
            Backend::External { program, args } => solve_external(f, deadline, program, args)?,
        };
        if let Some(model) = &outcome.model {
            f.check_model(model)?;
        }
        Ok(outcome)
    }
}

/// Solves with the default backend and a timeout.
pub fn solve(f: &CnfFormula, timeout: Duration) -> Result<SatOutcome, SatError> {
    Backend::default().solve(f, &Deadline::after(timeout))
}

fn solve_embedded(f: &CnfFormula, deadline: &Deadline) -> SatOutcome {
    let mut solver: cadical::Solver<DeadlineCallbacks> = cadical::Solver::new();
    solver.set_callbacks(Some(DeadlineCallbacks(deadline.clone())));
    if f.num_vars > 0 {
        solver.reserve(f.num_vars as i32);
    }
    for c in f.clauses() {
        solver.add_clause(c.iter().copied());
    }
    match solver.solve() {
        Some(true) => {
            let mut model = vec![false; f.num_vars as usize + 1];
            for v in 1..=f.num_vars {
                model[v as usize] = solver.value(v as i32).unwrap_or(false);
            }
            SatOutcome { status: SatStatus::Satisfiable, model: Some(model) }
        }
        Some(false) => SatOutcome::unsat(),
        None => SatOutcome::timeout(),
    }
}

fn solve_external(f: &CnfFormula, deadline: &Deadline, program: &PathBuf, args: &[String]) -> Result<SatOutcome, SatError> {
    let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
    file.write_all(emit_dimacs(f).as_bytes())?;
    file.flush()?;
    let mut child = Command::new(program)
        .args(args)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SatError::Launch { program: program.clone(), source })?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        stdout.read_to_string(&mut out).map(|_| out)
    });
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if deadline.expired() {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(SatOutcome::timeout());
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    let out = reader.join().map_err(|_| SatError::Protocol("reader thread panicked".into()))??;
    parse_solver_output(&out, f.num_vars)
}

/// Interprets competition-style solver output.
pub fn parse_solver_output(out: &str, num_vars: u32) -> Result<SatOutcome, SatError> {
    let mut status = None;
    let mut model = vec![false; num_vars as usize + 1];
    for line in out.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("s ") {
            status = Some(match rest.trim() {
                "SATISFIABLE" => SatStatus::Satisfiable,
                "UNSATISFIABLE" => SatStatus::Unsatisfiable,
                "UNKNOWN" | "INDETERMINATE" => SatStatus::Timeout,
                other => return Err(SatError::Protocol(format!("unknown status {other:?}"))),
            });
        } else if let Some(rest) = t.strip_prefix("v ").or_else(|| (t == "v").then_some("")) {
            for tok in rest.split_whitespace() {
                let l: i64 = tok.parse().map_err(|_| SatError::Protocol(format!("bad model literal {tok:?}")))?;
                let v = l.unsigned_abs() as usize;
                if l != 0 && v <= num_vars as usize {
                    model[v] = l > 0;
                }
            }
        }
    }
    match status {
        Some(SatStatus::Satisfiable) => Ok(SatOutcome { status: SatStatus::Satisfiable, model: Some(model) }),
        Some(s) => Ok(SatOutcome { status: s, model: None }),
        None => Err(SatError::Protocol("no status line".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_var_counts_up() {
        let mut f = CnfFormula::new();
        assert_eq!(f.new_var(), 1);
        let mut f = CnfFormula::new();
        f.new_var();
        f.new_var();
        f.new_var();
        assert_eq!(f.new_var(), 4);
        let a = f.new_var();
        f.add_clause([a as Lit]);
        assert!(f.new_var() > a);
    }

    #[test]
    fn unit_clause_is_sat() {
        let mut f = CnfFormula::new();
        let x = f.new_var() as Lit;
        f.add_clause([x]);
        let out = solve(&f, Duration::from_secs(5)).unwrap();
        assert!(out.is_sat());
        assert!(out.lit(x));
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut f = CnfFormula::new();
        let x = f.new_var() as Lit;
        f.add_clause([x]);
        f.add_clause([-x]);
        assert_eq!(solve(&f, Duration::from_secs(5)).unwrap().status, SatStatus::Unsatisfiable);
    }

    #[test]
    fn empty_clause_marks_unsat() {
        let mut f = CnfFormula::new();
        f.new_var();
        f.add_clause([]);
        assert!(f.is_trivially_unsat());
        assert_eq!(solve(&f, Duration::from_secs(5)).unwrap().status, SatStatus::Unsatisfiable);
    }

    #[test]
    fn zero_timeout_reports_timeout() {
        let mut f = CnfFormula::new();
        let x = f.new_var() as Lit;
        f.add_clause([x]);
        assert_eq!(solve(&f, Duration::ZERO).unwrap().status, SatStatus::Timeout);
    }

    #[test]
    fn dimacs_texts() {
        let mut f = CnfFormula::new();
        assert_eq!(emit_dimacs(&f), "p cnf 0 0\n");
        let a = f.new_var() as Lit;
        f.add_clause([a]);
        assert_eq!(emit_dimacs(&f), "p cnf 1 1\n1 0\n");
        let b = f.new_var() as Lit;
        f.add_clause([-a, b]);
        f.add_clause([-b]);
        assert_eq!(emit_dimacs(&f), "p cnf 2 3\n1 0\n-1 2 0\n-2 0\n");
    }

    #[test]
    fn dimacs_rejects_garbage() {
        assert!(parse_dimacs("1 2 0\n").is_err());
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 x 0\n"), Err(SatError::Dimacs { line: 2, .. })));
        assert!(parse_dimacs("p cnf 1 1\n2 0\n").is_err());
    }

    #[test]
    fn full_adder_truth_table() {
        for bits in 0..8 {
            let mut f = CnfFormula::new();
            let v = f.new_vars(3);
            let (s, co) = f.full_adder(v[0] as Lit, v[1] as Lit, v[2] as Lit);
            for (k, &var) in v.iter().enumerate() {
                let on = bits >> k & 1 == 1;
                f.add_clause([if on { var as Lit } else { -(var as Lit) }]);
            }
            let out = solve(&f, Duration::from_secs(5)).unwrap();
            let total = (bits & 1) + (bits >> 1 & 1) + (bits >> 2 & 1);
            assert_eq!(out.lit(s), total & 1 == 1);
            assert_eq!(out.lit(co), total >= 2);
        }
    }

    #[test]
    fn parses_competition_output() {
        let out = parse_solver_output("c hello\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3).unwrap();
        assert_eq!(out.model, Some(vec![false, true, false, true]));
        assert_eq!(parse_solver_output("s UNSATISFIABLE\n", 3).unwrap().status, SatStatus::Unsatisfiable);
        assert!(parse_solver_output("garbage\n", 3).is_err());
    }

    #[cfg(unix)]
    fn script(body: &str) -> tempfile::TempPath {
        use std::os::unix::fs::PermissionsExt;
        let mut f = tempfile::Builder::new().suffix(".sh").tempfile().unwrap();
        writeln!(f, "#!/bin/sh\n{body}").unwrap();
        let path = f.into_temp_path();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    #[cfg(unix)]
    #[test]
    fn external_backend_protocol() {
        let mut f = CnfFormula::new();
        let a = f.new_var() as Lit;
        let b = f.new_var() as Lit;
        f.add_clause([a, b]);
        f.add_clause([-a]);

        let good = script("grep -q '^p cnf 2 2' \"$1\" || exit 3\necho 's SATISFIABLE'\necho 'v -1 2 0'\nexit 10");
        let backend = Backend::External { program: good.to_path_buf(), args: vec![] };
        let out = backend.solve(&f, &Deadline::after(Duration::from_secs(10))).unwrap();
        assert!(out.lit(b) && !out.lit(a));

        let liar = script("echo 's SATISFIABLE'\necho 'v 1 -2 0'");
        let backend = Backend::External { program: liar.to_path_buf(), args: vec![] };
        assert!(matches!(backend.solve(&f, &Deadline::after(Duration::from_secs(10))), Err(SatError::BadModel(_))));

        let slow = script("sleep 5\necho 's UNSATISFIABLE'");
        let backend = Backend::External { program: slow.to_path_buf(), args: vec![] };
        let out = backend.solve(&f, &Deadline::after(Duration::from_millis(100))).unwrap();
        assert_eq!(out.status, SatStatus::Timeout);

        let missing = Backend::External { program: "/nonexistent/solver".into(), args: vec![] };
        assert!(matches!(missing.solve(&f, &Deadline::after(Duration::from_secs(1))), Err(SatError::Launch { .. })));
    }
}
