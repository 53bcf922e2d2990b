//! CNF model of an adder graph with a fixed number of adders.
//!
//! Every value is a `bits`-wide bit vector. Adder `i` selects a left and a
//! right operand among the inputs and adders `0..i`, shifts the left one by
//! a one-hot amount, optionally negates one side and adds through a
//! ripple-carry chain one bit wider than the word. The top bit of the sum
//! must be clear, so results stay in `(0, 2^bits)`.

use num_bigint::BigUint;

use crate::satcore::{CnfFormula, Lit, SatOutcome};

/// Decoded adder: `left<<shift (+|-) right` or `right - left<<shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct DecodedAdder {
    /// Operand indices: inputs first, then adders.
    pub left: usize,
    pub right: usize,
    pub shift: u32,
    pub negate_left: bool,
    pub negate_right: bool,
}

pub(crate) struct AdderModel {
    sel_left: Vec<Vec<Lit>>,
    sel_right: Vec<Vec<Lit>>,
    shift: Vec<Vec<Lit>>,
    neg_left: Vec<Lit>,
    neg_right: Vec<Lit>,
    result: Vec<Vec<Lit>>,
}

fn bit(v: &BigUint, b: usize) -> bool {
    v.bit(b as u64)
}

/// Operand value bits: constants for inputs, result literals for adders.
enum Source<'a> {
    Const(&'a BigUint),
    Var(&'a [Lit]),
}

/// Builds the model for `adders` adders over `inputs` such that every value
/// in `targets` equals some adder result. Targets already among the inputs
/// are ignored.
///
/// Graphs with a removable adder are excluded, so the formula is only
/// equisatisfiable with the plain question when no smaller count works.
pub(crate) fn build(inputs: &[BigUint], targets: &[BigUint], bits: usize, adders: usize) -> (CnfFormula, AdderModel) {
    let mut f = CnfFormula::new();
    let n = inputs.len();
    let mut m = AdderModel {
        sel_left: Vec::new(),
        sel_right: Vec::new(),
        shift: Vec::new(),
        neg_left: Vec::new(),
        neg_right: Vec::new(),
        result: Vec::new(),
    };
    let fresh = |f: &mut CnfFormula, k: usize| -> Vec<Lit> { f.new_vars(k).into_iter().map(|v| v as Lit).collect() };

    for i in 0..adders {
        let cands = n + i;
        let sl = fresh(&mut f, cands);
        let sr = fresh(&mut f, cands);
        f.exactly_one(&sl);
        f.exactly_one(&sr);

        // Operand multiplexers.
        let x = fresh(&mut f, bits);
        let z = fresh(&mut f, bits);
        for (sel, out) in [(&sl, &x), (&sr, &z)] {
            for (k, &s) in sel.iter().enumerate() {
                let src = if k < n { Source::Const(&inputs[k]) } else { Source::Var(&m.result[k - n]) };
                for b in 0..bits {
                    match src {
                        Source::Const(v) => f.add_clause([-s, if bit(v, b) { out[b] } else { -out[b] }]),
                        Source::Var(r) => {
                            f.add_clause([-s, -r[b], out[b]]);
                            f.add_clause([-s, r[b], -out[b]]);
                        }
                    }
                }
            }
        }

        // Left shift; bits pushed past the word are forbidden.
        let sh = fresh(&mut f, bits);
        f.exactly_one(&sh);
        let y = fresh(&mut f, bits);
        for (s, &lit) in sh.iter().enumerate() {
            for b in 0..bits {
                if b < s {
                    f.add_clause([-lit, -y[b]]);
                } else {
                    f.add_clause([-lit, -x[b - s], y[b]]);
                    f.add_clause([-lit, x[b - s], -y[b]]);
                }
                if b + s >= bits {
                    f.add_clause([-lit, -x[b]]);
                }
            }
        }

        let nx = f.new_var() as Lit;
        let ny = f.new_var() as Lit;
        f.add_clause([-nx, -ny]);
        let carry_in = f.or(&[nx, ny]);

        let mut carry = carry_in;
        let mut sum = Vec::with_capacity(bits + 1);
        for b in 0..=bits {
            let (l, r) = if b < bits { (f.xor(y[b], nx), f.xor(z[b], ny)) } else { (nx, ny) };
            let (s, co) = f.full_adder(l, r, carry);
            sum.push(s);
            carry = co;
        }
        f.add_clause([-sum[bits]]);
        sum.truncate(bits);
        f.add_clause(sum.iter().copied());

        m.sel_left.push(sl);
        m.sel_right.push(sr);
        m.shift.push(sh);
        m.neg_left.push(nx);
        m.neg_right.push(ny);
        m.result.push(sum);
    }

    let mut hits: Vec<Vec<Lit>> = vec![Vec::new(); adders];
    for t in targets {
        if inputs.contains(t) {
            continue;
        }
        let mut hit = Vec::with_capacity(adders);
        for (i, r) in m.result.iter().enumerate() {
            let h = f.new_var() as Lit;
            for (b, &lit) in r.iter().enumerate() {
                f.add_clause([-h, if bit(t, b) { lit } else { -lit }]);
            }
            hit.push(h);
            hits[i].push(h);
        }
        f.add_clause(hit);
    }

    // Minimal graphs only: the last adder is a target, and every other
    // adder is a target or an operand of a later adder.
    if let Some(last) = hits.last() {
        f.add_clause(last.iter().copied());
    }
    // Adjacent independent adders appear in increasing value order.
    for i in 0..adders.saturating_sub(1) {
        let lt = less_than(&mut f, &m.result[i], &m.result[i + 1]);
        f.add_clause([m.sel_left[i + 1][n + i], m.sel_right[i + 1][n + i], lt]);
    }
    for i in 0..adders.saturating_sub(1) {
        let mut reasons = hits[i].clone();
        for j in i + 1..adders {
            reasons.push(m.sel_left[j][n + i]);
            reasons.push(m.sel_right[j][n + i]);
        }
        f.add_clause(reasons);
    }
    (f, m)
}

/// Literal equivalent to `a < b` for equal-width LSB-first bit vectors.
fn less_than(f: &mut CnfFormula, a: &[Lit], b: &[Lit]) -> Lit {
    let mut lt = f.and(-a[0], b[0]);
    for k in 1..a.len() {
        let here = f.and(-a[k], b[k]);
        let eq = -f.xor(a[k], b[k]);
        let below = f.and(eq, lt);
        lt = f.or(&[here, below]);
    }
    lt
}

impl AdderModel {
    pub fn decode(&self, outcome: &SatOutcome) -> Vec<DecodedAdder> {
        let one_hot = |lits: &[Lit]| lits.iter().position(|&l| outcome.lit(l)).expect("one-hot group has a true literal");
        (0..self.sel_left.len())
            .map(|i| DecodedAdder {
                left: one_hot(&self.sel_left[i]),
                right: one_hot(&self.sel_right[i]),
                shift: one_hot(&self.shift[i]) as u32,
                negate_left: outcome.lit(self.neg_left[i]),
                negate_right: outcome.lit(self.neg_right[i]),
            })
            .collect()
    }

    /// Adder results as read from the model.
    #[cfg(test)]
    pub fn results(&self, outcome: &SatOutcome) -> Vec<BigUint> {
        self.result
            .iter()
            .map(|r| {
                let mut v = BigUint::default();
                for (b, &lit) in r.iter().enumerate() {
                    if outcome.lit(lit) {
                        v.set_bit(b as u64, true);
                    }
                }
                v
            })
            .collect()
    }
}
