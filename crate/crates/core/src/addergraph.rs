//! Shift-and-add adder graphs.
//!
//! A graph has a list of inputs with known constant values, a topologically
//! ordered list of two-input adders/subtractors whose operands carry left
//! shifts, and output bindings mapping each target constant to a node or
//! input plus a free final left shift.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::{BigInt, Sign};
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numrep::{parse_nat, BigNat};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node {node} references {reference}, which is not defined before it")]
    DanglingReference { node: usize, reference: Operand },
    #[error("output {target} references undefined {reference}")]
    DanglingOutput { target: BigNat, reference: Operand },
    #[error("node {node} evaluates to a non-positive value")]
    NonPositive { node: usize },
    #[error("node {node} caches value {cached} but evaluates to {actual}")]
    StaleValue { node: usize, cached: BigNat, actual: BigNat },
    #[error("output for {target} evaluates to {actual}")]
    WrongOutput { target: BigNat, actual: BigNat },
    #[error("reconstruction input {0} is not produced by the pattern graph")]
    MissingPattern(BigNat),
    #[error("pattern graph must have the single input 1")]
    NotRooted,
    #[error("invalid graph document: {0}")]
    Format(String),
    #[error("malformed graph JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Reference to a graph input or an adder node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Input(usize),
    Node(usize),
}

impl std::fmt::Display for Operand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Operand::Input(i) => write!(f, "i{i}"),
            Operand::Node(n) => write!(f, "n{n}"),
        }
    }
}

impl std::str::FromStr for Operand {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::Format(format!("bad reference {s:?}"));
        let (kind, idx) = s.split_at(s.len().min(1));
        let idx: usize = idx.parse().map_err(|_| bad())?;
        match kind {
            "i" => Ok(Operand::Input(idx)),
            "n" => Ok(Operand::Node(idx)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AddOp {
    Add,
    /// `left << left_shift - right << right_shift`
    Sub,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdderNode {
    pub left: Operand,
    pub left_shift: u32,
    pub right: Operand,
    pub right_shift: u32,
    pub op: AddOp,
    /// Cached exact result, always positive.
    pub value: BigNat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputBinding {
    pub source: Operand,
    pub shift: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdderGraph {
    inputs: Vec<BigNat>,
    nodes: Vec<AdderNode>,
    outputs: BTreeMap<BigNat, OutputBinding>,
}

fn shifted(x: &BigNat, s: u32) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x << s)
}

impl AdderGraph {
    /// Empty graph with the given input values.
    pub fn with_inputs<I: IntoIterator<Item = BigNat>>(inputs: I) -> Self {
        Self { inputs: inputs.into_iter().collect(), ..Self::default() }
    }

    /// Graph with the single input 1.
    pub fn rooted() -> Self {
        Self::with_inputs([BigNat::one()])
    }

    pub fn inputs(&self) -> &[BigNat] {
        &self.inputs
    }

    pub fn nodes(&self) -> &[AdderNode] {
        &self.nodes
    }

    pub fn outputs(&self) -> &BTreeMap<BigNat, OutputBinding> {
        &self.outputs
    }

    /// Index of the input carrying `value`, if any.
    pub fn input_index(&self, value: &BigNat) -> Option<usize> {
        self.inputs.iter().position(|v| v == value)
    }

    /// Adds an input, or returns the existing one with the same value.
    pub fn add_input(&mut self, value: BigNat) -> Operand {
        match self.input_index(&value) {
            Some(i) => Operand::Input(i),
            None => {
                self.inputs.push(value);
                Operand::Input(self.inputs.len() - 1)
            }
        }
    }

    /// Cached value of an operand.
    pub fn value_of(&self, r: Operand) -> Option<&BigNat> {
        match r {
            Operand::Input(i) => self.inputs.get(i),
            Operand::Node(n) => self.nodes.get(n).map(|node| &node.value),
        }
    }

    /// Appends an adder node and returns its reference.
    pub fn push_node(
        &mut self,
        left: Operand,
        left_shift: u32,
        right: Operand,
        right_shift: u32,
        op: AddOp,
    ) -> Result<Operand, GraphError> {
        let node = self.nodes.len();
        let l = self.value_of(left).ok_or(GraphError::DanglingReference { node, reference: left })?;
        let r = self.value_of(right).ok_or(GraphError::DanglingReference { node, reference: right })?;
        let value = combine(l, left_shift, r, right_shift, op).ok_or(GraphError::NonPositive { node })?;
        self.nodes.push(AdderNode { left, left_shift, right, right_shift, op, value });
        Ok(Operand::Node(node))
    }

    /// Appends a node computing `|sa * a<<sha + sb * b<<shb|` with the operand
    /// order chosen so the subtraction stays positive. Returns the node and the
    /// sign of the signed result.
    pub fn push_signed(
        &mut self,
        a: Operand,
        a_shift: u32,
        a_negative: bool,
        b: Operand,
        b_shift: u32,
        b_negative: bool,
    ) -> Result<(Operand, bool), GraphError> {
        if a_negative == b_negative {
            let r = self.push_node(a, a_shift, b, b_shift, AddOp::Add)?;
            return Ok((r, a_negative));
        }
        let node = self.nodes.len();
        let av = self.value_of(a).ok_or(GraphError::DanglingReference { node, reference: a })? << a_shift;
        let bv = self.value_of(b).ok_or(GraphError::DanglingReference { node, reference: b })? << b_shift;
        if av > bv {
            let r = self.push_node(a, a_shift, b, b_shift, AddOp::Sub)?;
            Ok((r, a_negative))
        } else {
            let r = self.push_node(b, b_shift, a, a_shift, AddOp::Sub)?;
            Ok((r, b_negative))
        }
    }

    /// Binds `target` to `source << shift`. Rebinding replaces the old binding.
    pub fn bind_output(&mut self, target: BigNat, source: Operand, shift: u32) {
        self.outputs.insert(target, OutputBinding { source, shift });
    }

    pub fn adder_count(&self) -> usize {
        self.nodes.len()
    }

    /// Sum over adders of the result width minus the smaller operand shift;
    /// the low bits below that shift are passed through without a full adder.
    pub fn bit_adder_count(&self) -> u64 {
        self.nodes
            .iter()
            .map(|n| n.value.bits().saturating_sub(n.left_shift.min(n.right_shift) as u64))
            .sum()
    }

    /// Recomputes every node from the inputs and returns the value bound to
    /// each output target.
    pub fn evaluate(&self) -> Result<BTreeMap<BigNat, BigNat>, GraphError> {
        let values = self.node_values()?;
        let get = |r: Operand| -> Option<&BigNat> {
            match r {
                Operand::Input(i) => self.inputs.get(i),
                Operand::Node(n) => values.get(n),
            }
        };
        let mut out = BTreeMap::new();
        for (target, binding) in &self.outputs {
            let v = get(binding.source)
                .ok_or_else(|| GraphError::DanglingOutput { target: target.clone(), reference: binding.source })?;
            out.insert(target.clone(), v << binding.shift);
        }
        Ok(out)
    }

    fn node_values(&self) -> Result<Vec<BigNat>, GraphError> {
        let mut values: Vec<BigNat> = Vec::with_capacity(self.nodes.len());
        for (idx, node) in self.nodes.iter().enumerate() {
            let fetch = |r: Operand| -> Result<&BigNat, GraphError> {
                let found = match r {
                    Operand::Input(i) => self.inputs.get(i),
                    Operand::Node(n) if n < idx => values.get(n),
                    Operand::Node(_) => None,
                };
                found.ok_or(GraphError::DanglingReference { node: idx, reference: r })
            };
            let l = fetch(node.left)?;
            let r = fetch(node.right)?;
            let v = combine(l, node.left_shift, r, node.right_shift, node.op)
                .ok_or(GraphError::NonPositive { node: idx })?;
            values.push(v);
        }
        Ok(values)
    }

    /// Full structural and semantic check: references point backwards,
    /// cached values are exact and positive, outputs equal their targets.
    pub fn validate(&self) -> Result<(), GraphError> {
        let values = self.node_values()?;
        for (idx, (node, actual)) in self.nodes.iter().zip(&values).enumerate() {
            if &node.value != actual {
                return Err(GraphError::StaleValue { node: idx, cached: node.value.clone(), actual: actual.clone() });
            }
        }
        for (target, actual) in self.evaluate()? {
            if target != actual {
                return Err(GraphError::WrongOutput { target, actual });
            }
        }
        Ok(())
    }

    /// Checks that the graph realizes exactly `targets`.
    pub fn realizes(&self, targets: &[BigNat]) -> bool {
        self.validate().is_ok() && targets.iter().all(|t| self.outputs.contains_key(t))
    }

    /// Drops adders that no output depends on, and inputs other than the
    /// first that nothing references. Indices are compacted.
    pub fn pruned(&self) -> AdderGraph {
        let mut live_nodes = vec![false; self.nodes.len()];
        let mut live_inputs = vec![false; self.inputs.len()];
        let mut mark = |r: Operand, live_nodes: &mut Vec<bool>| match r {
            Operand::Input(i) => live_inputs[i] = true,
            Operand::Node(n) => live_nodes[n] = true,
        };
        for b in self.outputs.values() {
            mark(b.source, &mut live_nodes);
        }
        for idx in (0..self.nodes.len()).rev() {
            if live_nodes[idx] {
                let node = &self.nodes[idx];
                mark(node.left, &mut live_nodes);
                mark(node.right, &mut live_nodes);
            }
        }
        let mut input_map = HashMap::new();
        let mut inputs = Vec::new();
        for (i, v) in self.inputs.iter().enumerate() {
            if live_inputs[i] || (i == 0 && self.inputs[0].is_one()) {
                input_map.insert(i, inputs.len());
                inputs.push(v.clone());
            }
        }
        let mut node_map = HashMap::new();
        let mut nodes = Vec::new();
        let remap = |r: Operand, node_map: &HashMap<usize, usize>| match r {
            Operand::Input(i) => Operand::Input(input_map[&i]),
            Operand::Node(n) => Operand::Node(node_map[&n]),
        };
        for (idx, node) in self.nodes.iter().enumerate() {
            if live_nodes[idx] {
                let mut n = node.clone();
                n.left = remap(n.left, &node_map);
                n.right = remap(n.right, &node_map);
                node_map.insert(idx, nodes.len());
                nodes.push(n);
            }
        }
        let outputs = self
            .outputs
            .iter()
            .map(|(t, b)| (t.clone(), OutputBinding { source: remap(b.source, &node_map), shift: b.shift }))
            .collect();
        AdderGraph { inputs, nodes, outputs }
    }

    /// Structural equality ignoring cached values.
    pub fn structurally_equal(&self, other: &AdderGraph) -> bool {
        self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| {
                a.left == b.left
                    && a.right == b.right
                    && a.left_shift == b.left_shift
                    && a.right_shift == b.right_shift
                    && a.op == b.op
            })
    }
}

/// `l << ls (+|-) r << rs`, or `None` when the result is not positive.
pub fn combine(l: &BigNat, ls: u32, r: &BigNat, rs: u32, op: AddOp) -> Option<BigNat> {
    let v = match op {
        AddOp::Add => shifted(l, ls) + shifted(r, rs),
        AddOp::Sub => shifted(l, ls) - shifted(r, rs),
    };
    if v.sign() == Sign::Plus {
        v.to_biguint()
    } else {
        None
    }
}

/// Composes a pattern graph (single input 1, outputs include every value the
/// reconstruction graph takes as input) with a reconstruction graph. Pattern
/// adders that the reconstruction does not use are dropped.
pub fn merge(pattern_graph: &AdderGraph, reconstruction_graph: &AdderGraph) -> Result<AdderGraph, GraphError> {
    if pattern_graph.inputs.len() != 1 || !pattern_graph.inputs[0].is_one() {
        return Err(GraphError::NotRooted);
    }
    let recon = reconstruction_graph.pruned();

    // Reconstruction input index -> (operand in pattern graph, shift).
    let mut input_source = Vec::with_capacity(recon.inputs.len());
    for value in &recon.inputs {
        if value.is_one() {
            input_source.push((Operand::Input(0), 0));
        } else if let Some(b) = pattern_graph.outputs.get(value) {
            input_source.push((b.source, b.shift));
        } else {
            return Err(GraphError::MissingPattern(value.clone()));
        }
    }

    let mut merged = AdderGraph { inputs: pattern_graph.inputs.clone(), nodes: pattern_graph.nodes.clone(), outputs: BTreeMap::new() };
    let base = merged.nodes.len();
    let lift = |r: Operand, s: u32| -> (Operand, u32) {
        match r {
            Operand::Input(i) => {
                let (src, extra) = input_source[i];
                (src, s + extra)
            }
            Operand::Node(n) => (Operand::Node(base + n), s),
        }
    };
    for node in &recon.nodes {
        let (left, left_shift) = lift(node.left, node.left_shift);
        let (right, right_shift) = lift(node.right, node.right_shift);
        merged.nodes.push(AdderNode { left, left_shift, right, right_shift, op: node.op, value: node.value.clone() });
    }
    for (target, b) in &recon.outputs {
        let (source, shift) = lift(b.source, b.shift);
        merged.outputs.insert(target.clone(), OutputBinding { source, shift });
    }
    let merged = merged.pruned();
    merged.validate()?;
    Ok(merged)
}

#[derive(Serialize, Deserialize)]
struct JsonInput {
    id: String,
    value: String,
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: String,
    left: String,
    lshift: u32,
    right: String,
    rshift: u32,
    op: AddOp,
}

#[derive(Serialize, Deserialize)]
struct JsonOutput {
    target: String,
    #[serde(rename = "ref")]
    reference: String,
    shift: u32,
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    inputs: Vec<JsonInput>,
    nodes: Vec<JsonNode>,
    outputs: Vec<JsonOutput>,
}

impl AdderGraph {
    pub fn to_json(&self) -> String {
        let doc = JsonGraph {
            inputs: self
                .inputs
                .iter()
                .enumerate()
                .map(|(i, v)| JsonInput { id: Operand::Input(i).to_string(), value: v.to_string() })
                .collect(),
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| JsonNode {
                    id: Operand::Node(i).to_string(),
                    left: n.left.to_string(),
                    lshift: n.left_shift,
                    right: n.right.to_string(),
                    rshift: n.right_shift,
                    op: n.op,
                })
                .collect(),
            outputs: self
                .outputs
                .iter()
                .map(|(t, b)| JsonOutput { target: t.to_string(), reference: b.source.to_string(), shift: b.shift })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serialization cannot fail")
    }

    /// Parses a graph document and recomputes every node value. Node and
    /// input ids must be `i<k>` / `n<k>` in order.
    pub fn from_json(text: &str) -> Result<AdderGraph, GraphError> {
        let doc: JsonGraph = serde_json::from_str(text)?;
        let mut g = AdderGraph::default();
        for (i, input) in doc.inputs.iter().enumerate() {
            if input.id.parse::<Operand>()? != Operand::Input(i) {
                return Err(GraphError::Format(format!("input #{i} has id {:?}", input.id)));
            }
            let v = parse_nat(&input.value).map_err(|e| GraphError::Format(e.to_string()))?;
            g.inputs.push(v);
        }
        for (i, node) in doc.nodes.iter().enumerate() {
            if node.id.parse::<Operand>()? != Operand::Node(i) {
                return Err(GraphError::Format(format!("node #{i} has id {:?}", node.id)));
            }
            g.push_node(node.left.parse()?, node.lshift, node.right.parse()?, node.rshift, node.op)?;
        }
        for out in &doc.outputs {
            let target = parse_nat(&out.target).map_err(|e| GraphError::Format(e.to_string()))?;
            let source: Operand = out.reference.parse()?;
            if g.value_of(source).is_none() {
                return Err(GraphError::DanglingOutput { target, reference: source });
            }
            g.bind_output(target, source, out.shift);
        }
        Ok(g)
    }

    /// Graphviz rendering: one box per input, one ellipse per adder labeled
    /// with its value, edges labeled with their shifts.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph adder_graph {\n  rankdir=TB;\n");
        for (i, v) in self.inputs.iter().enumerate() {
            let _ = writeln!(s, "  i{i} [shape=box, label=\"{v}\"];");
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let sym = match n.op {
                AddOp::Add => '+',
                AddOp::Sub => '-',
            };
            let _ = writeln!(s, "  n{i} [shape=ellipse, label=\"{sym}\\n{}\"];", n.value);
            let _ = writeln!(s, "  {} -> n{i} [label=\"<<{}\"];", n.left, n.left_shift);
            let _ = writeln!(s, "  {} -> n{i} [label=\"<<{}\"{}];", n.right, n.right_shift, if n.op == AddOp::Sub { ", style=dashed" } else { "" });
        }
        for (k, (t, b)) in self.outputs.iter().enumerate() {
            let _ = writeln!(s, "  o{k} [shape=plaintext, label=\"{t}\"];");
            let _ = writeln!(s, "  {} -> o{k} [label=\"<<{}\"];", b.source, b.shift);
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn nat(v: u64) -> BigNat {
        BigNat::from(v)
    }

    /// 3 = 1<<1 + 1, 5 = 1<<2 + 1, 43 = 3 + 5<<3, 2795 = 43 + 43<<6.
    pub(crate) fn fig2_graph() -> AdderGraph {
        let mut g = AdderGraph::rooted();
        let one = Operand::Input(0);
        let three = g.push_node(one, 1, one, 0, AddOp::Add).unwrap();
        let five = g.push_node(one, 2, one, 0, AddOp::Add).unwrap();
        let n43 = g.push_node(three, 0, five, 3, AddOp::Add).unwrap();
        let top = g.push_node(n43, 0, n43, 6, AddOp::Add).unwrap();
        g.bind_output(nat(2795), top, 0);
        g
    }

    /// 3 = 1 + 1<<1, 11 = 1<<3 + 3, 93 = 3<<5 - 3.
    pub(crate) fn fig1c_graph() -> AdderGraph {
        let mut g = AdderGraph::rooted();
        let one = Operand::Input(0);
        let three = g.push_node(one, 0, one, 1, AddOp::Add).unwrap();
        let eleven = g.push_node(one, 3, three, 0, AddOp::Add).unwrap();
        let n93 = g.push_node(three, 5, three, 0, AddOp::Sub).unwrap();
        g.bind_output(nat(11), eleven, 0);
        g.bind_output(nat(93), n93, 0);
        g
    }

    #[test]
    fn evaluates_fig2() {
        let g = fig2_graph();
        let out = g.evaluate().unwrap();
        assert_eq!(out, BTreeMap::from([(nat(2795), nat(2795))]));
        assert_eq!(g.adder_count(), 4);
        g.validate().unwrap();
    }

    #[test]
    fn evaluates_pure_shift() {
        let mut g = AdderGraph::rooted();
        g.bind_output(nat(16), Operand::Input(0), 4);
        assert_eq!(g.evaluate().unwrap(), BTreeMap::from([(nat(16), nat(16))]));
        assert_eq!(g.adder_count(), 0);
        assert_eq!(g.bit_adder_count(), 0);
    }

    #[test]
    fn evaluates_fig1c() {
        let g = fig1c_graph();
        assert_eq!(g.evaluate().unwrap(), BTreeMap::from([(nat(11), nat(11)), (nat(93), nat(93))]));
        assert_eq!(g.adder_count(), 3);
    }

    #[test]
    fn dangling_reference_is_structural_error() {
        let mut g = AdderGraph::rooted();
        assert!(matches!(
            g.push_node(Operand::Node(3), 0, Operand::Input(0), 0, AddOp::Add),
            Err(GraphError::DanglingReference { .. })
        ));
        g.bind_output(nat(7), Operand::Node(0), 0);
        assert!(matches!(g.evaluate(), Err(GraphError::DanglingOutput { .. })));
    }

    #[test]
    fn subtraction_must_stay_positive() {
        let mut g = AdderGraph::rooted();
        let one = Operand::Input(0);
        assert!(matches!(g.push_node(one, 0, one, 0, AddOp::Sub), Err(GraphError::NonPositive { .. })));
        let (r, neg) = g.push_signed(one, 0, true, one, 2, false).unwrap();
        assert!(!neg);
        assert_eq!(g.value_of(r), Some(&nat(3)));
    }

    #[test]
    fn bit_adder_examples() {
        let mut g = AdderGraph::rooted();
        let one = Operand::Input(0);
        g.push_node(one, 1, one, 0, AddOp::Add).unwrap();
        assert_eq!(g.bit_adder_count(), 2);

        let mut g = AdderGraph::with_inputs([nat(1), nat(3), nat(5)]);
        g.push_node(Operand::Input(1), 0, Operand::Input(2), 3, AddOp::Add).unwrap();
        assert_eq!(g.bit_adder_count(), 6);
    }

    #[test]
    fn merge_fig2_halves() {
        let mut top = AdderGraph::rooted();
        let one = Operand::Input(0);
        let three = top.push_node(one, 1, one, 0, AddOp::Add).unwrap();
        let five = top.push_node(one, 2, one, 0, AddOp::Add).unwrap();
        top.bind_output(nat(3), three, 0);
        top.bind_output(nat(5), five, 0);

        let mut bottom = AdderGraph::with_inputs([nat(3), nat(5)]);
        let n43 = bottom.push_node(Operand::Input(0), 0, Operand::Input(1), 3, AddOp::Add).unwrap();
        let t = bottom.push_node(n43, 0, n43, 6, AddOp::Add).unwrap();
        bottom.bind_output(nat(2795), t, 0);

        let merged = merge(&top, &bottom).unwrap();
        assert_eq!(merged.adder_count(), 4);
        assert_eq!(merged.evaluate().unwrap(), BTreeMap::from([(nat(2795), nat(2795))]));
    }

    #[test]
    fn merge_with_trivial_pattern_graph_keeps_reconstruction() {
        let mut top = AdderGraph::rooted();
        top.bind_output(nat(1), Operand::Input(0), 0);
        let mut bottom = AdderGraph::with_inputs([nat(1)]);
        let one = Operand::Input(0);
        let n = bottom.push_node(one, 4, one, 0, AddOp::Sub).unwrap();
        bottom.bind_output(nat(30), n, 1);
        let merged = merge(&top, &bottom).unwrap();
        assert!(merged.structurally_equal(&bottom));
    }

    #[test]
    fn merge_prunes_unused_patterns() {
        let mut top = AdderGraph::rooted();
        let one = Operand::Input(0);
        let three = top.push_node(one, 1, one, 0, AddOp::Add).unwrap();
        let seven = top.push_node(one, 3, one, 0, AddOp::Sub).unwrap();
        let nine = top.push_node(one, 3, one, 0, AddOp::Add).unwrap();
        top.bind_output(nat(3), three, 0);
        top.bind_output(nat(7), seven, 0);
        top.bind_output(nat(9), nine, 0);

        let mut bottom = AdderGraph::with_inputs([nat(3), nat(7), nat(9)]);
        let n = bottom.push_node(Operand::Input(0), 4, Operand::Input(2), 0, AddOp::Add).unwrap();
        bottom.bind_output(nat(57), n, 0);

        let merged = merge(&top, &bottom).unwrap();
        assert_eq!(merged.adder_count(), 3);
        assert_eq!(merged.evaluate().unwrap()[&nat(57)], nat(57));
    }

    #[test]
    fn merge_reports_missing_pattern() {
        let top = AdderGraph::rooted();
        let mut bottom = AdderGraph::with_inputs([nat(5)]);
        bottom.bind_output(nat(5), Operand::Input(0), 0);
        assert!(matches!(merge(&top, &bottom), Err(GraphError::MissingPattern(_))));
    }

    #[test]
    fn json_round_trip() {
        let g = fig1c_graph();
        let back = AdderGraph::from_json(&g.to_json()).unwrap();
        assert!(back.structurally_equal(&g));
        assert_eq!(back, g);
    }

    #[test]
    fn empty_graph_json_is_valid() {
        let g = AdderGraph::default();
        let text = g.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["nodes"].as_array().unwrap().is_empty());
        assert_eq!(AdderGraph::from_json(&text).unwrap(), g);
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = AdderGraph::from_json("{\"inputs\": [,]}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn dot_has_one_vertex_per_adder() {
        let dot = fig2_graph().to_dot();
        assert_eq!(dot.matches("shape=ellipse").count(), 4);
        assert!(dot.contains("<<6"));
    }
}
