//! Instance files, seeded random benchmarks and result tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::Zero;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numrep::{parse_nat, BigNat};
use crate::pipeline::FlowResult;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("instance has no constants")]
    Empty,
}

/// A named list of distinct positive target constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInstance {
    pub name: String,
    pub targets: Vec<BigNat>,
}

impl ProblemInstance {
    /// Parses the text format: a `# name` header line, then one decimal or
    /// `0x` hexadecimal constant per line. Later `#` text is a comment.
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let mut name = None;
        let mut targets = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if name.is_none() {
                if trimmed.is_empty() {
                    continue;
                }
                let Some(rest) = trimmed.strip_prefix('#') else {
                    return Err(InstanceError::Syntax { line, message: "expected a '# name' header".into() });
                };
                name = Some(rest.trim().to_string());
                continue;
            }
            let content = trimmed.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let value = parse_nat(content).map_err(|e| InstanceError::Syntax { line, message: e.to_string() })?;
            if value.is_zero() {
                return Err(InstanceError::Syntax { line, message: "constants must be positive".into() });
            }
            if !seen.insert(value.clone()) {
                return Err(InstanceError::Syntax { line, message: format!("duplicate constant {value}") });
            }
            targets.push(value);
        }
        if targets.is_empty() {
            return Err(InstanceError::Empty);
        }
        Ok(Self { name: name.unwrap_or_default(), targets })
    }

    pub fn emit(&self) -> String {
        let mut s = format!("# {}\n", self.name);
        for t in &self.targets {
            let _ = writeln!(s, "{t}");
        }
        s
    }
}

/// Uniform constant in `[2^(bits-1), 2^bits)`.
fn random_constant(rng: &mut ChaCha8Rng, bits: u32) -> BigNat {
    let words = bits.div_ceil(32) as usize;
    let mut digits: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
    let top = bits - 32 * (words as u32 - 1);
    let last = digits.last_mut().expect("bits >= 1");
    if top < 32 {
        *last &= (1u32 << top) - 1;
    }
    *last |= 1u32 << (top - 1);
    BigNat::from_slice(&digits)
}

/// `per_width` instances of `targets_per_instance` distinct constants for
/// every word length, all drawn from one generator seeded with `seed`.
pub fn gen_random_benchmark(seed: u64, widths: &[u32], per_width: usize, targets_per_instance: usize) -> Vec<ProblemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(widths.len() * per_width);
    for &bits in widths {
        assert!(bits >= 1, "word length must be positive");
        for i in 0..per_width {
            let mut targets = Vec::with_capacity(targets_per_instance);
            let mut seen = BTreeSet::new();
            let available = if bits > 20 { usize::MAX } else { 1usize << (bits - 1) };
            while targets.len() < targets_per_instance.min(available) {
                let t = random_constant(&mut rng, bits);
                if seen.insert(t.clone()) {
                    targets.push(t);
                }
            }
            out.push(ProblemInstance { name: format!("random-w{bits}-s{seed}-{i:03}"), targets });
        }
    }
    out
}

/// Default benchmark shape: 25 instances per word length in
/// {32, 64, 128, 256}, 10 constants each.
pub fn gen_default_benchmark(seed: u64) -> Vec<ProblemInstance> {
    gen_random_benchmark(seed, &[32, 64, 128, 256], 25, 10)
}

/// One line of a results table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance: String,
    pub flow: String,
    pub w: u32,
    pub total_adders: usize,
    pub bit_adders: u64,
    pub pattern_adders: usize,
    pub reconstruction_adders: usize,
    pub total_patterns: usize,
    pub unique_patterns: usize,
    pub decompose_ms: u64,
    pub mcm_ms: u64,
    pub reconstruct_ms: u64,
    pub fallback_decomposition: bool,
    pub fallback_mcm: bool,
    pub fallback_reconstruction: bool,
    pub fallback_enumeration: bool,
    pub seed: u64,
}

impl ResultRow {
    pub fn from_result(instance: &str, r: &FlowResult) -> Self {
        Self {
            instance: instance.to_string(),
            flow: r.flow.to_string(),
            w: r.width,
            total_adders: r.total_adders,
            bit_adders: r.bit_adders,
            pattern_adders: r.pattern_adders,
            reconstruction_adders: r.reconstruction_adders,
            total_patterns: r.total_patterns,
            unique_patterns: r.unique_patterns,
            decompose_ms: r.times.decompose.as_millis() as u64,
            mcm_ms: r.times.pattern_mcm.as_millis() as u64,
            reconstruct_ms: r.times.reconstruct.as_millis() as u64,
            fallback_decomposition: r.fallbacks.decomposition,
            fallback_mcm: r.fallbacks.pattern_mcm,
            fallback_reconstruction: r.fallbacks.reconstruction,
            fallback_enumeration: r.fallbacks.enumeration,
            seed: r.seed,
        }
    }
}

/// CSV with a header row, even when `rows` is empty.
pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(RESULT_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub const RESULT_COLUMNS: [&str; 17] = [
    "instance",
    "flow",
    "w",
    "total_adders",
    "bit_adders",
    "pattern_adders",
    "reconstruction_adders",
    "total_patterns",
    "unique_patterns",
    "decompose_ms",
    "mcm_ms",
    "reconstruct_ms",
    "fallback_decomposition",
    "fallback_mcm",
    "fallback_reconstruction",
    "fallback_enumeration",
    "seed",
];

/// Histogram of total adder counts as CSV, followed by one row per
/// strategy marking the total that strategy reached.
///
/// ```text
/// series,total_adders,count
/// histogram,6,12
/// strategy:csd-heuristic,6,
/// ```
pub fn export_design_space(histogram: &BTreeMap<usize, usize>, markers: &[(&str, usize)]) -> String {
    let mut s = String::from("series,total_adders,count\n");
    for (total, count) in histogram {
        let _ = writeln!(s, "histogram,{total},{count}");
    }
    for (name, total) in markers {
        let _ = writeln!(s, "strategy:{name},{total},");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_emit() {
        let text = "# demo\n2795\n0xff # hex\n\n# comment\n11\n";
        let inst = ProblemInstance::parse(text).unwrap();
        assert_eq!(inst.name, "demo");
        assert_eq!(inst.targets, vec![BigNat::from(2795u32), BigNat::from(255u32), BigNat::from(11u32)]);
        assert_eq!(ProblemInstance::parse(&inst.emit()).unwrap(), inst);
    }

    #[test]
    fn parse_errors_carry_lines() {
        assert!(matches!(ProblemInstance::parse("12\n"), Err(InstanceError::Syntax { line: 1, .. })));
        assert!(matches!(ProblemInstance::parse("# x\n12\nabc\n"), Err(InstanceError::Syntax { line: 3, .. })));
        assert!(matches!(ProblemInstance::parse("# x\n12\n12\n"), Err(InstanceError::Syntax { line: 3, .. })));
        assert!(matches!(ProblemInstance::parse("# x\n0\n"), Err(InstanceError::Syntax { line: 2, .. })));
        assert_eq!(ProblemInstance::parse("# x\n"), Err(InstanceError::Empty));
    }

    #[test]
    fn default_shape() {
        let all = gen_default_benchmark(7);
        assert_eq!(all.len(), 100);
        for inst in &all {
            assert_eq!(inst.targets.len(), 10);
            let bits: BTreeSet<u64> = inst.targets.iter().map(|t| t.bits()).collect();
            assert_eq!(bits.len(), 1);
        }
    }

    #[test]
    fn msb_is_set() {
        let one = gen_random_benchmark(3, &[8], 1, 1);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].targets.len(), 1);
        assert_eq!(one[0].targets[0].bits(), 8);
        for inst in gen_random_benchmark(5, &[1, 2, 31, 32, 33, 64, 65], 3, 4) {
            let bits: BTreeSet<u64> = inst.targets.iter().map(|t| t.bits()).collect();
            assert_eq!(bits.len(), 1, "{}", inst.name);
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a: Vec<String> = gen_random_benchmark(42, &[32, 64], 3, 10).iter().map(ProblemInstance::emit).collect();
        let b: Vec<String> = gen_random_benchmark(42, &[32, 64], 3, 10).iter().map(ProblemInstance::emit).collect();
        assert_eq!(a, b);
        let c: Vec<String> = gen_random_benchmark(43, &[32, 64], 3, 10).iter().map(ProblemInstance::emit).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn design_space_csv() {
        assert_eq!(export_design_space(&BTreeMap::new(), &[]), "series,total_adders,count\n");
        let h = BTreeMap::from([(6, 3)]);
        assert_eq!(
            export_design_space(&h, &[("csd-heuristic", 6)]),
            "series,total_adders,count\nhistogram,6,3\nstrategy:csd-heuristic,6,\n"
        );
    }

    #[test]
    fn empty_results_have_header() {
        assert_eq!(rows_to_csv(&[]).unwrap().trim(), RESULT_COLUMNS.join(","));
    }
}
