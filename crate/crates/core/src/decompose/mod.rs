//! Pattern decomposition: splitting target constants into placed patterns.
//!
//! A [`Decomposition`] is a multiset of placements. Every nonzero digit of
//! every target (binary digits or CSD digits, depending on the encoding) is
//! covered by exactly one placement, and the signed, shifted pattern values
//! of each target sum back to the target.

mod sat;
mod xc;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, Sign};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numrep::{to_csd, BigNat, Pattern, SdDigitString};

pub use sat::{
    build_pattern_cnf, solve_pattern_decomposition, solve_pattern_decomposition_range, PatternSatModel,
    PatternSearch, PatternSearchOptions,
};
pub use xc::{build_xc_instance, enumerate_pattern_sets, XcInstance, XcItem, XcOption};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("pattern width must be at least 1")]
    ZeroWidth,
    #[error("target #{0} is zero")]
    ZeroTarget(usize),
    #[error("no targets given")]
    NoTargets,
    #[error("placement #{0} refers to a missing target")]
    BadTarget(usize),
    #[error("placement #{0} is a negated binary pattern")]
    NegatedBinary(usize),
    #[error("placement #{index} is wider than {width} digits")]
    TooWide { index: usize, width: u32 },
    #[error("target #{target} digit {position} is covered more than once")]
    Overlap { target: usize, position: usize },
    #[error("placement #{index} puts a nonzero digit on target #{target} position {position} that does not match")]
    Mismatch { index: usize, target: usize, position: usize },
    #[error("target #{target} digit {position} is not covered")]
    Uncovered { target: usize, position: usize },
    #[error("placements of target #{0} do not sum to it")]
    Reassembly(usize),
    #[error("SAT backend failure: {0}")]
    Backend(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Binary,
    Csd,
}

impl Encoding {
    /// Digit string of `x` under this encoding.
    pub fn digits(self, x: &BigNat) -> SdDigitString {
        match self {
            Encoding::Binary => SdDigitString::binary(x),
            Encoding::Csd => to_csd(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlacedPattern {
    pub target_index: usize,
    /// Bit position of the pattern's least significant digit.
    pub offset: usize,
    pub pattern: Pattern,
    pub negated: bool,
}

impl PlacedPattern {
    /// Signed contribution `±pattern << offset`.
    pub fn contribution(&self) -> BigInt {
        let v = BigInt::from_biguint(Sign::Plus, self.pattern.value() << self.offset);
        if self.negated {
            -v
        } else {
            v
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub encoding: Encoding,
    pub targets: Vec<BigNat>,
    pub placements: Vec<PlacedPattern>,
}

impl Decomposition {
    /// The set S of distinct pattern magnitudes.
    pub fn unique_patterns(&self) -> BTreeSet<BigNat> {
        self.placements.iter().map(|p| p.pattern.value().clone()).collect()
    }

    pub fn total_patterns(&self) -> usize {
        self.placements.len()
    }

    pub fn placements_of(&self, target: usize) -> impl Iterator<Item = &PlacedPattern> {
        self.placements.iter().filter(move |p| p.target_index == target)
    }

    /// Order-insensitive identity of the multiset M.
    pub fn signature(&self) -> Vec<PlacedPattern> {
        let mut s = self.placements.clone();
        s.sort();
        s
    }

    /// Checks exact cover of the nonzero digits and reassembly of every target.
    pub fn validate(&self) -> Result<(), DecomposeError> {
        self.validate_inner(None)
    }

    /// As [`validate`](Self::validate), additionally bounding each
    /// placement's digit span by `width`.
    pub fn validate_with_width(&self, width: u32) -> Result<(), DecomposeError> {
        self.validate_inner(Some(width))
    }

    fn validate_inner(&self, width: Option<u32>) -> Result<(), DecomposeError> {
        let target_digits: Vec<SdDigitString> = self.targets.iter().map(|t| self.encoding.digits(t)).collect();
        let mut covered: Vec<BTreeMap<usize, i8>> = vec![BTreeMap::new(); self.targets.len()];
        let mut sums = vec![BigInt::zero(); self.targets.len()];
        for (index, p) in self.placements.iter().enumerate() {
            let target = p.target_index;
            if target >= self.targets.len() {
                return Err(DecomposeError::BadTarget(index));
            }
            if p.negated && self.encoding == Encoding::Binary {
                return Err(DecomposeError::NegatedBinary(index));
            }
            let mut digits = self.encoding.digits(p.pattern.value());
            if p.negated {
                digits = digits.negated();
            }
            if let Some(w) = width {
                if digits.len() > w as usize {
                    return Err(DecomposeError::TooWide { index, width: w });
                }
            }
            for q in digits.nonzero_positions() {
                let position = p.offset + q;
                if target_digits[target].digit(position) != digits.digit(q) {
                    return Err(DecomposeError::Mismatch { index, target, position });
                }
                if covered[target].insert(position, digits.digit(q)).is_some() {
                    return Err(DecomposeError::Overlap { target, position });
                }
            }
            sums[target] += p.contribution();
        }
        for (target, digits) in target_digits.iter().enumerate() {
            for position in digits.nonzero_positions() {
                if !covered[target].contains_key(&position) {
                    return Err(DecomposeError::Uncovered { target, position });
                }
            }
            if sums[target] != BigInt::from_biguint(Sign::Plus, self.targets[target].clone()) {
                return Err(DecomposeError::Reassembly(target));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let placements: Vec<serde_json::Value> = self
            .placements
            .iter()
            .map(|p| {
                serde_json::json!({
                    "target_index": p.target_index,
                    "offset": p.offset,
                    "pattern": p.pattern.value().to_string(),
                    "negated": p.negated,
                })
            })
            .collect();
        serde_json::json!({
            "encoding": self.encoding,
            "targets": self.targets.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "placements": placements,
            "unique_patterns": self.unique_patterns().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        })
    }
}

pub(crate) fn check_inputs(targets: &[BigNat], w: u32) -> Result<(), DecomposeError> {
    if w == 0 {
        return Err(DecomposeError::ZeroWidth);
    }
    if targets.is_empty() {
        return Err(DecomposeError::NoTargets);
    }
    if let Some(i) = targets.iter().position(|t| t.is_zero()) {
        return Err(DecomposeError::ZeroTarget(i));
    }
    Ok(())
}

/// Chunks of width `w` starting at the lowest uncovered nonzero digit, so
/// zero digits between chunks are skipped and every chunk is odd.
fn chunk_divide(targets: &[BigNat], w: u32, encoding: Encoding) -> Result<Decomposition, DecomposeError> {
    check_inputs(targets, w)?;
    let w = w as usize;
    let mut placements = Vec::new();
    for (m, t) in targets.iter().enumerate() {
        let digits = encoding.digits(t);
        let mut pos = 0;
        while pos < digits.len() {
            if digits.digit(pos) == 0 {
                pos += 1;
                continue;
            }
            let chunk: Vec<i8> = (pos..pos + w).map(|i| digits.digit(i)).collect();
            let value = SdDigitString::from_lsb_digits(chunk).value();
            let negated = value.sign() == Sign::Minus;
            let magnitude = value.magnitude().clone();
            placements.push(PlacedPattern {
                target_index: m,
                offset: pos,
                pattern: Pattern::new(magnitude).expect("chunk starts at a nonzero digit"),
                negated,
            });
            pos += w;
        }
    }
    Ok(Decomposition { encoding, targets: targets.to_vec(), placements })
}

/// Binary chunk division.
pub fn chunk_divide_binary(targets: &[BigNat], w: u32) -> Result<Decomposition, DecomposeError> {
    chunk_divide(targets, w, Encoding::Binary)
}

/// Chunk division of the CSD forms; chunks whose leading digit is -1 are
/// stored as negated placements of their magnitude.
pub fn chunk_divide_csd(targets: &[BigNat], w: u32) -> Result<Decomposition, DecomposeError> {
    chunk_divide(targets, w, Encoding::Csd)
}
