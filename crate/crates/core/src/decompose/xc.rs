//! Exact-cover formulation of the decomposition problem.
//!
//! Items are the nonzero digit positions of every target; an option is any
//! set of positions of one target whose span is below the pattern width.
//! Every exact cover is a valid decomposition, and every decomposition with
//! patterns of at most `w` digits arises from exactly one cover.

use num_bigint::Sign;

use super::{check_inputs, DecomposeError, Decomposition, Encoding, PlacedPattern};
use crate::dlx::ExactCovers;
use crate::numrep::{BigNat, Pattern, SdDigitString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XcItem {
    pub target_index: usize,
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XcOption {
    /// Indices into [`XcInstance::items`], ascending.
    pub items: Vec<usize>,
    pub target_index: usize,
    pub offset: usize,
    pub pattern: Pattern,
    pub negated: bool,
}

impl XcOption {
    fn placement(&self) -> PlacedPattern {
        PlacedPattern {
            target_index: self.target_index,
            offset: self.offset,
            pattern: self.pattern.clone(),
            negated: self.negated,
        }
    }
}

#[derive(Clone, Debug)]
pub struct XcInstance {
    pub encoding: Encoding,
    pub targets: Vec<BigNat>,
    pub width: u32,
    pub items: Vec<XcItem>,
    pub options: Vec<XcOption>,
}

impl XcInstance {
    /// `W · 2^w` with W the widest target digit string.
    pub fn option_bound(&self) -> u128 {
        let digits = self.targets.iter().map(|t| self.encoding.digits(t).len()).max().unwrap_or(0) as u128;
        digits.saturating_mul(1u128.checked_shl(self.width).unwrap_or(u128::MAX))
    }
}

pub fn build_xc_instance(targets: &[BigNat], w: u32, encoding: Encoding) -> Result<XcInstance, DecomposeError> {
    check_inputs(targets, w)?;
    let w = w as usize;
    let mut items = Vec::new();
    let mut options = Vec::new();
    for (m, t) in targets.iter().enumerate() {
        let digits = encoding.digits(t);
        let base = items.len();
        let positions = digits.nonzero_positions();
        items.extend(positions.iter().map(|&position| XcItem { target_index: m, position }));
        for (i, &low) in positions.iter().enumerate() {
            let window: Vec<usize> = (i + 1..positions.len()).take_while(|&j| positions[j] - low < w).collect();
            for mask in 0u64..1 << window.len() {
                let mut chosen = vec![base + i];
                chosen.extend(window.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &j)| base + j));
                let high = items[*chosen.last().expect("nonempty")].position;
                let mut sub = vec![0i8; high - low + 1];
                for &k in &chosen {
                    let p = items[k].position;
                    sub[p - low] = digits.digit(p);
                }
                let value = SdDigitString::from_lsb_digits(sub).value();
                let negated = value.sign() == Sign::Minus;
                options.push(XcOption {
                    items: chosen,
                    target_index: m,
                    offset: low,
                    pattern: Pattern::new(value.magnitude().clone()).expect("lowest digit is nonzero"),
                    negated,
                });
            }
        }
    }
    Ok(XcInstance { encoding, targets: targets.to_vec(), width: w as u32, items, options })
}

/// Streams every exact cover as a decomposition. Order is unspecified.
pub fn enumerate_pattern_sets(inst: &XcInstance) -> impl Iterator<Item = Decomposition> + '_ {
    let rows: Vec<Vec<usize>> = inst.options.iter().map(|o| o.items.clone()).collect();
    ExactCovers::new(inst.items.len(), &rows).map(move |cover| Decomposition {
        encoding: inst.encoding,
        targets: inst.targets.clone(),
        placements: cover.iter().map(|&k| inst.options[k].placement()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn nat(v: u64) -> BigNat {
        BigNat::from(v)
    }

    fn position_sets(inst: &XcInstance, cover: &Decomposition) -> BTreeSet<Vec<usize>> {
        cover
            .placements
            .iter()
            .map(|p| {
                let o = inst.options.iter().find(|o| o.placement() == *p).unwrap();
                o.items.iter().map(|&k| inst.items[k].position).collect()
            })
            .collect()
    }

    #[test]
    fn seventy_five_in_csd() {
        // 75 = 1 0 1 0 -1 0 -1
        let inst = build_xc_instance(&[nat(75)], 5, Encoding::Csd).unwrap();
        let positions: BTreeSet<usize> = inst.items.iter().map(|i| i.position).collect();
        assert_eq!(positions, BTreeSet::from([0, 2, 4, 6]));
        assert_eq!(inst.options.len(), 11);

        let (a, b, c, d) = (vec![6], vec![4], vec![2], vec![0]);
        let (e, f, g, h) = (vec![6, 4], vec![4, 2], vec![2, 0], vec![6, 2]);
        let (i, j, k) = (vec![4, 0], vec![6, 4, 2], vec![4, 2, 0]);
        let sorted = |v: &[Vec<usize>]| -> BTreeSet<Vec<usize>> {
            v.iter().map(|s| {
                let mut s = s.clone();
                s.sort();
                s
            })
            .collect()
        };
        let expected: BTreeSet<BTreeSet<Vec<usize>>> = [
            vec![a.clone(), b.clone(), c.clone(), d.clone()],
            vec![a.clone(), b.clone(), g.clone()],
            vec![a.clone(), d.clone(), f.clone()],
            vec![a.clone(), c.clone(), i.clone()],
            vec![a.clone(), k],
            vec![c.clone(), d.clone(), e.clone()],
            vec![e, g],
            vec![b, d.clone(), h.clone()],
            vec![h, i],
            vec![d, j],
        ]
        .iter()
        .map(|cover| sorted(cover))
        .collect();

        let covers: Vec<Decomposition> = enumerate_pattern_sets(&inst).collect();
        assert_eq!(covers.len(), 10);
        let got: BTreeSet<_> = covers.iter().map(|c| position_sets(&inst, c)).collect();
        assert_eq!(got, expected);
        for c in &covers {
            c.validate_with_width(5).unwrap();
        }
        let distinct_s: BTreeSet<_> = covers.iter().map(Decomposition::unique_patterns).collect();
        assert!(distinct_s.len() < covers.len());
    }

    #[test]
    fn target_one() {
        let inst = build_xc_instance(&[nat(1)], 3, Encoding::Binary).unwrap();
        assert_eq!(inst.items, vec![XcItem { target_index: 0, position: 0 }]);
        assert_eq!(inst.options.len(), 1);
        assert_eq!(enumerate_pattern_sets(&inst).count(), 1);
    }

    #[test]
    fn two_targets_are_renamed() {
        let inst = build_xc_instance(&[nat(3), nat(3)], 2, Encoding::Binary).unwrap();
        assert_eq!(inst.items.len(), 4);
        for m in 0..2 {
            let opts: Vec<_> = inst.options.iter().filter(|o| o.target_index == m).collect();
            assert_eq!(opts.len(), 3);
            assert!(opts.iter().all(|o| o.items.iter().all(|&k| inst.items[k].target_index == m)));
        }
        // {0},{1} or {0,1} independently per target.
        assert_eq!(enumerate_pattern_sets(&inst).count(), 4);
    }

    #[test]
    fn option_count_bound() {
        for x in 1u64..512 {
            for w in 1..6 {
                for enc in [Encoding::Binary, Encoding::Csd] {
                    let inst = build_xc_instance(&[nat(x)], w, enc).unwrap();
                    assert!(inst.options.len() as u128 <= inst.option_bound());
                    assert!(inst.options.iter().all(|o| {
                        let p: Vec<usize> = o.items.iter().map(|&k| inst.items[k].position).collect();
                        p.last().unwrap() - p[0] < w as usize
                    }));
                }
            }
        }
    }

    /// Set partitions of `positions` into blocks of span below `w`.
    fn partitions(positions: &[usize], w: usize) -> usize {
        fn go(rest: &[usize], w: usize) -> usize {
            let Some((&low, tail)) = rest.split_first() else { return 1 };
            let window: Vec<usize> = tail.iter().copied().filter(|&p| p - low < w).collect();
            let mut total = 0;
            for mask in 0u32..1 << window.len() {
                let left: Vec<usize> = tail
                    .iter()
                    .copied()
                    .filter(|p| !window.iter().enumerate().any(|(b, q)| mask >> b & 1 == 1 && q == p))
                    .collect();
                total += go(&left, w);
            }
            total
        }
        go(positions, w)
    }

    #[test]
    fn cover_counts_match_partition_count() {
        for x in 1u64..1024 {
            let t = nat(x);
            let ones = SdDigitString::binary(&t).nonzero_positions();
            let inst = build_xc_instance(&[t], 4, Encoding::Binary).unwrap();
            let covers: Vec<_> = enumerate_pattern_sets(&inst).collect();
            assert_eq!(covers.len(), partitions(&ones, 4), "x = {x}");
            let distinct: BTreeSet<_> = covers.iter().map(Decomposition::signature).collect();
            assert_eq!(distinct.len(), covers.len());
        }
    }

    #[test]
    fn every_cover_is_valid() {
        for x in [60375u64, 48863421 & 0xffff, 2795, 75] {
            for enc in [Encoding::Binary, Encoding::Csd] {
                let inst = build_xc_instance(&[nat(x), nat(x / 3 + 1)], 4, enc).unwrap();
                for d in enumerate_pattern_sets(&inst).take(2000) {
                    d.validate_with_width(4).unwrap();
                }
            }
        }
    }

    #[test]
    fn chunk_division_has_fewest_placements() {
        for x in 1u64..1024 {
            for w in 3..=5 {
                let chunk = super::super::chunk_divide_binary(&[nat(x)], w).unwrap().total_patterns();
                let inst = build_xc_instance(&[nat(x)], w, Encoding::Binary).unwrap();
                let min = enumerate_pattern_sets(&inst).map(|d| d.total_patterns()).min().unwrap();
                assert_eq!(min, chunk, "x = {x}, w = {w}");
            }
        }
    }
}
