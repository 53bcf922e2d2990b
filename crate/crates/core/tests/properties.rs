use num_bigint::BigUint;
use proptest::prelude::*;
use vlcm_core::satcore::{emit_dimacs, parse_dimacs};
use vlcm_core::{
    build_xc_instance, chunk_divide_binary, chunk_divide_csd, enumerate_pattern_sets, run_baseline_chunk, run_heuristic_csd,
    solve_mcm_heuristic, to_csd, AdderGraph, BigNat, CnfFormula, Encoding, FlowConfig, McmInstance,
};

fn big(words: &[u32]) -> BigNat {
    let n = BigUint::from_slice(words);
    if n == BigUint::default() {
        BigUint::from(1u32)
    } else {
        n
    }
}

fn targets() -> impl Strategy<Value = Vec<BigNat>> {
    prop::collection::btree_set(prop::collection::vec(any::<u32>(), 1..4).prop_map(|w| big(&w)), 1..4)
        .prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimacs_round_trip(clauses in prop::collection::vec(prop::collection::vec((1i32..20, any::<bool>()), 1..5), 0..30)) {
        let mut f = CnfFormula::new();
        f.new_vars(20);
        for c in &clauses {
            f.add_clause(c.iter().map(|&(v, neg)| if neg { -v } else { v }));
        }
        let text = emit_dimacs(&f);
        let g = parse_dimacs(&text).unwrap();
        prop_assert_eq!(emit_dimacs(&g), text);
        prop_assert_eq!(g.num_clauses(), f.num_clauses());
    }

    #[test]
    fn csd_is_canonical(words in prop::collection::vec(any::<u32>(), 1..6)) {
        let x = big(&words);
        let c = to_csd(&x);
        prop_assert_eq!(c.value(), x.clone().into());
        prop_assert!(c.digits().windows(2).all(|p| p[0] == 0 || p[1] == 0));
        prop_assert!(c.nonzero_count() as u64 <= (x.bits() + 2) / 2);
    }

    #[test]
    fn chunk_divisions_are_valid(ts in targets(), w in 1u32..9) {
        let b = chunk_divide_binary(&ts, w).unwrap();
        prop_assert!(b.validate_with_width(w).is_ok());
        let c = chunk_divide_csd(&ts, w).unwrap();
        prop_assert!(c.validate_with_width(w).is_ok());
        prop_assert!(c.unique_patterns().iter().all(|p| p.bit(0)));
    }

    #[test]
    fn heuristic_flows_realize_targets(ts in targets(), w in 2u32..7) {
        let cfg = FlowConfig { width: w, ..FlowConfig::default() };
        for r in [run_baseline_chunk(&ts, &cfg).unwrap(), run_heuristic_csd(&ts, &cfg).unwrap()] {
            prop_assert!(r.graph.realizes(&ts));
            prop_assert!(r.graph.validate().is_ok());
            prop_assert_eq!(r.total_adders, r.graph.adder_count());
        }
    }

    #[test]
    fn graph_json_round_trip(ts in targets()) {
        let g = solve_mcm_heuristic(&McmInstance::new(&ts).unwrap()).unwrap().graph;
        let back = AdderGraph::from_json(&g.to_json()).unwrap();
        prop_assert!(back.structurally_equal(&g));
        prop_assert!(back.realizes(&ts));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_cover_is_a_valid_decomposition(x in 1u64..(1 << 14), w in 2u32..5, csd in any::<bool>()) {
        let encoding = if csd { Encoding::Csd } else { Encoding::Binary };
        let inst = build_xc_instance(&[BigNat::from(x)], w, encoding).unwrap();
        let mut n = 0;
        for d in enumerate_pattern_sets(&inst).take(200) {
            prop_assert!(d.validate_with_width(w).is_ok());
            n += 1;
        }
        prop_assert!(n >= 1);
    }
}
