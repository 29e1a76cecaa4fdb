// SPDX-License-Identifier: Apache-2.0

//! Randomized property tests across modules.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{eval_circuit, parse_circuit};
use crate::compile::compile_outputs;
use crate::corpus;
use crate::eqcheck::constancy::classes;
use crate::eqcheck::{class_key, find_nonzero, is_constant_coprime, Constancy};
use crate::group::{Block, Element, GroupShape};
use crate::oracle::{
    assignment_at, oracle_constant, random_circuit, GenConfig, OpMix, OracleConstancy, Strategy,
};
use crate::wcalc::{AffineSum, AffineTerm, Domain};

/// `U` shapes coprime to `L = Z5`, small enough to enumerate with `n ≤ 3`.
fn u_shape(sel: u8) -> GroupShape {
    let blocks = match sel % 4 {
        0 => vec![Block { prime: 2, exp: 1 }],
        1 => vec![Block { prime: 2, exp: 2 }],
        2 => vec![Block { prime: 3, exp: 1 }],
        _ => vec![Block { prime: 2, exp: 1 }, Block { prime: 3, exp: 1 }],
    };
    GroupShape::new(blocks).unwrap()
}

prop_compose! {
    fn affine_sum()(sel in any::<u8>(), n in 1usize..=3, seed in any::<u64>(), terms in 0usize..5)
        -> AffineSum {
        use rand::Rng;
        let u = u_shape(sel);
        let l = GroupShape::cyclic(5, 1);
        let dom = Domain::uniform(&u, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mods = u.moduli().to_vec();
        let order = u.order() as usize;
        let terms = (0..terms)
            .map(|_| AffineTerm {
                beta: (0..u.len())
                    .flat_map(|b| (0..n).map(|_| rng.gen_range(0..mods[b])).collect::<Vec<_>>())
                    .collect(),
                shift: mods.iter().map(|&m| rng.gen_range(0..m)).collect(),
                // sparse tables keep many sums constant or zero
                mfun: (0..order)
                    .map(|_| if rng.gen_bool(0.3) { rng.gen_range(0..5) } else { 0 })
                    .collect(),
            })
            .collect();
        AffineSum { dom, l, terms, const_l: vec![rng.gen_range(0..5)] }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalization_preserves_values(sum in affine_sum()) {
        let h = sum.normalize();
        prop_assert!(h.is_normalized());
        let mut x = vec![0u64; sum.dom.total_vars()];
        loop {
            prop_assert_eq!(h.eval(&x), sum.eval(&x));
            if !sum.dom.next_point(&mut x) {
                break;
            }
        }
    }

    #[test]
    fn constancy_matches_enumeration(sum in affine_sum()) {
        let h = sum.normalize();
        match (is_constant_coprime(&h), oracle_constant(&h).unwrap()) {
            (Constancy::Constant(a), OracleConstancy::Constant(b)) => prop_assert_eq!(a, b),
            (Constancy::NotConstant(_), OracleConstancy::NotConstant(..)) => {}
            (a, b) => prop_assert!(false, "checker {:?} vs oracle {:?}", a, b),
        }
    }

    #[test]
    fn classes_partition_dependent_terms(sum in affine_sum()) {
        let h = sum.normalize();
        for i in 0..h.dom.shape().len() {
            if !h.dom.is_live(i) {
                continue;
            }
            let mut seen = vec![0usize; h.terms.len()];
            for (key, members) in classes(&h, i) {
                prop_assert_eq!(key.block, i);
                for t in members {
                    seen[t] += 1;
                    let beta = &h.terms[t].beta;
                    let elems: Vec<Element> = (0..h.dom.vars()[i])
                        .map(|j| Element((0..h.dom.shape().len())
                            .map(|b| {
                                let r = h.dom.range(b);
                                if j < r.len() { beta[r.start + j] } else { 0 }
                            })
                            .collect()))
                        .collect();
                    prop_assert_eq!(class_key(&elems, i, h.dom.shape()), Some(key.clone()));
                }
            }
            for (t, &count) in seen.iter().enumerate() {
                let depends = h.terms[t].beta[h.dom.range(i)].iter().any(|&c| c % h.dom.shape().blocks()[i].prime != 0);
                prop_assert_eq!(count, usize::from(depends));
            }
        }
    }

    #[test]
    fn nonzero_search_is_exact(sum in affine_sum()) {
        let h = sum.normalize();
        let zero = matches!(oracle_constant(&h).unwrap(),
            OracleConstancy::Constant(ref v) if v.iter().all(|&x| x == 0));
        match find_nonzero(&h) {
            Some(x) => prop_assert!(h.eval(&x).iter().any(|&v| v != 0)),
            None => prop_assert!(zero),
        }
    }

    #[test]
    fn compiled_forms_match_evaluation(alg_sel in 0usize..5, seed in any::<u64>()) {
        let alg = Arc::new(corpus::coprime().swap_remove(alg_sel));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GenConfig { n: 2, max_gates: 8, mix: OpMix::default(), strategy: Strategy::Independent };
        let c = random_circuit(&alg, &cfg, &mut rng);
        let (fa, fb) = compile_outputs(&c).unwrap();
        let total = (alg.order() as u128).pow(2);
        for idx in (0..total).step_by(7) {
            let asg = assignment_at(&c, idx);
            let (a, b) = eval_circuit(&c, &asg).unwrap();
            prop_assert_eq!(fa.eval(&asg), a);
            prop_assert_eq!(fb.eval(&asg), b);
        }
    }

    #[test]
    fn circuit_text_roundtrips(alg_sel in 0usize..7, seed in any::<u64>()) {
        let alg = Arc::new(corpus::all().swap_remove(alg_sel));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GenConfig { n: 3, max_gates: 10, mix: OpMix::default(), strategy: Strategy::Twin };
        let c = random_circuit(&alg, &cfg, &mut rng);
        let back = parse_circuit(&c.to_text(), alg).unwrap();
        prop_assert_eq!(back.to_text(), c.to_text());
    }

    #[test]
    fn group_operations_are_consistent(sel in any::<u8>(), a in any::<usize>(), b in any::<usize>()) {
        let g = u_shape(sel);
        let o = g.order() as usize;
        let (x, y) = (g.element_at(a % o), g.element_at(b % o));
        let s = g.add(&x, &y).unwrap();
        prop_assert_eq!(g.sub(&s, &y).unwrap(), x.clone());
        prop_assert_eq!(g.add(&y, &x).unwrap(), s);
        prop_assert_eq!(g.element_at(g.index(&x)), x.clone());
        prop_assert!(g.add(&x, &g.neg(&x).unwrap()).unwrap().is_zero());
    }
}
