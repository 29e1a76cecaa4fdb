// SPDX-License-Identifier: Apache-2.0

//! Ground truth by exhaustion.
//!
//! Everything here enumerates; nothing uses the compiled representation.
//! Assignments are enumerated lexicographically: the first input is the most
//! significant digit, and each input ranges over pairs `(l, u)` with `l`
//! more significant than `u`, both in residue order.

mod fast;
mod fuzz;
mod generate;
mod weight;

use rayon::prelude::*;

pub use fast::FastEval;
pub use fuzz::{fuzz, fuzz_with, shrink, Counterexample, FuzzConfig, FuzzReport, InstanceResult};
pub use generate::{random_circuit, GenConfig, OpMix, Strategy};
pub use weight::{validate_weight_bound, WeightBoundReport};

use crate::circuit::{Circuit, Value};
use crate::eqcheck::{Reason, Verdict};
use crate::error::{Error, Result};
use crate::group::{Element, GroupShape, UElement};
use crate::wcalc::HatForm;

/// Default cap on the number of points any oracle enumerates.
pub const ORACLE_BOUND: u128 = 10_000_000;

const CHUNK: u128 = 1 << 14;

fn checked_pow(base: u128, n: usize, bound: u128) -> Result<u128> {
    let mut size: u128 = 1;
    for _ in 0..n {
        size = size.saturating_mul(base);
    }
    if size > bound {
        return Err(Error::TooLarge { size, bound });
    }
    Ok(size)
}

/// Number of assignments of `c`, or `TooLarge` over `bound`.
pub fn assignment_count(c: &Circuit, bound: u128) -> Result<u128> {
    checked_pow(c.algebra.order() as u128, c.n, bound)
}

/// The assignment with lexicographic rank `idx`.
pub fn assignment_at(c: &Circuit, mut idx: u128) -> Vec<Value> {
    let alg = &*c.algebra;
    let (lo, uo) = (alg.l.order() as u128, alg.u.order() as u128);
    let mut out = vec![alg.zero(); c.n];
    for slot in out.iter_mut().rev() {
        let pair = idx % (lo * uo);
        idx /= lo * uo;
        *slot = (
            alg.l.element_at((pair / uo) as usize),
            alg.u.element_at((pair % uo) as usize),
        );
    }
    out
}

/// Exhaustive equivalence with the default bound.
pub fn oracle_equivalent(c: &Circuit) -> Result<Verdict> {
    oracle_equivalent_bounded(c, ORACLE_BOUND)
}

/// Exhaustive equivalence; the witness is the first differing assignment.
pub fn oracle_equivalent_bounded(c: &Circuit, bound: u128) -> Result<Verdict> {
    let total = assignment_count(c, bound)?;
    let fe = FastEval::new(c);
    let chunks = total.div_ceil(CHUNK);
    let hit = (0..chunks).into_par_iter().find_map_first(|ch| {
        let mut scratch = fe.scratch();
        let end = ((ch + 1) * CHUNK).min(total);
        (ch * CHUNK..end).find(|&idx| fe.differs_at(idx, &mut scratch))
    });
    Ok(match hit {
        None => Verdict::Equivalent,
        Some(idx) => Verdict::NotEquivalent {
            witness: Some(assignment_at(c, idx)),
            reason: Reason::Exhaustive,
            trace: "-".into(),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleConstancy {
    Constant(Vec<u64>),
    /// Two points (in the form's variable layout) with different values.
    NotConstant(Vec<u64>, Vec<u64>),
}

/// Exhaustive constancy of a hat form.
pub fn oracle_constant(h: &HatForm) -> Result<OracleConstancy> {
    let size = h.dom.point_count();
    if size > ORACLE_BOUND {
        return Err(Error::TooLarge {
            size,
            bound: ORACLE_BOUND,
        });
    }
    let origin = vec![0u64; h.dom.total_vars()];
    let v0 = h.eval(&origin);
    let mut x = origin.clone();
    while h.dom.next_point(&mut x) {
        if h.eval(&x) != v0 {
            return Ok(OracleConstancy::NotConstant(origin, x));
        }
    }
    Ok(OracleConstancy::Constant(v0))
}

fn dot_block(u: &GroupShape, beta: &[UElement], x: &[UElement], j: usize) -> u64 {
    let m = u.modulus(j);
    beta.iter()
        .zip(x)
        .fold(0, |acc, (b, y)| (acc + b.0[j] * y.0[j]) % m)
}

/// `|E^{(j)}_β(x̄, m)|`: the number of `x̄'` in `U^n` agreeing with `x̄`
/// outside block `j` whose block-`j` form value is that of `x̄` plus `m`.
pub fn count_e(u: &GroupShape, beta: &[UElement], j: usize, x: &[UElement], m: u64) -> Result<u64> {
    let n = beta.len();
    let mj = u.modulus(j);
    checked_pow(mj as u128, n, ORACLE_BOUND)?;
    let target = (dot_block(u, beta, x, j) + m) % mj;
    let mut y: Vec<UElement> = x.to_vec();
    let mut digits = vec![0u64; n];
    let mut count = 0;
    loop {
        for (slot, &d) in y.iter_mut().zip(&digits) {
            slot.0[j] = d;
        }
        if dot_block(u, beta, &y, j) == target {
            count += 1;
        }
        if !odometer(&mut digits, mj) {
            return Ok(count);
        }
    }
}

/// Number of `x̄ ∈ Z_q^n` with `⟨α, x̄⟩ = ⟨α, ȳ⟩` and `⟨β, x̄⟩ = ⟨β, ȳ⟩ + m`.
pub fn count_system(q: u64, alpha: &[u64], beta: &[u64], y: &[u64], m: u64) -> Result<u64> {
    let n = alpha.len();
    checked_pow(q as u128, n, ORACLE_BOUND)?;
    let dot = |c: &[u64], v: &[u64]| c.iter().zip(v).fold(0, |a, (x, y)| (a + x * y) % q);
    let (ta, tb) = (dot(alpha, y), (dot(beta, y) + m) % q);
    let mut x = vec![0u64; n];
    let mut count = 0;
    loop {
        if dot(alpha, &x) == ta && dot(beta, &x) == tb {
            count += 1;
        }
        if !odometer(&mut x, q) {
            return Ok(count);
        }
    }
}

/// Increments a little-endian counter with digits below `m`; `false` on wrap.
fn odometer(digits: &mut [u64], m: u64) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < m {
            return true;
        }
        *d = 0;
    }
    false
}

/// All tuples in `Z_q^n`, lexicographic.
pub fn all_tuples(q: u64, n: usize) -> Vec<Vec<u64>> {
    let mut out = vec![];
    let mut x = vec![0u64; n];
    loop {
        out.push(x.clone());
        if !odometer(&mut x, q) {
            return out;
        }
    }
}

/// Wraps residues of a single-block group as elements.
pub fn cyclic_elements(xs: &[u64]) -> Vec<UElement> {
    xs.iter().map(|&x| Element(vec![x])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{eval_circuit, parse_circuit};
    use crate::corpus;
    use crate::wcalc::{Domain, MTerm};
    use std::sync::Arc;

    fn a1(body: &str, n: usize) -> Circuit {
        parse_circuit(
            &format!("circuit T vars {n}\n{body}"),
            Arc::new(corpus::a1()),
        )
        .unwrap()
    }

    #[test]
    fn identical_outputs() {
        let c = a1("x = input 1\ny = f x x\noutputs y y\n", 1);
        assert_eq!(oracle_equivalent(&c).unwrap(), Verdict::Equivalent);
    }

    #[test]
    fn projection_versus_diagonal() {
        let c = a1("x = input 1\ny = f x x\noutputs x y\n", 1);
        let v = oracle_equivalent(&c).unwrap();
        let w = v.witness().unwrap();
        // first differing assignment: l = 0, u = 1 gives f̂(1,1) = 1
        assert_eq!(w, &[(Element(vec![0]), Element(vec![1]))]);
        let (a, b) = eval_circuit(&c, w).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn too_large() {
        let c = a1("x = input 1\noutputs x x\n", 10);
        assert!(matches!(oracle_equivalent(&c), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn assignment_rank_roundtrip() {
        let c = a1("x = input 1\noutputs x x\n", 2);
        assert_eq!(
            assignment_at(&c, 7),
            vec![
                (Element(vec![0]), Element(vec![1])),
                (Element(vec![0]), Element(vec![1]))
            ]
        );
    }

    #[test]
    fn constancy_examples() {
        let u = GroupShape::cyclic(2, 1);
        let l = GroupShape::cyclic(3, 1);
        let dom = Domain::uniform(&u, 1);
        let mk = |terms: Vec<MTerm>, c: u64| HatForm {
            dom: dom.clone(),
            l: l.clone(),
            terms,
            const_l: vec![c],
        };
        let h = mk(
            vec![MTerm {
                beta: vec![1],
                mfun: vec![1, 0],
            }],
            0,
        );
        assert!(matches!(
            oracle_constant(&h).unwrap(),
            OracleConstancy::NotConstant(..)
        ));
        // w^1(x) + w^1(x + 1) written as a single table
        let h = mk(
            vec![MTerm {
                beta: vec![1],
                mfun: vec![1, 1],
            }],
            0,
        );
        assert_eq!(
            oracle_constant(&h).unwrap(),
            OracleConstancy::Constant(vec![1])
        );
        let h = mk(vec![], 2);
        assert_eq!(
            oracle_constant(&h).unwrap(),
            OracleConstancy::Constant(vec![2])
        );
    }

    #[test]
    fn count_e_examples() {
        let u = GroupShape::cyclic(2, 2);
        let beta = cyclic_elements(&[1, 0]);
        for x in all_tuples(4, 2) {
            let x = cyclic_elements(&x);
            assert_eq!(count_e(&u, &beta, 0, &x, 0).unwrap(), 4);
            assert_eq!(count_e(&u, &beta, 0, &x, 1).unwrap(), 4);
        }
    }

    #[test]
    fn count_system_example() {
        assert_eq!(count_system(4, &[1, 0], &[1, 2], &[0, 0], 2).unwrap(), 2);
        assert_eq!(count_system(4, &[1, 0], &[1, 2], &[0, 0], 1).unwrap(), 0);
    }
}
