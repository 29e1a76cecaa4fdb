// SPDX-License-Identifier: Apache-2.0

//! Empirical validation of declared weight bounds.
//!
//! For a shared prime `q`, let `U_1` be the `q`-blocks of `U`. A bound `s` is
//! adequate for a family of functions `D: U^n → L_q` when every `D` that
//! vanishes on all points whose `U_1`-parts have Hamming weight at most `s`
//! vanishes everywhere. This module evaluates hat differences of circuit
//! gates directly (L-parts of inputs set to zero, so only the hat remains) and
//! records, for each nonzero difference, the smallest weight of a point where
//! it is nonzero. The bound is refuted when that weight exceeds `s`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::generate::{random_circuit, GenConfig, OpMix, Strategy};
use crate::algebra::AlgebraSpec;
use crate::circuit::{eval_all, Circuit, Gate};
use crate::error::{Error, Result};
use crate::group::UElement;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeResult {
    pub prime: u64,
    pub declared: u32,
    /// Nonzero hat differences examined.
    pub functions: usize,
    /// Largest minimal witness weight seen.
    pub observed: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightBoundReport {
    pub primes: Vec<PrimeResult>,
}

impl WeightBoundReport {
    pub fn is_valid(&self) -> bool {
        self.primes.iter().all(|p| p.observed <= p.declared)
    }
}

impl fmt::Display for WeightBoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.primes {
            writeln!(
                f,
                "prime {}: declared s={} observed={} nonzero_differences={} {}",
                p.prime,
                p.declared,
                p.observed,
                p.functions,
                if p.observed <= p.declared {
                    "OK"
                } else {
                    "VIOLATED"
                }
            )?;
        }
        Ok(())
    }
}

/// The hat table of every gate of `c` over `U^n`, restricted to the `L`
/// blocks in `l_blocks`.
fn gate_tables(
    c: &Circuit,
    points: &[Vec<UElement>],
    l_blocks: &[usize],
) -> Result<Vec<Vec<Vec<u64>>>> {
    let alg = &*c.algebra;
    let mut out = vec![Vec::with_capacity(points.len()); c.gates.len()];
    for u in points {
        let asg: Vec<_> = u.iter().map(|x| (alg.l.zero(), x.clone())).collect();
        let vals = eval_all(c, &asg)?;
        for (g, (l, _)) in vals.iter().enumerate() {
            out[g].push(l_blocks.iter().map(|&b| l.0[b]).collect());
        }
    }
    Ok(out)
}

fn all_points(alg: &AlgebraSpec, n: usize) -> Vec<Vec<UElement>> {
    let order = alg.u.order() as usize;
    let total = order.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![alg.u.zero(); n];
            for slot in p.iter_mut().rev() {
                *slot = alg.u.element_at(idx % order);
                idx /= order;
            }
            p
        })
        .collect()
}

/// Every single-operation circuit over `n` inputs, one gate per argument tuple.
fn single_op_circuit(alg: &Arc<AlgebraSpec>, n: usize) -> Circuit {
    let mut gates: Vec<Gate> = (1..=n).map(Gate::Input).collect();
    for (op, bop) in alg.ops.iter().enumerate() {
        let k = bop.arity;
        let mut args = vec![0usize; k];
        loop {
            gates.push(Gate::Op(op, args.clone()));
            let mut j = k;
            let mut advanced = false;
            while j > 0 {
                j -= 1;
                args[j] += 1;
                if args[j] < n {
                    advanced = true;
                    break;
                }
                args[j] = 0;
            }
            if !advanced {
                break;
            }
        }
    }
    let last = gates.len() - 1;
    Circuit::from_gates(alg.clone(), n, gates, (0, last))
}

/// Cross-checks each declared weight bound against exhaustive evaluation on
/// all single-operation circuits and `count` random circuits for every
/// `n ≤ max_n`.
pub fn validate_weight_bound(
    alg: &Arc<AlgebraSpec>,
    max_n: usize,
    count: usize,
    seed: u64,
) -> Result<WeightBoundReport> {
    let mut primes = vec![];
    for q in alg.shared_primes() {
        let declared = *alg
            .weight_bounds
            .get(&q)
            .ok_or(Error::MissingWeightBound(q))?;
        let l_blocks: Vec<usize> = (0..alg.l.len())
            .filter(|&b| alg.l.blocks()[b].prime == q)
            .collect();
        let u1: Vec<usize> = (0..alg.u.len())
            .filter(|&b| alg.u.blocks()[b].prime == q)
            .collect();
        let mut res = PrimeResult {
            prime: q,
            declared,
            functions: 0,
            observed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ q);
        for n in 1..=max_n {
            let points = all_points(alg, n);
            if points.len() > super::ORACLE_BOUND as usize {
                break;
            }
            let weights: Vec<u32> = points
                .iter()
                .map(|p| p.iter().filter(|x| u1.iter().any(|&b| x.0[b] != 0)).count() as u32)
                .collect();
            let mut circuits = vec![single_op_circuit(alg, n)];
            for _ in 0..count {
                let cfg = GenConfig {
                    n,
                    max_gates: 10,
                    mix: OpMix::default(),
                    strategy: Strategy::Independent,
                };
                circuits.push(random_circuit(alg, &cfg, &mut rng));
            }
            for c in &circuits {
                let tables = gate_tables(c, &points, &l_blocks)?;
                let first_gate = n.min(tables.len());
                for a in first_gate..tables.len() {
                    for b in 0..a {
                        let mut min_w: Option<u32> = None;
                        for (pi, w) in weights.iter().enumerate() {
                            if tables[a][pi] != tables[b][pi] {
                                min_w = Some(min_w.map_or(*w, |m| m.min(*w)));
                            }
                        }
                        if let Some(w) = min_w {
                            res.functions += 1;
                            res.observed = res.observed.max(w);
                        }
                    }
                }
            }
        }
        primes.push(res);
    }
    Ok(WeightBoundReport { primes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn corpus_bound_is_adequate() {
        let alg = Arc::new(corpus::z6_z2());
        let r = validate_weight_bound(&alg, 3, 20, 1).unwrap();
        assert_eq!(r.primes.len(), 1);
        assert!(r.primes[0].functions > 0);
        assert!(r.is_valid(), "{r}");
    }

    #[test]
    fn coprime_algebra_has_nothing_to_check() {
        let alg = Arc::new(corpus::a1());
        assert!(validate_weight_bound(&alg, 2, 5, 0)
            .unwrap()
            .primes
            .is_empty());
    }
}
