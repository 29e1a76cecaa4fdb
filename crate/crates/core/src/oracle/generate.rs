// SPDX-License-Identifier: Apache-2.0

//! Random circuits for differential testing.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::algebra::AlgebraSpec;
use crate::circuit::{Circuit, Gate};
use crate::compile::{linear_part, LinearPart};

/// Relative weights of the gate kinds drawn after the inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpMix {
    pub op: u32,
    pub constant: u32,
}

impl Default for OpMix {
    fn default() -> Self {
        OpMix { op: 5, constant: 1 }
    }
}

/// How the two outputs are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Two unrelated gates of one random DAG.
    Independent,
    /// A gate and a copy of its cone, possibly with one local change. Produces
    /// equivalent pairs far more often than [`Strategy::Independent`].
    Twin,
    /// Two distinct gates whose linear parts `(λ, α, u_0)` coincide, so the
    /// outputs can only differ through their hats. Falls back to
    /// [`Strategy::Independent`] when the DAG has no such pair.
    SameLinear,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub n: usize,
    /// Upper bound on non-input gates.
    pub max_gates: usize,
    pub mix: OpMix,
    pub strategy: Strategy,
}

fn random_gate<R: Rng>(alg: &AlgebraSpec, existing: usize, mix: OpMix, rng: &mut R) -> Gate {
    let total = mix.op + mix.constant;
    if alg.ops.is_empty() || rng.gen_range(0..total.max(1)) >= mix.op {
        let l = alg.l.element_at(rng.gen_range(0..alg.l.order() as usize));
        let u = alg.u.element_at(rng.gen_range(0..alg.u.order() as usize));
        return Gate::Const(l, u);
    }
    let op = rng.gen_range(0..alg.ops.len());
    let children = (0..alg.ops[op].arity)
        .map(|_| rng.gen_range(0..existing))
        .collect();
    Gate::Op(op, children)
}

/// Draws a random circuit with `cfg.n` inputs and at most `cfg.max_gates`
/// further gates.
pub fn random_circuit<R: Rng>(alg: &Arc<AlgebraSpec>, cfg: &GenConfig, rng: &mut R) -> Circuit {
    let n = cfg.n;
    let mut gates: Vec<Gate> = (1..=n).map(Gate::Input).collect();
    let budget = match cfg.strategy {
        Strategy::Twin => cfg.max_gates / 2,
        _ => cfg.max_gates,
    };
    let extra = if budget == 0 {
        0
    } else {
        rng.gen_range(1..=budget)
    };
    for _ in 0..extra {
        let g = random_gate(alg, gates.len().max(1), cfg.mix, rng);
        gates.push(g);
    }
    if gates.is_empty() {
        gates.push(Gate::Const(alg.l.zero(), alg.u.zero()));
    }
    let last = gates.len() - 1;
    let outputs = match cfg.strategy {
        Strategy::Independent => (rng.gen_range(0..gates.len()), last),
        Strategy::SameLinear => {
            let probe = Circuit::from_gates(alg.clone(), n, gates.clone(), (0, 0));
            let parts: Vec<LinearPart> = (0..gates.len()).map(|g| linear_part(&probe, g)).collect();
            let pairs: Vec<(usize, usize)> = (0..gates.len())
                .flat_map(|b| (0..b).map(move |a| (a, b)))
                .filter(|&(a, b)| parts[a] == parts[b])
                .collect();
            match pairs.choose(rng) {
                Some(&p) => p,
                None => (rng.gen_range(0..gates.len()), last),
            }
        }
        Strategy::Twin => {
            let twin = twin_cone(alg, &mut gates, last, rng);
            (last, twin)
        }
    };
    let mut c = Circuit::from_gates(alg.clone(), n, gates, outputs);
    c.name = "R".into();
    c
}

/// Appends a copy of the op gates in the cone of `root` and returns the copy
/// of `root`. One copied gate may get permuted children or one child
/// redirected to another existing gate.
fn twin_cone<R: Rng>(alg: &AlgebraSpec, gates: &mut Vec<Gate>, root: usize, rng: &mut R) -> usize {
    let mut in_cone = vec![false; gates.len()];
    in_cone[root] = true;
    for i in (0..=root).rev() {
        if in_cone[i] {
            if let Gate::Op(_, ch) = &gates[i] {
                for &k in ch {
                    in_cone[k] = true;
                }
            }
        }
    }
    let cone: Vec<usize> = (0..=root)
        .filter(|&i| in_cone[i] && matches!(gates[i], Gate::Op(..)))
        .collect();
    if cone.is_empty() {
        return root;
    }
    let mutate_at = rng.gen_range(0..cone.len());
    let mutation = rng.gen_range(0..3);
    let mut map: Vec<usize> = (0..gates.len()).collect();
    for (pos, &g) in cone.iter().enumerate() {
        let Gate::Op(op, ch) = &gates[g] else {
            unreachable!()
        };
        let mut ch: Vec<usize> = ch.iter().map(|&k| map[k]).collect();
        if pos == mutate_at {
            match mutation {
                0 => ch.shuffle(rng),
                1 if alg.ops[*op].arity > 0 => {
                    let j = rng.gen_range(0..ch.len());
                    ch[j] = rng.gen_range(0..gates.len());
                }
                _ => {}
            }
        }
        let op = *op;
        map[g] = gates.len();
        gates.push(Gate::Op(op, ch));
    }
    map[root]
}
