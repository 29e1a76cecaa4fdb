// SPDX-License-Identifier: Apache-2.0

//! Table-driven circuit evaluation on element indices.

use crate::circuit::{eval_circuit, Circuit, Gate};
use crate::group::{GroupShape, Scalar};

/// Largest group order for which addition tables are built.
const TABLE_LIMIT: u64 = 2048;

struct Tables {
    lo: usize,
    uo: usize,
    l_add: Vec<u32>,
    u_add: Vec<u32>,
    gates: Vec<FGate>,
    outputs: (usize, usize),
    n: usize,
}

enum FGate {
    Input(usize),
    Const(u32, u32),
    Op {
        children: Vec<usize>,
        l_scale: Vec<Vec<u32>>,
        u_scale: Vec<Vec<u32>>,
        u_const: u32,
        /// L index by packed U argument index.
        hat: std::sync::Arc<Vec<u32>>,
    },
}

/// Evaluates a circuit on assignments given by lexicographic rank.
pub struct FastEval<'a> {
    circuit: &'a Circuit,
    tables: Option<Tables>,
}

fn add_table(g: &GroupShape) -> Vec<u32> {
    let o = g.order() as usize;
    let els: Vec<_> = g.elements().collect();
    let mut t = vec![0u32; o * o];
    for a in 0..o {
        for b in 0..o {
            t[a * o + b] = g.index(&g.add_unchecked(&els[a], &els[b])) as u32;
        }
    }
    t
}

fn scale_table(g: &GroupShape, s: &Scalar) -> Vec<u32> {
    g.elements()
        .map(|e| g.index(&g.scale_unchecked(s, &e)) as u32)
        .collect()
}

impl<'a> FastEval<'a> {
    pub fn new(c: &'a Circuit) -> Self {
        let alg = &*c.algebra;
        if alg.l.order() > TABLE_LIMIT || alg.u.order() > TABLE_LIMIT {
            return FastEval {
                circuit: c,
                tables: None,
            };
        }
        let hats: Vec<std::sync::Arc<Vec<u32>>> = alg
            .ops
            .iter()
            .map(|op| {
                std::sync::Arc::new(
                    op.hat_table()
                        .iter()
                        .map(|e| alg.l.index(e) as u32)
                        .collect(),
                )
            })
            .collect();
        let gates = c
            .gates
            .iter()
            .map(|g| match g {
                Gate::Input(i) => FGate::Input(i - 1),
                Gate::Const(l, u) => FGate::Const(alg.l.index(l) as u32, alg.u.index(u) as u32),
                Gate::Op(op, ch) => {
                    let bop = &alg.ops[*op];
                    FGate::Op {
                        children: ch.clone(),
                        l_scale: bop
                            .l_scalars
                            .iter()
                            .map(|s| scale_table(&alg.l, s))
                            .collect(),
                        u_scale: bop
                            .u_scalars
                            .iter()
                            .map(|s| scale_table(&alg.u, s))
                            .collect(),
                        u_const: alg.u.index(&bop.u_const) as u32,
                        hat: hats[*op].clone(),
                    }
                }
            })
            .collect();
        FastEval {
            circuit: c,
            tables: Some(Tables {
                lo: alg.l.order() as usize,
                uo: alg.u.order() as usize,
                l_add: add_table(&alg.l),
                u_add: add_table(&alg.u),
                gates,
                outputs: c.outputs,
                n: c.n,
            }),
        }
    }

    /// Per-worker buffer for gate values.
    pub fn scratch(&self) -> Vec<(u32, u32)> {
        vec![(0, 0); self.circuit.gates.len()]
    }

    /// Whether the outputs differ on the assignment of rank `idx`.
    pub fn differs_at(&self, idx: u128, vals: &mut [(u32, u32)]) -> bool {
        let Some(t) = &self.tables else {
            let asg = super::assignment_at(self.circuit, idx);
            return eval_circuit(self.circuit, &asg)
                .map(|(a, b)| a != b)
                .unwrap_or(false);
        };
        let pair = (t.lo * t.uo) as u128;
        let mut inputs = [(0u32, 0u32); 64];
        let mut heap;
        let inputs: &mut [(u32, u32)] = if t.n <= 64 {
            &mut inputs[..t.n]
        } else {
            heap = vec![(0u32, 0u32); t.n];
            &mut heap
        };
        let mut rest = idx;
        for slot in inputs.iter_mut().rev() {
            let p = (rest % pair) as usize;
            rest /= pair;
            *slot = ((p / t.uo) as u32, (p % t.uo) as u32);
        }
        for (gi, g) in t.gates.iter().enumerate() {
            vals[gi] = match g {
                FGate::Input(i) => inputs[*i],
                FGate::Const(l, u) => (*l, *u),
                FGate::Op {
                    children,
                    l_scale,
                    u_scale,
                    u_const,
                    hat,
                } => {
                    let mut packed = 0usize;
                    let mut l = 0u32;
                    let mut u = *u_const;
                    for (j, &k) in children.iter().enumerate() {
                        let (cl, cu) = vals[k];
                        packed = packed * t.uo + cu as usize;
                        l = t.l_add[l as usize * t.lo + l_scale[j][cl as usize] as usize];
                        u = t.u_add[u as usize * t.uo + u_scale[j][cu as usize] as usize];
                    }
                    (t.l_add[l as usize * t.lo + hat[packed] as usize], u)
                }
            };
        }
        vals[t.outputs.0] != vals[t.outputs.1]
    }
}
