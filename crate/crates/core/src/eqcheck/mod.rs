// SPDX-License-Identifier: Apache-2.0

//! The equivalence check: compile both outputs, subtract, and decide whether
//! the difference vanishes everywhere.

pub(crate) mod constancy;
mod witness;

use std::fmt;

use rayon::prelude::*;

pub use constancy::{
    build_wcd, class_key, class_subsum, is_constant_coprime, is_constant_with, m_dependence,
    projective_key, shrink_domain, substitute, CheckStats, CheckTrace, ClassKey, Constancy, Frame,
    PairSchedule,
};
pub use witness::{find_nonzero, reconstruct_witness, witness_point};

use crate::algebra::{validate_mode, Mode, ResolvedMode};
use crate::circuit::{eval_circuit, Circuit, Value};
use crate::compile::{linear_part, subtract, Compiler, View};
use crate::error::Result;
use crate::format::format_assignment;
use crate::group::{Element, GroupShape, UElement};
use crate::wcalc::HatForm;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    /// Some `λ_i`, `α_i` or `u_0` differs.
    Linear,
    /// The hats differ at the all-zero assignment.
    Hat0,
    /// The hat difference is not constant.
    Constancy,
    /// Found by enumeration.
    Exhaustive,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::Linear => "linear",
            Reason::Hat0 => "hat0",
            Reason::Constancy => "constancy",
            Reason::Exhaustive => "exhaustive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    NotEquivalent {
        witness: Option<Vec<Value>>,
        reason: Reason,
        trace: String,
    },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }

    pub fn witness(&self) -> Option<&[Value]> {
        match self {
            Verdict::NotEquivalent {
                witness: Some(w), ..
            } => Some(w),
            _ => None,
        }
    }

    /// `EQUIVALENT` or `NOT_EQUIVALENT witness=… reason=… trace=…`.
    pub fn machine_line(&self) -> String {
        match self {
            Verdict::Equivalent => "EQUIVALENT".into(),
            Verdict::NotEquivalent {
                witness,
                reason,
                trace,
            } => format!(
                "NOT_EQUIVALENT witness={} reason={reason} trace={trace}",
                witness
                    .as_deref()
                    .map(format_assignment)
                    .unwrap_or_else(|| "none".into()),
            ),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.machine_line())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    /// Search for a witness after a refutation.
    pub witness: bool,
    pub schedule: PairSchedule,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            witness: true,
            schedule: PairSchedule::All,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub mode: ResolvedMode,
    pub stats: CheckStats,
}

/// Decides whether the two outputs of `c` agree on every assignment.
pub fn check_equivalence(c: &Circuit, mode: Mode) -> Result<Verdict> {
    Ok(check_with(c, mode, &CheckOptions::default())?.verdict)
}

pub fn check_with(c: &Circuit, mode: Mode, opts: &CheckOptions) -> Result<CheckReport> {
    match validate_mode(&c.algebra, mode)? {
        ResolvedMode::Coprime => check_coprime(c, opts),
        ResolvedMode::General => check_general(c, opts),
    }
}

fn outputs_differ(c: &Circuit, asg: &[Value]) -> bool {
    eval_circuit(c, asg).map(|(a, b)| a != b).unwrap_or(false)
}

fn verified(c: &Circuit, asg: Vec<Value>) -> Option<Vec<Value>> {
    outputs_differ(c, &asg).then_some(asg)
}

/// The zero assignment, then unit vectors in the L and U parts of each input.
fn linear_witness(c: &Circuit) -> Option<Vec<Value>> {
    let alg = &*c.algebra;
    let zero = vec![alg.zero(); c.n];
    if outputs_differ(c, &zero) {
        return Some(zero);
    }
    for j in 0..c.n {
        for b in 0..alg.l.len() {
            let mut asg = zero.clone();
            asg[j].0 = alg.l.unit(b);
            if outputs_differ(c, &asg) {
                return Some(asg);
            }
        }
        for b in 0..alg.u.len() {
            let mut asg = zero.clone();
            asg[j].1 = alg.u.unit(b);
            if outputs_differ(c, &asg) {
                return Some(asg);
            }
        }
    }
    None
}

fn linear_differs(c: &Circuit) -> bool {
    linear_part(c, c.outputs.0) != linear_part(c, c.outputs.1)
}

/// Assignment with zero L-parts, U-parts assembled from fixed and free blocks.
fn assemble(c: &Circuit, view: &View, tau: &[UElement], free: &[UElement]) -> Vec<Value> {
    let alg = &*c.algebra;
    (0..c.n)
        .map(|j| {
            let mut u = alg.u.zero();
            for (pos, &b) in view.u1_blocks.iter().enumerate() {
                u.0[b] = tau[j].0[pos];
            }
            for (pos, &b) in view.u2_blocks.iter().enumerate() {
                u.0[b] = free[j].0[pos];
            }
            (alg.l.zero(), u)
        })
        .collect()
}

fn constancy_witness(
    c: &Circuit,
    view: &View,
    tau: &[UElement],
    trace: Option<&CheckTrace>,
    h: &HatForm,
) -> Option<Vec<Value>> {
    let point = match trace {
        Some(t) => witness_point(t, h)?,
        None => vec![0; h.dom.total_vars()],
    };
    let free = h.dom.unflatten(&point, c.n);
    let free: Vec<UElement> = if h.dom.shape().len() == view.u2_blocks.len() {
        free
    } else {
        vec![Element(vec![0; view.u2_blocks.len()]); c.n]
    };
    verified(c, assemble(c, view, tau, &free))
}

pub fn check_coprime(c: &Circuit, opts: &CheckOptions) -> Result<CheckReport> {
    let mut comp = Compiler::coprime(c.algebra.clone())?;
    let view = comp.view().clone();
    let forms = comp.compile_gates(c, &[c.outputs.0, c.outputs.1], None)?;
    let diff = subtract(&forms[0], &forms[1]);
    let mut stats = CheckStats::default();
    let verdict = if !diff.linear_is_zero() {
        Verdict::NotEquivalent {
            witness: if opts.witness {
                linear_witness(c)
            } else {
                None
            },
            reason: Reason::Linear,
            trace: "-".into(),
        }
    } else if diff.hat.eval_zero().iter().any(|&x| x != 0) {
        Verdict::NotEquivalent {
            witness: verified(c, vec![c.algebra.zero(); c.n]),
            reason: Reason::Hat0,
            trace: "-".into(),
        }
    } else {
        match is_constant_with(&diff.hat, opts.schedule, &mut stats) {
            Constancy::Constant(_) => Verdict::Equivalent,
            Constancy::NotConstant(trace) => Verdict::NotEquivalent {
                witness: if opts.witness {
                    let tau = vec![Element(vec![]); c.n];
                    constancy_witness(c, &view, &tau, Some(&trace), &diff.hat)
                } else {
                    None
                },
                reason: Reason::Constancy,
                trace: trace.to_string(),
            },
        }
    };
    Ok(CheckReport {
        verdict,
        mode: ResolvedMode::Coprime,
        stats,
    })
}

/// Number of tuples in `(U_1)^n` with at most `s` nonzero entries.
pub fn weight_tuple_count(n: usize, u1_order: u64, s: u32) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    let mut pow: u128 = 1;
    for w in 0..=(s as usize).min(n) {
        if w > 0 {
            binom = binom * (n - w + 1) as u128 / w as u128;
            pow *= (u1_order - 1) as u128;
        }
        total += binom * pow;
    }
    total
}

/// All tuples in `(U_1)^n` with at most `s` nonzero entries, by weight, then
/// support (lexicographic), then values.
pub fn weight_tuples(n: usize, u1: &GroupShape, s: u32) -> Vec<Vec<UElement>> {
    let nonzero: Vec<UElement> = u1.elements().filter(|e| !e.is_zero()).collect();
    let mut out = vec![];
    for w in 0..=(s as usize).min(n) {
        let mut support: Vec<usize> = (0..w).collect();
        loop {
            let mut digits = vec![0usize; w];
            loop {
                let mut t = vec![u1.zero(); n];
                for (k, &pos) in support.iter().enumerate() {
                    t[pos] = nonzero[digits[k]].clone();
                }
                out.push(t);
                // next value combination
                let mut k = w;
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    digits[k] += 1;
                    if digits[k] < nonzero.len() {
                        break;
                    }
                    digits[k] = 0;
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if w == 0 || k == usize::MAX || nonzero.is_empty() {
                    break;
                }
            }
            // next support
            let mut k = w;
            let mut advanced = false;
            while k > 0 {
                k -= 1;
                if support[k] < n - w + k {
                    support[k] += 1;
                    for r in k + 1..w {
                        support[r] = support[r - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
        if nonzero.is_empty() {
            break;
        }
    }
    out
}

enum Failure {
    NonzeroConstant,
    NotConstant(CheckTrace),
}

pub fn check_general(c: &Circuit, opts: &CheckOptions) -> Result<CheckReport> {
    let alg = c.algebra.clone();
    validate_mode(&alg, Mode::General)?;
    let mut stats = CheckStats::default();
    let done = |verdict| {
        Ok(CheckReport {
            verdict,
            mode: ResolvedMode::General,
            stats: CheckStats::default(),
        })
    };
    if linear_differs(c) {
        return done(Verdict::NotEquivalent {
            witness: if opts.witness {
                linear_witness(c)
            } else {
                None
            },
            reason: Reason::Linear,
            trace: "-".into(),
        });
    }
    let zero = vec![alg.zero(); c.n];
    if outputs_differ(c, &zero) {
        return done(Verdict::NotEquivalent {
            witness: Some(zero),
            reason: Reason::Hat0,
            trace: "-".into(),
        });
    }
    let mut primes: Vec<u64> = alg.l.blocks().iter().map(|b| b.prime).collect();
    primes.sort_unstable();
    primes.dedup();
    for q in primes {
        let view = View::for_prime(&alg, q);
        let u1 = alg.u.project(&view.u1_blocks);
        let s = if view.u1_blocks.is_empty() {
            0
        } else {
            alg.weight_bounds[&q]
        };
        let tuples = weight_tuples(c.n, &u1, s);
        let results: Vec<Result<(Option<(Failure, HatForm)>, CheckStats)>> = tuples
            .par_iter()
            .map_init(
                || Compiler::new(alg.clone(), view.clone()),
                |comp, tau| {
                    let comp = comp
                        .as_mut()
                        .map_err(|e: &mut crate::error::Error| e.clone())?;
                    let forms = comp.compile_gates(c, &[c.outputs.0, c.outputs.1], Some(tau))?;
                    let h = forms[0].hat.sub(&forms[1].hat);
                    let mut st = CheckStats::default();
                    let failure = match is_constant_with(&h, opts.schedule, &mut st) {
                        Constancy::Constant(v) if v.iter().all(|&x| x == 0) => None,
                        Constancy::Constant(_) => Some((Failure::NonzeroConstant, h)),
                        Constancy::NotConstant(t) => Some((Failure::NotConstant(t), h)),
                    };
                    Ok((failure, st))
                },
            )
            .collect();
        let mut first: Option<(usize, Failure, HatForm)> = None;
        for (idx, r) in results.into_iter().enumerate() {
            let (failure, st) = r?;
            stats.merge(&st);
            if let (None, Some((f, h))) = (&first, failure) {
                first = Some((idx, f, h));
            }
        }
        if let Some((idx, failure, h)) = first {
            let tau = &tuples[idx];
            let (trace, witness) = match &failure {
                Failure::NonzeroConstant => (
                    format!("q{q}"),
                    opts.witness
                        .then(|| constancy_witness(c, &view, tau, None, &h))
                        .flatten(),
                ),
                Failure::NotConstant(t) => (
                    format!("q{q}/{t}"),
                    opts.witness
                        .then(|| constancy_witness(c, &view, tau, Some(t), &h))
                        .flatten(),
                ),
            };
            return Ok(CheckReport {
                verdict: Verdict::NotEquivalent {
                    witness,
                    reason: Reason::Constancy,
                    trace,
                },
                mode: ResolvedMode::General,
                stats,
            });
        }
    }
    Ok(CheckReport {
        verdict: Verdict::Equivalent,
        mode: ResolvedMode::General,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::corpus;
    use std::sync::Arc;

    fn a1_circuit(body: &str, n: usize) -> Circuit {
        parse_circuit(
            &format!("circuit T vars {n}\n{body}"),
            Arc::new(corpus::a1()),
        )
        .unwrap()
    }

    #[test]
    fn identical_outputs() {
        let c = a1_circuit("g1 = input 1\ng2 = f g1 g1\noutputs g2 g2\n", 1);
        assert_eq!(
            check_equivalence(&c, Mode::Auto).unwrap(),
            Verdict::Equivalent
        );
    }

    #[test]
    fn symmetric_f() {
        let c = a1_circuit(
            "g1 = input 1\ng2 = input 2\ng3 = f g1 g2\ng4 = f g2 g1\noutputs g3 g4\n",
            2,
        );
        assert!(check_equivalence(&c, Mode::Auto).unwrap().is_equivalent());
    }

    #[test]
    fn projection_versus_diagonal() {
        let c = a1_circuit("g1 = input 1\ng2 = f g1 g1\noutputs g1 g2\n", 1);
        let v = check_equivalence(&c, Mode::Auto).unwrap();
        let w = v.witness().expect("witness").to_vec();
        let (a, b) = eval_circuit(&c, &w).unwrap();
        assert_ne!(a, b);
        assert!(v.machine_line().starts_with("NOT_EQUIVALENT witness=("));
    }

    #[test]
    fn weight_tuple_examples() {
        let z2 = GroupShape::cyclic(2, 1);
        assert_eq!(weight_tuple_count(3, 2, 2), 7);
        assert_eq!(weight_tuples(3, &z2, 2).len(), 7);
        let z3 = GroupShape::cyclic(3, 1);
        let t = weight_tuples(4, &z3, 2);
        assert_eq!(t.len() as u128, weight_tuple_count(4, 3, 2));
        let mut sorted = t.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), t.len());
        assert!(t
            .iter()
            .all(|x| x.iter().filter(|e| !e.is_zero()).count() <= 2));
        assert_eq!(weight_tuples(2, &GroupShape::trivial(), 3).len(), 1);
    }

    #[test]
    fn general_mode_on_z6_z2() {
        let alg = Arc::new(corpus::z6_z2());
        let c = parse_circuit(
            "circuit T vars 2\nx = input 1\ny = input 2\na = f x y\nb = f y x\noutputs a b\n",
            alg.clone(),
        )
        .unwrap();
        let v = check_equivalence(&c, Mode::Auto).unwrap();
        let oracle = crate::oracle::oracle_equivalent(&c).unwrap();
        assert_eq!(v.is_equivalent(), oracle.is_equivalent());
        if let Some(w) = v.witness() {
            assert!(outputs_differ(&c, w));
        }
    }
}
