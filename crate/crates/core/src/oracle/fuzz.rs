// SPDX-License-Identifier: Apache-2.0

//! Differential testing of the checker against the exhaustive oracle.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::generate::{random_circuit, GenConfig, OpMix, Strategy};
use super::{oracle_equivalent_bounded, ORACLE_BOUND};
use crate::algebra::{AlgebraSpec, Mode};
use crate::circuit::{eval_circuit, Circuit, Gate};
use crate::eqcheck::{check_with, CheckOptions, CheckReport, Reason, Verdict};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub seed: u64,
    /// Instances per algebra.
    pub count: usize,
    pub max_n: usize,
    /// Upper bound on non-input gates.
    pub max_gates: usize,
    pub mix: OpMix,
    pub algebras: Vec<Arc<AlgebraSpec>>,
    pub mode: Mode,
}

impl FuzzConfig {
    pub fn new(seed: u64, count: usize, algebras: Vec<Arc<AlgebraSpec>>) -> Self {
        FuzzConfig {
            seed,
            count,
            max_n: 4,
            max_gates: 10,
            mix: OpMix::default(),
            algebras,
            mode: Mode::Auto,
        }
    }

    /// Largest `n ≤ max_n` whose assignment space fits the oracle bound.
    pub fn n_cap(&self, alg: &AlgebraSpec) -> usize {
        let order = alg.order() as u128;
        let mut n = 0;
        let mut size: u128 = 1;
        while n < self.max_n && size.saturating_mul(order) <= ORACLE_BOUND {
            size *= order;
            n += 1;
        }
        n.max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceResult {
    pub algebra: String,
    pub index: usize,
    pub agree: bool,
    pub oracle_equivalent: bool,
    /// The checker's refutation reason, if it refuted.
    pub reason: Option<Reason>,
    /// Witness was present and did not separate the outputs.
    pub invalid_witness: bool,
    pub max_depth: usize,
    /// `Σ_i k_i` over the blocks of `U`.
    pub depth_bound: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub algebra: String,
    pub index: usize,
    pub checker: String,
    pub oracle: String,
    pub shrunk: Circuit,
}

#[derive(Clone, Debug)]
pub struct FuzzReport {
    pub seed: u64,
    pub results: Vec<InstanceResult>,
    pub counterexamples: Vec<Counterexample>,
}

impl FuzzReport {
    pub fn total(&self) -> usize {
        self.results.len()
    }

    pub fn agree(&self) -> usize {
        self.results.iter().filter(|r| r.agree).count()
    }

    pub fn disagree(&self) -> usize {
        self.total() - self.agree()
    }

    pub fn invalid_witnesses(&self) -> usize {
        self.results.iter().filter(|r| r.invalid_witness).count()
    }

    pub fn depth_violations(&self) -> usize {
        self.results
            .iter()
            .filter(|r| r.max_depth > r.depth_bound)
            .count()
    }

    /// `FUZZ seed=<s> total=<n> agree=<n> disagree=<n>`.
    pub fn summary_line(&self) -> String {
        format!(
            "FUZZ seed={} total={} agree={} disagree={}",
            self.seed,
            self.total(),
            self.agree(),
            self.disagree()
        )
    }
}

impl fmt::Display for FuzzReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<&str> = self.results.iter().map(|r| r.algebra.as_str()).collect();
        names.dedup();
        for name in names {
            let rs: Vec<&InstanceResult> =
                self.results.iter().filter(|r| r.algebra == name).collect();
            writeln!(
                f,
                "algebra {name}: instances={} agree={} equivalent={} invalid_witnesses={} max_depth={}",
                rs.len(),
                rs.iter().filter(|r| r.agree).count(),
                rs.iter().filter(|r| r.oracle_equivalent).count(),
                rs.iter().filter(|r| r.invalid_witness).count(),
                rs.iter().map(|r| r.max_depth).max().unwrap_or(0),
            )?;
            let by = |want: Reason| rs.iter().filter(|r| r.reason == Some(want)).count();
            writeln!(
                f,
                "  refutations: linear={} hat0={} constancy={}",
                by(Reason::Linear),
                by(Reason::Hat0),
                by(Reason::Constancy),
            )?;
        }
        for r in self.results.iter().filter(|r| r.error.is_some()) {
            writeln!(
                f,
                "error {}#{}: {}",
                r.algebra,
                r.index,
                r.error.as_deref().unwrap_or("")
            )?;
        }
        for cx in &self.counterexamples {
            writeln!(
                f,
                "counterexample {}#{}: checker={} oracle={}",
                cx.algebra, cx.index, cx.checker, cx.oracle
            )?;
            write!(f, "{}", cx.shrunk.to_text())?;
        }
        writeln!(f, "{}", self.summary_line())
    }
}

/// Runs the default checker against the oracle.
pub fn fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let mode = cfg.mode;
    fuzz_with(cfg, &move |c: &Circuit| {
        check_with(c, mode, &CheckOptions::default())
    })
}

type Checker<'a> = dyn Fn(&Circuit) -> Result<CheckReport> + Sync + 'a;

fn generate_all(cfg: &FuzzConfig) -> Vec<(usize, usize, Circuit)> {
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = vec![];
    for (ai, alg) in cfg.algebras.iter().enumerate() {
        let n_cap = cfg.n_cap(alg);
        for index in 0..cfg.count {
            let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
            let gen = GenConfig {
                n: rng.gen_range(1..=n_cap),
                max_gates: cfg.max_gates,
                mix: cfg.mix,
                strategy: match rng.gen_range(0..4) {
                    0 => Strategy::Independent,
                    1 => Strategy::Twin,
                    _ => Strategy::SameLinear,
                },
            };
            out.push((ai, index, random_circuit(alg, &gen, &mut rng)));
        }
    }
    out
}

fn disagrees(checker: &Checker, c: &Circuit) -> bool {
    match (checker(c), oracle_equivalent_bounded(c, ORACLE_BOUND)) {
        (Ok(r), Ok(o)) => r.verdict.is_equivalent() != o.is_equivalent(),
        (Err(_), Ok(_)) => true,
        _ => false,
    }
}

fn depth_bound(alg: &AlgebraSpec) -> usize {
    alg.u.blocks().iter().map(|b| b.exp as usize).sum()
}

fn run_one(checker: &Checker, alg_name: &str, index: usize, c: &Circuit) -> InstanceResult {
    let mut res = InstanceResult {
        algebra: alg_name.to_string(),
        index,
        agree: false,
        oracle_equivalent: false,
        reason: None,
        invalid_witness: false,
        max_depth: 0,
        depth_bound: depth_bound(&c.algebra),
        error: None,
    };
    let oracle = match oracle_equivalent_bounded(c, ORACLE_BOUND) {
        Ok(v) => v,
        Err(e) => {
            res.error = Some(format!("oracle: {e}"));
            return res;
        }
    };
    res.oracle_equivalent = oracle.is_equivalent();
    match checker(c) {
        Ok(report) => {
            res.max_depth = report.stats.max_depth;
            if let Verdict::NotEquivalent { reason, .. } = &report.verdict {
                res.reason = Some(*reason);
            }
            res.agree = report.verdict.is_equivalent() == oracle.is_equivalent();
            if let Some(w) = report.verdict.witness() {
                res.invalid_witness = !matches!(eval_circuit(c, w), Ok((a, b)) if a != b);
            }
        }
        Err(e) => res.error = Some(format!("checker: {e}")),
    }
    res
}

/// Runs `checker` against the oracle on the configured random instances.
/// Results depend only on the configuration, not on thread scheduling.
pub fn fuzz_with(cfg: &FuzzConfig, checker: &Checker) -> FuzzReport {
    let instances = generate_all(cfg);
    let results: Vec<InstanceResult> = instances
        .par_iter()
        .map(|(ai, index, c)| run_one(checker, &cfg.algebras[*ai].name, *index, c))
        .collect();
    let counterexamples = instances
        .iter()
        .zip(&results)
        .filter(|(_, r)| !r.agree && r.error.as_deref().is_none_or(|e| e.starts_with("checker")))
        .map(|((ai, index, c), _)| {
            let shrunk = shrink(c, &|x| disagrees(checker, x));
            let describe = |v: Result<Verdict>| match v {
                Ok(v) => v.machine_line(),
                Err(e) => format!("error: {e}"),
            };
            Counterexample {
                algebra: cfg.algebras[*ai].name.clone(),
                index: *index,
                checker: describe(checker(&shrunk).map(|r| r.verdict)),
                oracle: describe(oracle_equivalent_bounded(&shrunk, ORACLE_BOUND)),
                shrunk,
            }
        })
        .collect();
    FuzzReport {
        seed: cfg.seed,
        results,
        counterexamples,
    }
}

/// Removes the op gate `g`, rewiring its uses (and outputs) to its first child.
fn remove_gate(c: &Circuit, g: usize) -> Option<Circuit> {
    let Gate::Op(_, ch) = &c.gates[g] else {
        return None;
    };
    let target = *ch.first()?;
    let remap = |k: usize| -> usize {
        let k = if k == g { target } else { k };
        if k > g {
            k - 1
        } else {
            k
        }
    };
    let gates = c
        .gates
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != g)
        .map(|(_, gate)| match gate {
            Gate::Op(op, ch) => Gate::Op(*op, ch.iter().map(|&k| remap(k)).collect()),
            other => other.clone(),
        })
        .collect();
    let mut out = Circuit::from_gates(
        c.algebra.clone(),
        c.n,
        gates,
        (remap(c.outputs.0), remap(c.outputs.1)),
    );
    out.name = c.name.clone();
    Some(out)
}

/// Drops gates no output depends on, keeping inputs.
fn prune(c: &Circuit) -> Circuit {
    let live = c.reachable(&[c.outputs.0, c.outputs.1]);
    let mut map = vec![usize::MAX; c.gates.len()];
    let mut gates = vec![];
    for (i, g) in c.gates.iter().enumerate() {
        if live[i] || matches!(g, Gate::Input(_)) {
            map[i] = gates.len();
            gates.push(match g {
                Gate::Op(op, ch) => Gate::Op(*op, ch.iter().map(|&k| map[k]).collect()),
                other => other.clone(),
            });
        }
    }
    let mut out = Circuit::from_gates(
        c.algebra.clone(),
        c.n,
        gates,
        (map[c.outputs.0], map[c.outputs.1]),
    );
    out.name = c.name.clone();
    out
}

/// Greedily removes op gates while `failing` keeps holding.
pub fn shrink(c: &Circuit, failing: &dyn Fn(&Circuit) -> bool) -> Circuit {
    let mut cur = prune(c);
    'outer: loop {
        for g in (0..cur.gates.len()).rev() {
            if let Some(next) = remove_gate(&cur, g) {
                let next = prune(&next);
                if failing(&next) {
                    cur = next;
                    continue 'outer;
                }
            }
        }
        return cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn deterministic_report() {
        let cfg = FuzzConfig::new(7, 20, vec![Arc::new(corpus::a1())]);
        let a = fuzz(&cfg);
        let b = fuzz(&cfg);
        assert_eq!(a.results, b.results);
        assert_eq!(a.summary_line(), b.summary_line());
        assert_eq!(a.disagree(), 0);
    }

    #[test]
    fn mutated_checker_is_caught_and_shrunk() {
        let cfg = FuzzConfig::new(3, 120, vec![Arc::new(corpus::z4_z3())]);
        let broken = |c: &Circuit| -> Result<CheckReport> {
            let mut r = check_with(c, Mode::Auto, &CheckOptions::default())?;
            if matches!(
                r.verdict,
                Verdict::NotEquivalent {
                    reason: Reason::Constancy,
                    ..
                }
            ) {
                r.verdict = Verdict::Equivalent;
            }
            Ok(r)
        };
        let report = fuzz_with(&cfg, &broken);
        assert!(report.disagree() > 0);
        assert!(!report.counterexamples.is_empty());
        for cx in &report.counterexamples {
            assert!(disagrees(&broken, &cx.shrunk));
            assert!(cx.shrunk.op_count() <= 10);
        }
    }
}
