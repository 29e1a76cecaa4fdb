// SPDX-License-Identifier: Apache-2.0

//! Gate-chain circuit families for timing the checker against the oracle.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::algebra::{AlgebraSpec, Mode};
use crate::circuit::{Circuit, Gate};
use crate::compile::{Compiler, View};
use crate::eqcheck::{check_with, CheckOptions, Verdict};
use crate::error::{Error, Result};
use crate::oracle::oracle_equivalent;

/// Two chains folding the inputs round-robin through a binary operation:
/// the first output is `m(…m(m(x1, x2), x3)…)`, the second puts the
/// accumulator in the other argument, `m(x_k, …m(x2, x1)…)`. For a
/// commutative operation the outputs are equivalent.
pub fn chain_circuit(alg: &Arc<AlgebraSpec>, op: &str, n: usize, gates: usize) -> Result<Circuit> {
    let (oi, bop) = alg.op(op).ok_or_else(|| Error::UnknownOp(op.to_string()))?;
    if bop.arity != 2 {
        return Err(Error::ArityMismatch {
            what: format!("chain operation `{op}`"),
            expected: 2,
            found: bop.arity,
        });
    }
    let n = n.max(1);
    let mut g: Vec<Gate> = (1..=n).map(Gate::Input).collect();
    let per_chain = (gates / 2).max(1);
    let mut a = 0usize;
    let mut b = 0usize;
    for j in 0..per_chain {
        let x = (j + 1) % n;
        g.push(Gate::Op(oi, vec![a, x]));
        a = g.len() - 1;
        g.push(Gate::Op(oi, vec![x, b]));
        b = g.len() - 1;
    }
    let mut c = Circuit::from_gates(alg.clone(), n, g, (a, b));
    c.name = format!("chain_n{n}_g{gates}");
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub gates: usize,
    /// Terms in the two compiled output hats.
    pub terms: usize,
    pub check: Duration,
    /// `None` when the oracle's enumeration bound is exceeded.
    pub oracle: Option<Duration>,
    pub oracle_equivalent: Option<bool>,
    pub equivalent: bool,
}

impl BenchRow {
    pub const HEADER: &'static str = "n,gates,terms,check_ms,oracle_ms";
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{:.3},",
            self.n,
            self.gates,
            self.terms,
            self.check.as_secs_f64() * 1e3
        )?;
        if let Some(o) = self.oracle {
            write!(f, "{:.3}", o.as_secs_f64() * 1e3)?;
        }
        Ok(())
    }
}

/// Times the checker (and the oracle, when feasible) on one circuit.
pub fn bench_circuit(c: &Circuit, mode: Mode, with_oracle: bool) -> Result<BenchRow> {
    let start = Instant::now();
    let report = check_with(c, mode, &CheckOptions::default())?;
    let check = start.elapsed();
    let terms = if c.algebra.is_coprime() {
        let mut comp = Compiler::new(c.algebra.clone(), View::full(&c.algebra))?;
        comp.compile_gates(c, &[c.outputs.0, c.outputs.1], None)?
            .iter()
            .map(|f| f.hat.terms.len())
            .sum()
    } else {
        0
    };
    let oracle = if with_oracle {
        let start = Instant::now();
        match oracle_equivalent(c) {
            Ok(v) => Some((start.elapsed(), v.is_equivalent())),
            Err(Error::TooLarge { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(BenchRow {
        n: c.n,
        gates: c.op_count(),
        terms,
        check,
        oracle: oracle.map(|o| o.0),
        oracle_equivalent: oracle.map(|o| o.1),
        equivalent: matches!(report.verdict, Verdict::Equivalent),
    })
}
