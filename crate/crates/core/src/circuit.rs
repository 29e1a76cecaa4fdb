// SPDX-License-Identifier: Apache-2.0

//! Circuits: DAGs of inputs, constants and basic operations with two outputs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::algebra::{eval_basic_op, AlgebraSpec};
use crate::error::{Error, Result};
use crate::format::{format_pair, parse_pair};
use crate::group::{LElement, UElement};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    /// 1-based input index.
    Input(usize),
    Const(LElement, UElement),
    /// Index into `AlgebraSpec::ops` and child gate ids.
    Op(usize, Vec<usize>),
}

/// Gates are stored in topological order; ids are positions in `gates`.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub name: String,
    pub algebra: Arc<AlgebraSpec>,
    pub n: usize,
    pub gates: Vec<Gate>,
    pub names: Vec<String>,
    pub outputs: (usize, usize),
}

struct RawGate<'a> {
    line: usize,
    name: &'a str,
    kind: RawKind<'a>,
}

enum RawKind<'a> {
    Input(usize),
    Const(LElement, UElement),
    Op(usize, Vec<&'a str>),
}

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses the circuit text format:
///
/// ```text
/// circuit C over A1 vars 2
/// g1 = input 1
/// g2 = const ((1)|(0))
/// g3 = f g1 g2
/// outputs g3 g2
/// ```
///
/// Gate definitions may appear in any order.
pub fn parse_circuit(text: &str, algebra: Arc<AlgebraSpec>) -> Result<Circuit> {
    let alg = &*algebra;
    let mut name = String::from("C");
    let mut n: Option<usize> = None;
    let mut raw: Vec<RawGate> = vec![];
    let mut outputs: Option<(&str, &str)> = None;
    for (i, line) in text.lines().enumerate() {
        let lno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "circuit" => {
                // circuit <name> [over <alg>] vars <n>
                name = toks
                    .get(1)
                    .ok_or_else(|| syntax(lno, "missing circuit name"))?
                    .to_string();
                let pos = toks
                    .iter()
                    .position(|&t| t == "vars")
                    .ok_or_else(|| syntax(lno, "missing `vars <n>`"))?;
                let v = toks
                    .get(pos + 1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| syntax(lno, "bad variable count"))?;
                n = Some(v);
            }
            "outputs" => {
                if toks.len() != 3 {
                    return Err(syntax(lno, "expected `outputs <gate> <gate>`"));
                }
                outputs = Some((toks[1], toks[2]));
            }
            gname => {
                if toks.get(1) != Some(&"=") || toks.len() < 3 {
                    return Err(syntax(
                        lno,
                        format!("expected `<gate> = …`, found `{line}`"),
                    ));
                }
                let kind = match toks[2] {
                    "input" => {
                        let idx: usize = toks
                            .get(3)
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| syntax(lno, "bad input index"))?;
                        RawKind::Input(idx)
                    }
                    "const" => {
                        let body = line
                            .split_once("const")
                            .map(|(_, r)| r.trim())
                            .unwrap_or_default();
                        let (l, u) = parse_pair(body, alg, lno)?;
                        RawKind::Const(l, u)
                    }
                    op => {
                        let (idx, bop) = alg.op(op).ok_or_else(|| Error::UnknownOp(op.into()))?;
                        let children = toks[3..].to_vec();
                        if children.len() != bop.arity {
                            return Err(Error::ArityMismatch {
                                what: format!("gate `{gname}` ({op})"),
                                expected: bop.arity,
                                found: children.len(),
                            });
                        }
                        RawKind::Op(idx, children)
                    }
                };
                raw.push(RawGate {
                    line: lno,
                    name: gname,
                    kind,
                });
            }
        }
    }
    let n = n.ok_or_else(|| syntax(1, "missing `circuit <name> vars <n>` header"))?;
    let (o1, o2) = outputs.ok_or_else(|| syntax(0, "missing `outputs` line"))?;
    let mut by_name: HashMap<&str, usize> = HashMap::new();
    for (i, g) in raw.iter().enumerate() {
        if by_name.insert(g.name, i).is_some() {
            return Err(syntax(g.line, format!("gate `{}` defined twice", g.name)));
        }
        if let RawKind::Input(idx) = g.kind {
            if idx == 0 || idx > n {
                return Err(Error::InputRange { index: idx, n });
            }
        }
    }
    let lookup = |s: &str| {
        by_name
            .get(s)
            .copied()
            .ok_or_else(|| Error::DanglingRef(s.into()))
    };
    let mut deps: Vec<Vec<usize>> = Vec::with_capacity(raw.len());
    for g in &raw {
        deps.push(match &g.kind {
            RawKind::Op(_, ch) => ch.iter().map(|c| lookup(c)).collect::<Result<_>>()?,
            _ => vec![],
        });
    }
    let (r1, r2) = (lookup(o1)?, lookup(o2)?);

    // iterative DFS topological sort with cycle detection
    let mut state = vec![0u8; raw.len()];
    let mut order: Vec<usize> = Vec::with_capacity(raw.len());
    for root in 0..raw.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < deps[v].len() {
                let c = deps[v][*next];
                *next += 1;
                match state[c] {
                    0 => {
                        state[c] = 1;
                        stack.push((c, 0));
                    }
                    1 => return Err(Error::Cycle(raw[c].name.into())),
                    _ => {}
                }
            } else {
                state[v] = 2;
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut pos = vec![0usize; raw.len()];
    for (i, &r) in order.iter().enumerate() {
        pos[r] = i;
    }
    let mut gates = Vec::with_capacity(raw.len());
    let mut names = Vec::with_capacity(raw.len());
    for &r in &order {
        let g = &raw[r];
        gates.push(match &g.kind {
            RawKind::Input(i) => Gate::Input(*i),
            RawKind::Const(l, u) => Gate::Const(l.clone(), u.clone()),
            RawKind::Op(op, _) => Gate::Op(*op, deps[r].iter().map(|&c| pos[c]).collect()),
        });
        names.push(g.name.to_string());
    }
    Ok(Circuit {
        name,
        algebra,
        n,
        gates,
        names,
        outputs: (pos[r1], pos[r2]),
    })
}

impl Circuit {
    /// Builds a circuit from already ordered gates; names are `g<i>`.
    pub fn from_gates(
        algebra: Arc<AlgebraSpec>,
        n: usize,
        gates: Vec<Gate>,
        outputs: (usize, usize),
    ) -> Self {
        let names = (1..=gates.len()).map(|i| format!("g{i}")).collect();
        Circuit {
            name: "C".into(),
            algebra,
            n,
            gates,
            names,
            outputs,
        }
    }

    pub fn op_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Op(..)))
            .count()
    }

    /// The same gates with the outputs replaced.
    pub fn with_outputs(&self, a: usize, b: usize) -> Circuit {
        let mut c = self.clone();
        c.outputs = (a, b);
        c
    }

    /// Serializes in the text format accepted by [`parse_circuit`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "circuit {} over {} vars {}",
            self.name, self.algebra.name, self.n
        );
        for (g, name) in self.gates.iter().zip(&self.names) {
            match g {
                Gate::Input(i) => {
                    let _ = writeln!(out, "{name} = input {i}");
                }
                Gate::Const(l, u) => {
                    let _ = writeln!(
                        out,
                        "{name} = const {}",
                        format_pair(&(l.clone(), u.clone()))
                    );
                }
                Gate::Op(op, ch) => {
                    let _ = write!(out, "{name} = {}", self.algebra.ops[*op].name);
                    for c in ch {
                        let _ = write!(out, " {}", self.names[*c]);
                    }
                    out.push('\n');
                }
            }
        }
        let _ = writeln!(
            out,
            "outputs {} {}",
            self.names[self.outputs.0], self.names[self.outputs.1]
        );
        out
    }

    /// Number of uses of each gate by op gates, plus one per output slot.
    pub fn use_counts(&self) -> Vec<usize> {
        let mut uses = vec![0usize; self.gates.len()];
        for g in &self.gates {
            if let Gate::Op(_, ch) = g {
                for &c in ch {
                    uses[c] += 1;
                }
            }
        }
        uses[self.outputs.0] += 1;
        uses[self.outputs.1] += 1;
        uses
    }

    /// Marks gates that some output depends on.
    pub fn reachable(&self, roots: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.gates.len()];
        for &r in roots {
            seen[r] = true;
        }
        for i in (0..self.gates.len()).rev() {
            if seen[i] {
                if let Gate::Op(_, ch) = &self.gates[i] {
                    for &c in ch {
                        seen[c] = true;
                    }
                }
            }
        }
        seen
    }
}

pub type Value = (LElement, UElement);

/// Values of every gate under an assignment.
pub fn eval_all(c: &Circuit, assignment: &[Value]) -> Result<Vec<Value>> {
    if assignment.len() != c.n {
        return Err(Error::ArityMismatch {
            what: format!("assignment for `{}`", c.name),
            expected: c.n,
            found: assignment.len(),
        });
    }
    let alg = &*c.algebra;
    let mut vals: Vec<Value> = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        let v = match g {
            Gate::Input(i) => assignment[i - 1].clone(),
            Gate::Const(l, u) => (l.clone(), u.clone()),
            Gate::Op(op, ch) => {
                let args: Vec<Value> = ch.iter().map(|&k| vals[k].clone()).collect();
                eval_basic_op(alg, &alg.ops[*op], &args)?
            }
        };
        vals.push(v);
    }
    Ok(vals)
}

/// Values of both outputs under an assignment.
pub fn eval_circuit(c: &Circuit, assignment: &[Value]) -> Result<(Value, Value)> {
    let vals = eval_all(c, assignment)?;
    Ok((vals[c.outputs.0].clone(), vals[c.outputs.1].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::group::Element;

    fn a1() -> Arc<AlgebraSpec> {
        Arc::new(corpus::a1())
    }

    fn pair(l: u64, u: u64) -> Value {
        (Element(vec![l]), Element(vec![u]))
    }

    #[test]
    fn parses_two_gate_file() {
        let c = parse_circuit(
            "circuit T over A1 vars 1\ng1 = input 1\ng2 = f g1 g1\noutputs g2 g1\n",
            a1(),
        )
        .unwrap();
        assert_eq!(c.n, 1);
        assert_eq!(c.gates.len(), 2);
        assert_eq!(c.outputs, (1, 0));
    }

    #[test]
    fn out_of_order_definitions_are_sorted() {
        let c = parse_circuit(
            "circuit T vars 2\ng3 = f g1 g2\ng2 = input 2\ng1 = input 1\noutputs g3 g1\n",
            a1(),
        )
        .unwrap();
        assert!(matches!(c.gates[c.outputs.0], Gate::Op(..)));
        let back = parse_circuit(&c.to_text(), a1()).unwrap();
        assert_eq!(back.gates, c.gates);
    }

    #[test]
    fn parse_errors() {
        let hdr = "circuit T vars 1\ng1 = input 1\n";
        assert_eq!(
            parse_circuit(&format!("{hdr}g2 = k g1\noutputs g2 g1\n"), a1()).unwrap_err(),
            Error::UnknownOp("k".into())
        );
        assert_eq!(
            parse_circuit(&format!("{hdr}outputs g9 g1\n"), a1()).unwrap_err(),
            Error::DanglingRef("g9".into())
        );
        assert!(matches!(
            parse_circuit(&format!("{hdr}g2 = f g1\noutputs g2 g1\n"), a1()),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            parse_circuit(
                "circuit T vars 1\ng1 = f g2 g1\ng2 = f g1 g1\noutputs g1 g2\n",
                a1()
            ),
            Err(Error::Cycle(_))
        ));
        assert!(matches!(
            parse_circuit(
                &format!("{hdr}g2 = const ((1,1)|(0))\noutputs g2 g1\n"),
                a1()
            ),
            Err(Error::BadConstant(_))
        ));
        assert_eq!(
            parse_circuit("circuit T vars 1\ng1 = input 2\noutputs g1 g1\n", a1()).unwrap_err(),
            Error::InputRange { index: 2, n: 1 }
        );
    }

    #[test]
    fn eval_examples() {
        let c = parse_circuit(
            "circuit T vars 1\ng1 = input 1\ng2 = f g1 g1\noutputs g2 g1\n",
            a1(),
        )
        .unwrap();
        assert_eq!(
            eval_circuit(&c, &[pair(0, 0)]).unwrap(),
            (pair(0, 0), pair(0, 0))
        );
        assert_eq!(
            eval_circuit(&c, &[pair(1, 1)]).unwrap(),
            (pair(0, 0), pair(1, 1))
        );
        assert_eq!(
            eval_circuit(&c, &[pair(2, 0)]).unwrap(),
            (pair(1, 0), pair(2, 0))
        );
    }
}
