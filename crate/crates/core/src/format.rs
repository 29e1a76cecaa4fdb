// SPDX-License-Identifier: Apache-2.0

//! Text formats: algebra files, elements, `(l|u)` pairs and assignments.
//!
//! ```text
//! algebra A1
//! U 2^1
//! L 3^1
//! op f arity 2
//!   lscalars (1) (1)
//!   uscalars (1) (1)
//!   uconst (0)
//!   hattable (0) (0) (0) (1)
//! end
//! weightbound 2 2
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::algebra::{AlgebraSpec, BasicOperation, Hat};
use crate::error::{Error, Result};
use crate::group::{is_prime, Block, Element, GroupShape, LElement, Scalar, UElement};
use crate::wcalc::WTerm;

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Strips `#` comments; yields `(line number, trimmed content)` for non-empty lines.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_int(tok: &str, line: usize) -> Result<i64> {
    tok.trim()
        .parse::<i64>()
        .map_err(|_| syntax(line, format!("expected an integer, found `{tok}`")))
}

/// Parses `(a,b,…)` into raw integers.
pub fn parse_residues(tok: &str, line: usize) -> Result<Vec<i64>> {
    let inner = tok
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| syntax(line, format!("expected `(…)`, found `{tok}`")))?;
    if inner.trim().is_empty() {
        return Ok(vec![]);
    }
    inner.split(',').map(|t| parse_int(t, line)).collect()
}

pub fn parse_element(tok: &str, shape: &GroupShape, line: usize) -> Result<Element> {
    let raw = parse_residues(tok, line)?;
    shape.reduce(&raw).map_err(|_| {
        syntax(
            line,
            format!(
                "`{tok}` has {} residues, expected {}",
                raw.len(),
                shape.len()
            ),
        )
    })
}

pub fn parse_scalar(tok: &str, shape: &GroupShape, line: usize) -> Result<Scalar> {
    parse_element(tok, shape, line).map(|e| Scalar(e.0))
}

fn parse_shape(toks: &[&str], line: usize) -> Result<GroupShape> {
    let mut blocks = vec![];
    for t in toks {
        let (p, k) = match t.split_once('^') {
            Some((p, k)) => (p, k),
            None => (*t, "1"),
        };
        let p = parse_int(p, line)?;
        let k = parse_int(k, line)?;
        if p < 2 || !(1..=32).contains(&k) {
            return Err(syntax(line, format!("bad block `{t}`")));
        }
        let (p, k) = (p as u64, k as u32);
        if !is_prime(p) {
            return Err(Error::NonPrime {
                line,
                base: p,
                exp: k,
            });
        }
        blocks.push(Block { prime: p, exp: k });
    }
    GroupShape::new(blocks)
}

/// Splits on `sep` at parenthesis depth zero.
pub fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = vec![];
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Parses `((l…)|(u…))`.
pub fn parse_pair(tok: &str, alg: &AlgebraSpec, line: usize) -> Result<(LElement, UElement)> {
    let inner = tok
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::BadConstant(format!("expected `((l)|(u))`, found `{tok}`")))?;
    let parts = split_top(inner, '|');
    if parts.len() != 2 {
        return Err(Error::BadConstant(format!(
            "expected `((l)|(u))`, found `{tok}`"
        )));
    }
    let l = parse_element(parts[0], &alg.l, line).map_err(|e| Error::BadConstant(e.to_string()))?;
    let u = parse_element(parts[1], &alg.u, line).map_err(|e| Error::BadConstant(e.to_string()))?;
    Ok((l, u))
}

pub fn format_pair(p: &(LElement, UElement)) -> String {
    format!("({}|{})", p.0, p.1)
}

/// Comma-separated list of `((l)|(u))` pairs, one per circuit input.
pub fn parse_assignment(s: &str, alg: &AlgebraSpec) -> Result<Vec<(LElement, UElement)>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    split_top(s.trim(), ',')
        .into_iter()
        .map(|t| parse_pair(t, alg, 0))
        .collect()
}

pub fn format_assignment(a: &[(LElement, UElement)]) -> String {
    a.iter().map(format_pair).collect::<Vec<_>>().join(",")
}

/// `term mu=(..) l=(..) beta=(..);(..) c=(..)`
pub fn parse_wterm(toks: &[&str], u: &GroupShape, l: &GroupShape, line: usize) -> Result<WTerm> {
    let mut mu = None;
    let mut value = None;
    let mut beta = None;
    let mut shift = None;
    for t in toks {
        let (key, val) = t
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected key=value, found `{t}`")))?;
        match key {
            "mu" => mu = Some(parse_scalar(val, l, line)?),
            "l" => value = Some(parse_element(val, l, line)?),
            "beta" => {
                beta = Some(if val.is_empty() || val == "-" {
                    vec![]
                } else {
                    val.split(';')
                        .map(|b| parse_element(b, u, line))
                        .collect::<Result<Vec<_>>>()?
                })
            }
            "c" => shift = Some(parse_element(val, u, line)?),
            _ => return Err(syntax(line, format!("unknown term field `{key}`"))),
        }
    }
    let missing = |f: &str| syntax(line, format!("term is missing `{f}=`"));
    Ok(WTerm {
        coeff: mu.ok_or_else(|| missing("mu"))?,
        value: value.ok_or_else(|| missing("l"))?,
        beta: beta.ok_or_else(|| missing("beta"))?,
        shift: shift.ok_or_else(|| missing("c"))?,
    })
}

pub fn format_wterm(t: &WTerm) -> String {
    let beta = if t.beta.is_empty() {
        "-".to_string()
    } else {
        t.beta
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    format!(
        "term mu={} l={} beta={} c={}",
        t.coeff, t.value, beta, t.shift
    )
}

#[derive(Default)]
struct OpDraft {
    line: usize,
    name: String,
    arity: usize,
    lscalars: Option<Vec<Scalar>>,
    uscalars: Option<Vec<Scalar>>,
    uconst: Option<UElement>,
    table: Option<Vec<LElement>>,
    wsum: Option<(usize, Vec<WTerm>)>,
    /// Keyword that continuation lines extend.
    last_list: Option<&'static str>,
}

pub fn parse_algebra(text: &str) -> Result<AlgebraSpec> {
    let mut name = None;
    let mut u: Option<GroupShape> = None;
    let mut l: Option<GroupShape> = None;
    let mut ops: Vec<BasicOperation> = vec![];
    let mut weight_bounds = BTreeMap::new();
    let mut draft: Option<OpDraft> = None;

    for (ln, content) in lines(text) {
        let toks: Vec<&str> = content.split_whitespace().collect();
        let head = toks[0];
        if let Some(d) = draft.as_mut() {
            let (us, ls) = match (&u, &l) {
                (Some(us), Some(ls)) => (us, ls),
                _ => unreachable!("op blocks start only after U and L"),
            };
            let list_kw = if head.starts_with('(') {
                d.last_list
                    .ok_or_else(|| syntax(ln, "continuation line outside a list"))?
            } else {
                d.last_list = None;
                ""
            };
            let args = if list_kw.is_empty() {
                &toks[1..]
            } else {
                &toks[..]
            };
            match if list_kw.is_empty() { head } else { list_kw } {
                "lscalars" => {
                    let v = args
                        .iter()
                        .map(|t| parse_scalar(t, ls, ln))
                        .collect::<Result<Vec<_>>>()?;
                    d.lscalars.get_or_insert_with(Vec::new).extend(v);
                    d.last_list = Some("lscalars");
                }
                "uscalars" => {
                    let v = args
                        .iter()
                        .map(|t| parse_scalar(t, us, ln))
                        .collect::<Result<Vec<_>>>()?;
                    d.uscalars.get_or_insert_with(Vec::new).extend(v);
                    d.last_list = Some("uscalars");
                }
                "uconst" => {
                    if args.len() != 1 {
                        return Err(syntax(ln, "uconst takes one element"));
                    }
                    d.uconst = Some(parse_element(args[0], us, ln)?);
                }
                "hattable" => {
                    let v = args
                        .iter()
                        .map(|t| parse_element(t, ls, ln))
                        .collect::<Result<Vec<_>>>()?;
                    d.table.get_or_insert_with(Vec::new).extend(v);
                    d.last_list = Some("hattable");
                }
                "hatwsum" => {
                    if args.len() != 1 {
                        return Err(syntax(ln, "hatwsum takes a term count"));
                    }
                    d.wsum = Some((parse_int(args[0], ln)? as usize, vec![]));
                }
                "term" => {
                    let (_, terms) = d
                        .wsum
                        .as_mut()
                        .ok_or_else(|| syntax(ln, "`term` outside a hatwsum block"))?;
                    terms.push(parse_wterm(args, us, ls, ln)?);
                }
                "end" => {
                    let d = draft.take().unwrap();
                    ops.push(finish_op(d, us, ls)?);
                }
                other => return Err(syntax(ln, format!("unexpected `{other}` inside op"))),
            }
            continue;
        }
        match head {
            "algebra" => {
                if toks.len() != 2 {
                    return Err(syntax(ln, "expected `algebra <name>`"));
                }
                name = Some(toks[1].to_string());
            }
            "U" => u = Some(parse_shape(&toks[1..], ln)?),
            "L" => l = Some(parse_shape(&toks[1..], ln)?),
            "op" => {
                if u.is_none() || l.is_none() {
                    return Err(syntax(ln, "U and L must be declared before operations"));
                }
                if toks.len() != 4 || toks[2] != "arity" {
                    return Err(syntax(ln, "expected `op <name> arity <k>`"));
                }
                let arity = parse_int(toks[3], ln)?;
                if arity < 0 {
                    return Err(syntax(ln, "negative arity"));
                }
                if ops.iter().any(|o| o.name == toks[1]) {
                    return Err(Error::DuplicateOp(toks[1].to_string()));
                }
                draft = Some(OpDraft {
                    line: ln,
                    name: toks[1].to_string(),
                    arity: arity as usize,
                    ..Default::default()
                });
            }
            "weightbound" => {
                if toks.len() != 3 {
                    return Err(syntax(ln, "expected `weightbound <prime> <bound>`"));
                }
                let q = parse_int(toks[1], ln)?;
                let s = parse_int(toks[2], ln)?;
                if q < 2 || !is_prime(q as u64) {
                    return Err(Error::NonPrime {
                        line: ln,
                        base: q.max(0) as u64,
                        exp: 1,
                    });
                }
                if s < 1 {
                    return Err(syntax(ln, "weight bound must be positive"));
                }
                weight_bounds.insert(q as u64, s as u32);
            }
            other => return Err(syntax(ln, format!("unexpected `{other}`"))),
        }
    }
    if let Some(d) = draft {
        return Err(syntax(d.line, format!("op `{}` is missing `end`", d.name)));
    }
    Ok(AlgebraSpec {
        name: name.ok_or_else(|| syntax(1, "missing `algebra <name>`"))?,
        u: u.ok_or_else(|| syntax(1, "missing `U` line"))?,
        l: l.ok_or_else(|| syntax(1, "missing `L` line"))?,
        ops,
        weight_bounds,
    })
}

fn finish_op(d: OpDraft, u: &GroupShape, l: &GroupShape) -> Result<BasicOperation> {
    let missing = |f: &str| syntax(d.line, format!("op `{}` is missing `{f}`", d.name));
    let lscalars = d.lscalars.unwrap_or_default();
    let uscalars = d.uscalars.unwrap_or_default();
    for (what, v) in [("lscalars", &lscalars), ("uscalars", &uscalars)] {
        if v.len() != d.arity {
            return Err(Error::ArityMismatch {
                what: format!("{what} of `{}`", d.name),
                expected: d.arity,
                found: v.len(),
            });
        }
    }
    let uconst = d.uconst.ok_or_else(|| missing("uconst"))?;
    let hat = match (d.table, d.wsum) {
        (Some(t), None) => Hat::Table(t),
        (None, Some((count, terms))) => {
            if count != terms.len() {
                return Err(syntax(
                    d.line,
                    format!("hatwsum declares {count} terms, found {}", terms.len()),
                ));
            }
            Hat::WSum(terms)
        }
        (None, None) => return Err(missing("hattable or hatwsum")),
        (Some(_), Some(_)) => {
            return Err(syntax(d.line, "give either hattable or hatwsum, not both"))
        }
    };
    BasicOperation::new(d.name, lscalars, uscalars, uconst, hat, u, l)
}

fn format_shape(s: &GroupShape) -> String {
    s.blocks()
        .iter()
        .map(|b| format!("{}^{}", b.prime, b.exp))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn serialize_algebra(alg: &AlgebraSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "algebra {}", alg.name);
    let _ = writeln!(out, "U {}", format_shape(&alg.u));
    let _ = writeln!(out, "L {}", format_shape(&alg.l));
    for op in &alg.ops {
        let _ = writeln!(out, "op {} arity {}", op.name, op.arity);
        let join = |v: &[Scalar]| {
            v.iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "  lscalars {}", join(&op.l_scalars));
        let _ = writeln!(out, "  uscalars {}", join(&op.u_scalars));
        let _ = writeln!(out, "  uconst {}", op.u_const);
        match &op.hat {
            Hat::Table(t) => {
                out.push_str("  hattable");
                for (i, e) in t.iter().enumerate() {
                    if i > 0 && i % 16 == 0 {
                        out.push_str("\n   ");
                    }
                    let _ = write!(out, " {e}");
                }
                out.push('\n');
            }
            Hat::WSum(terms) => {
                let _ = writeln!(out, "  hatwsum {}", terms.len());
                for t in terms {
                    let _ = writeln!(out, "    {}", format_wterm(t));
                }
            }
        }
        out.push_str("end\n");
    }
    for (q, s) in &alg.weight_bounds {
        let _ = writeln!(out, "weightbound {q} {s}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    const A1: &str = "algebra A1\nU 2^1\nL 3^1\nop f arity 2\n  lscalars (1) (1)\n  uscalars (1) (1)\n  uconst (0)\n  hattable (0) (0) (0) (1)   # lexicographic\nend\n";

    #[test]
    fn parses_minimal_algebra() {
        let a = parse_algebra(A1).unwrap();
        assert_eq!(a.u.order(), 2);
        assert_eq!(a.l.order(), 3);
        assert_eq!(a.ops.len(), 1);
        assert_eq!(a.ops[0].arity, 2);
    }

    #[test]
    fn table_size_error() {
        let bad = A1.replace("(0) (0) (0) (1)", "(0) (0) (1)");
        assert_eq!(
            parse_algebra(&bad),
            Err(Error::TableSize {
                op: "f".into(),
                expected: 4,
                found: 3
            })
        );
    }

    #[test]
    fn non_prime_error() {
        let bad = A1.replace("U 2^1", "U 4^1");
        assert!(matches!(
            parse_algebra(&bad),
            Err(Error::NonPrime {
                line: 2,
                base: 4,
                ..
            })
        ));
    }

    #[test]
    fn duplicate_op_error() {
        let twice = format!("{A1}{}", &A1[A1.find("op f").unwrap()..]);
        assert_eq!(parse_algebra(&twice), Err(Error::DuplicateOp("f".into())));
    }

    #[test]
    fn syntax_error_has_line() {
        let bad = A1.replace("uconst (0)", "uconst (0,1)");
        assert!(matches!(
            parse_algebra(&bad),
            Err(Error::Syntax { line: 7, .. })
        ));
        assert!(matches!(
            parse_algebra("algebra X\nU 2\nL 3\nbogus\n"),
            Err(Error::Syntax { line: 4, .. })
        ));
    }

    #[test]
    fn arity_mismatch_error() {
        let bad = A1.replace("lscalars (1) (1)", "lscalars (1)");
        assert!(matches!(
            parse_algebra(&bad),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn residues_are_reduced() {
        let a = parse_algebra(&A1.replace("hattable (0) (0) (0) (1)", "hattable (3) (0) (0) (4)"))
            .unwrap();
        assert_eq!(a.ops[0].hat_table()[0], Element(vec![0]));
        assert_eq!(a.ops[0].hat_table()[3], Element(vec![1]));
    }

    #[test]
    fn trivial_u_is_legal() {
        let a = parse_algebra("algebra T\nU\nL 3\nop c arity 1\n lscalars (2)\n uscalars ()\n uconst ()\n hattable (1)\nend\n").unwrap();
        assert_eq!(a.u.order(), 1);
        assert_eq!(a.ops[0].hat_table().len(), 1);
    }

    #[test]
    fn corpus_roundtrip() {
        for alg in corpus::all() {
            let text = serialize_algebra(&alg);
            assert_eq!(parse_algebra(&text).unwrap(), alg, "{}", alg.name);
        }
    }

    #[test]
    fn pair_and_assignment() {
        let a = corpus::a1();
        let asg = parse_assignment("((1)|(0)),((2)|(1))", &a).unwrap();
        assert_eq!(asg.len(), 2);
        assert_eq!(asg[1], (Element(vec![2]), Element(vec![1])));
        assert_eq!(format_assignment(&asg), "((1)|(0)),((2)|(1))");
        assert!(parse_assignment("((1)(0))", &a).is_err());
    }
}
