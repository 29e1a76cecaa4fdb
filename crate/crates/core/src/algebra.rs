// SPDX-License-Identifier: Apache-2.0

//! 2-nilpotent algebras given as `L ⊗ U`: every basic operation is
//! `f((l_1,u_1),…,(l_k,u_k)) = (Σ λ_i l_i + f̂(u_1,…,u_k), Σ α_i u_i + u_0)`.

use std::collections::BTreeMap;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::group::{Element, GroupShape, LElement, Scalar, UElement};
use crate::wcalc::WTerm;

/// The `U^k → L` part of a basic operation, as written in the algebra file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Hat {
    /// Full table in lexicographic order of the argument tuple.
    Table(Vec<LElement>),
    /// Sum of w-terms.
    WSum(Vec<WTerm>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicOperation {
    pub name: String,
    pub arity: usize,
    pub l_scalars: Vec<Scalar>,
    pub u_scalars: Vec<Scalar>,
    pub u_const: UElement,
    pub hat: Hat,
    /// `hat` evaluated at every point of `U^arity`.
    table: Vec<LElement>,
}

impl BasicOperation {
    pub fn new(
        name: impl Into<String>,
        l_scalars: Vec<Scalar>,
        u_scalars: Vec<Scalar>,
        u_const: UElement,
        hat: Hat,
        u: &GroupShape,
        l: &GroupShape,
    ) -> Result<Self> {
        let name = name.into();
        let arity = l_scalars.len();
        if u_scalars.len() != arity {
            return Err(Error::ArityMismatch {
                what: format!("uscalars of `{name}`"),
                expected: arity,
                found: u_scalars.len(),
            });
        }
        let points = (u.order() as usize).pow(arity as u32);
        let table = match &hat {
            Hat::Table(t) => {
                if t.len() != points {
                    return Err(Error::TableSize {
                        op: name,
                        expected: points,
                        found: t.len(),
                    });
                }
                t.clone()
            }
            Hat::WSum(terms) => {
                for t in terms {
                    if t.beta.len() != arity {
                        return Err(Error::ArityMismatch {
                            what: format!("w-term beta of `{name}`"),
                            expected: arity,
                            found: t.beta.len(),
                        });
                    }
                }
                let mut args = vec![u.zero(); arity];
                (0..points)
                    .map(|idx| {
                        unpack_args(u, idx, &mut args);
                        crate::wcalc::eval_wterms(terms, &args, u, l)
                    })
                    .collect()
            }
        };
        Ok(BasicOperation {
            name,
            arity,
            l_scalars,
            u_scalars,
            u_const,
            hat,
            table,
        })
    }

    pub fn hat_table(&self) -> &[LElement] {
        &self.table
    }

    pub fn hat_at(&self, u: &GroupShape, args: &[UElement]) -> &LElement {
        &self.table[pack_args(u, args)]
    }
}

/// Index of an argument tuple in a hat table.
pub fn pack_args(u: &GroupShape, args: &[UElement]) -> usize {
    let ord = u.order() as usize;
    args.iter().fold(0, |acc, a| acc * ord + u.index(a))
}

pub fn unpack_args(u: &GroupShape, mut idx: usize, out: &mut [UElement]) {
    let ord = u.order() as usize;
    for slot in out.iter_mut().rev() {
        *slot = u.element_at(idx % ord);
        idx /= ord;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraSpec {
    pub name: String,
    pub u: GroupShape,
    pub l: GroupShape,
    pub ops: Vec<BasicOperation>,
    /// Hamming-weight bound per prime shared by `|U|` and `|L|`.
    pub weight_bounds: BTreeMap<u64, u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Auto,
    Coprime,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolvedMode {
    Coprime,
    General,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Mode::Auto),
            "coprime" => Ok(Mode::Coprime),
            "general" => Ok(Mode::General),
            _ => Err(format!("unknown mode `{s}` (auto|coprime|general)")),
        }
    }
}

impl AlgebraSpec {
    pub fn op(&self, name: &str) -> Option<(usize, &BasicOperation)> {
        self.ops.iter().enumerate().find(|(_, o)| o.name == name)
    }

    pub fn is_coprime(&self) -> bool {
        self.u.order().gcd(&self.l.order()) == 1
    }

    /// Primes dividing both `|U|` and `|L|`.
    pub fn shared_primes(&self) -> Vec<u64> {
        let up = self.u.primes();
        self.l
            .primes()
            .into_iter()
            .filter(|q| up.contains(q))
            .collect()
    }

    /// Number of elements of `L × U`.
    pub fn order(&self) -> u64 {
        self.u.order() * self.l.order()
    }

    pub fn zero(&self) -> (LElement, UElement) {
        (self.l.zero(), self.u.zero())
    }
}

/// Applies a basic operation to `(L, U)` pairs.
pub fn eval_basic_op(
    alg: &AlgebraSpec,
    op: &BasicOperation,
    args: &[(LElement, UElement)],
) -> Result<(LElement, UElement)> {
    if args.len() != op.arity {
        return Err(Error::ArityMismatch {
            what: format!("operation `{}`", op.name),
            expected: op.arity,
            found: args.len(),
        });
    }
    let us: Vec<UElement> = args.iter().map(|(_, u)| u.clone()).collect();
    let mut l_out = op.hat_at(&alg.u, &us).clone();
    let mut u_out = op.u_const.clone();
    for ((l, u), (ls, us)) in args.iter().zip(op.l_scalars.iter().zip(&op.u_scalars)) {
        l_out = alg.l.add(&l_out, &alg.l.scale(ls, l)?)?;
        u_out = alg.u.add(&u_out, &alg.u.scale(us, u)?)?;
    }
    Ok((l_out, u_out))
}

pub fn validate_mode(alg: &AlgebraSpec, mode: Mode) -> Result<ResolvedMode> {
    let resolved = match mode {
        Mode::Auto if alg.is_coprime() => ResolvedMode::Coprime,
        Mode::Auto | Mode::General => ResolvedMode::General,
        Mode::Coprime => {
            if !alg.is_coprime() {
                return Err(Error::NotCoprime {
                    value: alg.u.order(),
                    modulus: alg.l.order(),
                });
            }
            ResolvedMode::Coprime
        }
    };
    if resolved == ResolvedMode::General {
        if let Some(q) = alg
            .shared_primes()
            .into_iter()
            .find(|q| !alg.weight_bounds.contains_key(q))
        {
            return Err(Error::MissingWeightBound(q));
        }
    }
    Ok(resolved)
}

/// Convenience for tests and generators: the all-zero `(L, U)` pair list.
pub fn zero_assignment(alg: &AlgebraSpec, n: usize) -> Vec<(LElement, UElement)> {
    vec![alg.zero(); n]
}

impl From<Vec<u64>> for Element {
    fn from(v: Vec<u64>) -> Self {
        Element(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn e(v: &[u64]) -> Element {
        Element(v.to_vec())
    }

    #[test]
    fn a1_eval_examples() {
        let alg = corpus::a1();
        let (_, f) = alg.op("f").unwrap();
        let z = (e(&[0]), e(&[0]));
        assert_eq!(eval_basic_op(&alg, f, &[z.clone(), z.clone()]).unwrap(), z);
        assert_eq!(
            eval_basic_op(&alg, f, &[(e(&[1]), e(&[1])), (e(&[2]), e(&[1]))]).unwrap(),
            (e(&[1]), e(&[0]))
        );
        assert_eq!(
            eval_basic_op(&alg, f, &[(e(&[1]), e(&[0])), (e(&[0]), e(&[1]))]).unwrap(),
            (e(&[1]), e(&[1]))
        );
        assert!(matches!(
            eval_basic_op(&alg, f, &[z]),
            Err(Error::ArityMismatch { .. })
        ));
    }

    /// Direct reading of the defining formula against `eval_basic_op`,
    /// over every argument tuple of every corpus operation.
    #[test]
    fn eval_matches_formula_exhaustively() {
        for alg in corpus::all() {
            let pairs: Vec<(LElement, UElement)> = alg
                .l
                .elements()
                .flat_map(|l| alg.u.elements().map(move |u| (l.clone(), u)))
                .collect();
            for op in &alg.ops {
                let total = pairs.len().pow(op.arity as u32);
                if total > 4096 {
                    continue;
                }
                for idx in 0..total {
                    let mut rest = idx;
                    let mut args = vec![];
                    for _ in 0..op.arity {
                        args.push(pairs[rest % pairs.len()].clone());
                        rest /= pairs.len();
                    }
                    let (lo, uo) = eval_basic_op(&alg, op, &args).unwrap();
                    // independent recomputation with plain integers
                    let mut lv: Vec<u64> = vec![0; alg.l.len()];
                    let mut uv: Vec<u64> = op.u_const.0.clone();
                    for (i, (l, u)) in args.iter().enumerate() {
                        for b in 0..alg.l.len() {
                            lv[b] += op.l_scalars[i].0[b] * l.0[b];
                        }
                        for b in 0..alg.u.len() {
                            uv[b] += op.u_scalars[i].0[b] * u.0[b];
                        }
                    }
                    let mut tidx = 0usize;
                    for (_, u) in &args {
                        let mut ui = 0usize;
                        for b in 0..alg.u.len() {
                            ui = ui * alg.u.modulus(b) as usize + u.0[b] as usize;
                        }
                        tidx = tidx * alg.u.order() as usize + ui;
                    }
                    for b in 0..alg.l.len() {
                        lv[b] = (lv[b] + op.hat_table()[tidx].0[b]) % alg.l.modulus(b);
                    }
                    for b in 0..alg.u.len() {
                        uv[b] %= alg.u.modulus(b);
                    }
                    assert_eq!((lo.0, uo.0), (lv, uv), "{} {}", alg.name, op.name);
                }
            }
        }
    }

    #[test]
    fn mode_resolution() {
        let a1 = corpus::a1();
        assert_eq!(
            validate_mode(&a1, Mode::Auto).unwrap(),
            ResolvedMode::Coprime
        );
        let mut g = corpus::z6_z2();
        assert_eq!(g.u.order(), 6);
        assert_eq!(
            validate_mode(&g, Mode::Auto).unwrap(),
            ResolvedMode::General
        );
        assert!(matches!(
            validate_mode(&g, Mode::Coprime),
            Err(Error::NotCoprime { .. })
        ));
        g.weight_bounds.clear();
        assert_eq!(
            validate_mode(&g, Mode::Auto),
            Err(Error::MissingWeightBound(2))
        );
    }
}
