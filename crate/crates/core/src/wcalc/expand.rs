// SPDX-License-Identifier: Apache-2.0

//! Expansion of arbitrary tables `U^k → L` into w-terms, for `gcd(|U|,|L|) = 1`.
//!
//! The multi-indicator `s(x) = [x = 0]` is rewritten block by block. Each block
//! carries a list of affine forms whose joint vanishing is the condition; two
//! forms are merged into one by a counting identity until at most one is left.

use num_integer::Integer;

use super::{AffineTerm, Domain, FormBuilder, HatForm, WTerm};
use crate::error::{Error, Result};
use crate::group::{inverse_scalar, valuation, Element, GroupShape, LElement, Scalar};

#[derive(Clone, Debug)]
struct Form {
    coeffs: Vec<u64>,
    c: u64,
}

#[derive(Clone, Debug)]
struct Pending {
    coeff: Scalar,
    blocks: Vec<Vec<Form>>,
}

/// Residual table `ρ(u, v)` for one `(p, e)` with `e ≥ 2`, indexed `u·p^{e-1} + v`.
fn residual_table(p: u64, e: u32) -> Vec<i64> {
    let pe = p.pow(e);
    let h = p.pow(e - 1);
    let count = |a: u64, b: u64| -> i64 {
        let first = (0..pe).filter(|t| (a + t * b).is_multiple_of(pe)).count();
        let second = (0..h)
            .filter(|t| (p * t * a + b).is_multiple_of(pe))
            .count();
        (first + second) as i64
    };
    let mut out = Vec::with_capacity((h * h) as usize);
    for u in 0..h {
        for v in 0..h {
            let mut r = count(u, v);
            if u == 0 && v == 0 {
                r -= pe as i64;
            }
            out.push(r);
        }
    }
    out
}

fn form_level(f: &Form, p: u64, k: u32) -> u32 {
    let v = f
        .coeffs
        .iter()
        .chain(std::iter::once(&f.c))
        .map(|&x| valuation(x, p, k))
        .min()
        .unwrap_or(k);
    k - v
}

fn combine(a: &Form, ta: u64, b: &Form, tb: u64, extra: u64, m: u64) -> Form {
    Form {
        coeffs: a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| (ta * x + tb * y) % m)
            .collect(),
        c: (ta * a.c + tb * b.c + extra) % m,
    }
}

struct Expander<'a> {
    u: &'a GroupShape,
    l: &'a GroupShape,
    residuals: std::collections::HashMap<(u64, u32), Vec<i64>>,
}

impl Expander<'_> {
    fn residual(&mut self, p: u64, e: u32) -> &[i64] {
        self.residuals
            .entry((p, e))
            .or_insert_with(|| residual_table(p, e))
    }

    /// Drops vacuous forms; returns false when some form can never vanish.
    fn tidy(&self, pending: &mut Pending) -> bool {
        for (b, forms) in pending.blocks.iter_mut().enumerate() {
            let m = self.u.modulus(b);
            let mut feasible = true;
            forms.retain(|f| {
                let zero_coeffs = f.coeffs.iter().all(|&c| c % m == 0);
                if zero_coeffs && f.c % m != 0 {
                    feasible = false;
                }
                !(zero_coeffs && f.c % m == 0)
            });
            if !feasible {
                return false;
            }
        }
        true
    }

    fn run(&mut self, arity: usize) -> Result<Vec<(Scalar, Vec<Vec<u64>>, Vec<u64>)>> {
        let nb = self.u.len();
        let start = Pending {
            coeff: Scalar::identity(self.l),
            blocks: (0..nb)
                .map(|_| {
                    (0..arity)
                        .map(|j| {
                            let mut coeffs = vec![0; arity];
                            coeffs[j] = 1;
                            Form { coeffs, c: 0 }
                        })
                        .collect()
                })
                .collect(),
        };
        let mut stack = vec![start];
        let mut out = vec![];
        while let Some(mut cur) = stack.pop() {
            if cur.coeff.is_zero() || !self.tidy(&mut cur) {
                continue;
            }
            let Some(b) = cur.blocks.iter().position(|f| f.len() >= 2) else {
                // beta[b][j], shift[b]
                let mut beta = vec![vec![0; arity]; nb];
                let mut shift = vec![0; nb];
                for (b, forms) in cur.blocks.iter().enumerate() {
                    if let Some(f) = forms.first() {
                        beta[b] = f.coeffs.clone();
                        shift[b] = f.c;
                    }
                }
                out.push((cur.coeff, beta, shift));
                continue;
            };
            let blk = self.u.blocks()[b];
            let (p, k, m) = (blk.prime, blk.exp, blk.modulus());
            let bf = cur.blocks[b].pop().unwrap();
            let af = cur.blocks[b].pop().unwrap();
            let e = form_level(&af, p, k).max(form_level(&bf, p, k));
            let g = p.pow(k - e);
            let nu = inverse_scalar(p.pow(e), self.l)?;
            let base = cur.coeff.compose(&nu, self.l);
            let with = |form: Vec<Form>, coeff: Scalar| {
                let mut next = cur.clone();
                next.coeff = coeff;
                next.blocks[b].extend(form);
                next
            };
            if e == 1 {
                for t in 0..p {
                    stack.push(with(vec![combine(&af, 1, &bf, t, 0, m)], base.clone()));
                }
                let neg = base.neg(self.l);
                for t in 1..p {
                    stack.push(with(vec![combine(&bf, 1, &bf, 0, t * g, m)], neg.clone()));
                }
            } else {
                let pe = p.pow(e);
                let h = p.pow(e - 1);
                for t in 0..pe {
                    stack.push(with(vec![combine(&af, 1, &bf, t, 0, m)], base.clone()));
                }
                for t in 0..h {
                    stack.push(with(
                        vec![combine(&af, p * t % m, &bf, 1, 0, m)],
                        base.clone(),
                    ));
                }
                let rho = self.residual(p, e).to_vec();
                for u in 0..h {
                    for v in 0..h {
                        let r = rho[(u * h + v) as usize];
                        if r == 0 {
                            continue;
                        }
                        let coeff = base.compose(&Scalar::from_int(self.l, -r), self.l);
                        let fa = combine(&af, p, &af, 0, (m - p * g * u % m) % m, m);
                        let fb = combine(&bf, p, &bf, 0, (m - p * g * v % m) % m, m);
                        stack.push(with(vec![fa, fb], coeff));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn require_coprime(u: &GroupShape, l: &GroupShape) -> Result<()> {
    if u.order().gcd(&l.order()) != 1 {
        return Err(Error::NotCoprime {
            value: u.order(),
            modulus: l.order(),
        });
    }
    Ok(())
}

fn to_elements(beta: &[Vec<u64>], arity: usize) -> Vec<Element> {
    (0..arity)
        .map(|j| Element(beta.iter().map(|row| row[j]).collect()))
        .collect()
}

/// `[x = 0]` over `U^arity` as a sum of w-terms with value `1` in every `L` block.
pub fn expand_indicator(arity: usize, u: &GroupShape, l: &GroupShape) -> Result<Vec<WTerm>> {
    require_coprime(u, l)?;
    let one = Element(l.moduli().iter().map(|&m| 1 % m).collect());
    let mut ex = Expander {
        u,
        l,
        residuals: Default::default(),
    };
    Ok(ex
        .run(arity)?
        .into_iter()
        .map(|(coeff, beta, shift)| WTerm {
            coeff,
            value: one.clone(),
            beta: to_elements(&beta, arity),
            shift: Element(shift),
        })
        .collect())
}

/// Expands a table (lexicographic over `U^arity`) into w-terms.
pub fn expand_table(
    table: &[LElement],
    arity: usize,
    u: &GroupShape,
    l: &GroupShape,
) -> Result<Vec<WTerm>> {
    require_coprime(u, l)?;
    if let Some(first) = table.first() {
        if table.iter().all(|x| x == first) {
            if first.is_zero() {
                return Ok(vec![]);
            }
            return Ok(vec![WTerm {
                coeff: Scalar::identity(l),
                value: first.clone(),
                beta: vec![u.zero(); arity],
                shift: u.zero(),
            }]);
        }
    }
    let s = expand_indicator(arity, u, l)?;
    let mut args = vec![u.zero(); arity];
    let mut out = vec![];
    for (idx, val) in table.iter().enumerate() {
        if val.is_zero() {
            continue;
        }
        crate::algebra::unpack_args(u, idx, &mut args);
        for t in &s {
            let mut shift = t.shift.clone();
            for (b, a) in t.beta.iter().zip(&args) {
                shift = u.sub_unchecked(&shift, &u.scale_unchecked(&Scalar(b.0.clone()), a));
            }
            out.push(WTerm {
                coeff: t.coeff.clone(),
                value: val.clone(),
                beta: t.beta.clone(),
                shift,
            });
        }
    }
    Ok(out)
}

/// Expands a flat table (`|U|^arity` rows of `L` residues) directly into a
/// normalized form over `arity` variables.
pub fn expand_to_form(
    table: &[u64],
    arity: usize,
    u: &GroupShape,
    l: &GroupShape,
) -> Result<HatForm> {
    require_coprime(u, l)?;
    let lb = l.len();
    let lm = l.moduli();
    let dom = Domain::uniform(u, arity);
    let first = &table[..lb];
    if table.chunks(lb).all(|row| row == first) {
        return Ok(HatForm::constant(u, l, arity, &Element(first.to_vec())));
    }
    let mut ex = Expander {
        u,
        l,
        residuals: Default::default(),
    };
    let s = ex.run(arity)?;
    let order = u.order() as usize;
    let nb = u.len();
    let points = order.pow(arity as u32);
    // U-residues of every argument tuple, computed once
    let mut arg_res = vec![0u64; points * arity * nb];
    let mut args = vec![u.zero(); arity];
    for idx in 0..points {
        crate::algebra::unpack_args(u, idx, &mut args);
        for (j, a) in args.iter().enumerate() {
            arg_res[(idx * arity + j) * nb..(idx * arity + j + 1) * nb].copy_from_slice(&a.0);
        }
    }
    let nonzero: Vec<usize> = (0..points)
        .filter(|&i| table[i * lb..(i + 1) * lb].iter().any(|&x| x != 0))
        .collect();
    let mut builder = FormBuilder::with_capacity(dom.clone(), l.clone(), s.len());
    let mut y = vec![0u64; nb];
    for (coeff, beta, shift) in s {
        let mut mfun = vec![0u64; order * lb];
        for &i in &nonzero {
            for b in 0..nb {
                let m = u.modulus(b);
                let mut acc = m - shift[b] % m;
                for j in 0..arity {
                    acc += beta[b][j] * arg_res[(i * arity + j) * nb + b];
                }
                y[b] = acc % m;
            }
            let yi = u.index_of(&y);
            for c in 0..lb {
                let slot = &mut mfun[yi * lb + c];
                *slot = (*slot + coeff.0[c] * table[i * lb + c]) % lm[c];
            }
        }
        let flat: Vec<u64> = (0..nb).flat_map(|b| beta[b].iter().copied()).collect();
        builder.push_affine(
            &dom,
            &AffineTerm {
                beta: flat,
                shift: vec![0; nb],
                mfun,
            },
        );
    }
    Ok(builder.finish())
}
