// SPDX-License-Identifier: Apache-2.0

//! Sums of w-indicator terms and their normalized form.
//!
//! A [`HatForm`] represents a map `U^n → L` as `const + Σ m_j(β_j ⊙ x)` where
//! every `β_j` is nondegenerate (in each block some coefficient is a unit)
//! and each `m_j: U → L` is a dense table. During the constancy recursion the
//! number of variables may differ between blocks and block exponents shrink,
//! so variables are laid out per block (see [`Domain`]).

mod expand;

use std::collections::HashMap;
use std::fmt;

pub use expand::{expand_indicator, expand_table, expand_to_form};

use crate::group::{valuation, Block, Element, GroupShape, LElement, Scalar, UElement};

/// Current `U` together with the number of variables living in each block.
/// Variable values are stored flat, block-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Domain {
    shape: GroupShape,
    vars: Vec<usize>,
    offsets: Vec<usize>,
}

impl Domain {
    pub fn new(shape: GroupShape, vars: Vec<usize>) -> Self {
        assert_eq!(shape.len(), vars.len());
        let mut offsets = Vec::with_capacity(vars.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for v in &vars {
            acc += v;
            offsets.push(acc);
        }
        Domain {
            shape,
            vars,
            offsets,
        }
    }

    /// `n` variables, each carrying one residue per block.
    pub fn uniform(shape: &GroupShape, n: usize) -> Self {
        Self::new(shape.clone(), vec![n; shape.len()])
    }

    pub fn shape(&self) -> &GroupShape {
        &self.shape
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn total_vars(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    pub fn is_live(&self, block: usize) -> bool {
        self.shape.blocks()[block].exp > 0 && self.vars[block] > 0
    }

    pub fn exponents(&self) -> Vec<u32> {
        self.shape.blocks().iter().map(|b| b.exp).collect()
    }

    /// Flattens `n` U-elements (one per variable) into a point of a uniform domain.
    pub fn point(&self, xs: &[UElement]) -> Vec<u64> {
        let mut out = vec![0; self.total_vars()];
        for b in 0..self.shape.len() {
            for (j, x) in xs.iter().enumerate().take(self.vars[b]) {
                out[self.offsets[b] + j] = x.0[b];
            }
        }
        out
    }

    /// Inverse of [`Domain::point`] for uniform domains.
    pub fn unflatten(&self, point: &[u64], n: usize) -> Vec<UElement> {
        (0..n)
            .map(|j| {
                Element(
                    (0..self.shape.len())
                        .map(|b| {
                            if j < self.vars[b] {
                                point[self.offsets[b] + j]
                            } else {
                                0
                            }
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// Number of points of the variable space, saturating.
    pub fn point_count(&self) -> u128 {
        let mut total: u128 = 1;
        for (b, &v) in self.vars.iter().enumerate() {
            let m = self.shape.modulus(b) as u128;
            for _ in 0..v {
                total = total.saturating_mul(m);
            }
        }
        total
    }

    /// Steps `point` to the next point in lexicographic order; false after the last one.
    pub fn next_point(&self, point: &mut [u64]) -> bool {
        for b in (0..self.shape.len()).rev() {
            let m = self.shape.modulus(b);
            for slot in self.range(b).rev() {
                point[slot] += 1;
                if point[slot] < m {
                    return true;
                }
                point[slot] = 0;
            }
        }
        false
    }

    /// `β ⊙ x` as an index into tables over the current `U`.
    #[inline]
    pub fn dot_index(&self, beta: &[u64], point: &[u64]) -> usize {
        let mut idx = 0u64;
        for (b, &m) in self.shape.moduli().iter().enumerate() {
            let r = self.range(b);
            let mut acc = 0u64;
            for (c, x) in beta[r.clone()].iter().zip(&point[r]) {
                acc = (acc + c * x) % m;
            }
            idx = idx * m + acc;
        }
        idx as usize
    }
}

/// One normalized term `m(β ⊙ x)`; `mfun` is flat, `|U|` rows of `L`-residues.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MTerm {
    pub beta: Vec<u64>,
    pub mfun: Vec<u64>,
}

/// Unnormalized term `m(β ⊙ x + shift)`; `shift` has one residue per block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineTerm {
    pub beta: Vec<u64>,
    pub shift: Vec<u64>,
    pub mfun: Vec<u64>,
}

/// A sum of affine terms over a domain; the input of [`normalize_affine`].
#[derive(Clone, Debug)]
pub struct AffineSum {
    pub dom: Domain,
    pub l: GroupShape,
    pub terms: Vec<AffineTerm>,
    pub const_l: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HatForm {
    pub dom: Domain,
    pub l: GroupShape,
    pub terms: Vec<MTerm>,
    pub const_l: Vec<u64>,
}

/// `μ · w^l(β ⊙ x + c)`; `beta` holds one U-element per variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WTerm {
    pub coeff: Scalar,
    pub value: LElement,
    pub beta: Vec<UElement>,
    pub shift: UElement,
}

/// `w^a(x)`: `a` when every listed component is zero, otherwise zero.
pub fn w_eval(a: &LElement, components: &[u64]) -> LElement {
    if components.iter().all(|&x| x == 0) {
        a.clone()
    } else {
        Element(vec![0; a.0.len()])
    }
}

/// Evaluates `Σ μ·w^l(β ⊙ args + c)` directly.
pub fn eval_wterms(terms: &[WTerm], args: &[UElement], u: &GroupShape, l: &GroupShape) -> LElement {
    let mut acc = l.zero();
    for t in terms {
        let mut z = t.shift.clone();
        for (b, x) in t.beta.iter().zip(args) {
            z = u.add_unchecked(&z, &u.scale_unchecked(&Scalar(b.0.clone()), x));
        }
        let w = w_eval(&t.value, &z.0);
        acc = l.add_unchecked(&acc, &l.scale_unchecked(&t.coeff, &w));
    }
    acc
}

#[inline]
pub(crate) fn l_add_into(dst: &mut [u64], src: &[u64], lmods: &[u64]) {
    let lb = lmods.len();
    for (i, (d, s)) in dst.iter_mut().zip(src).enumerate() {
        *d = (*d + s) % lmods[i % lb];
    }
}

pub(crate) fn l_scale_table(table: &mut [u64], s: &Scalar, lmods: &[u64]) {
    let lb = lmods.len();
    for (i, x) in table.iter_mut().enumerate() {
        *x = *x * s.0[i % lb] % lmods[i % lb];
    }
}

pub(crate) fn l_neg_table(table: &mut [u64], lmods: &[u64]) {
    let lb = lmods.len();
    for (i, x) in table.iter_mut().enumerate() {
        let m = lmods[i % lb];
        *x = (m - *x) % m;
    }
}

/// Accumulates terms over a fixed target domain, merging equal `β`.
pub(crate) struct FormBuilder {
    dom: Domain,
    l: GroupShape,
    index: HashMap<Vec<u64>, usize>,
    terms: Vec<MTerm>,
    const_l: Vec<u64>,
}

impl FormBuilder {
    pub fn new(dom: Domain, l: GroupShape) -> Self {
        let const_l = vec![0; l.len()];
        FormBuilder {
            dom,
            l,
            index: HashMap::new(),
            terms: vec![],
            const_l,
        }
    }

    pub fn with_capacity(dom: Domain, l: GroupShape, cap: usize) -> Self {
        let mut b = Self::new(dom, l);
        b.index.reserve(cap);
        b.terms.reserve(cap);
        b
    }

    pub fn add_const(&mut self, c: &[u64]) {
        l_add_into(&mut self.const_l, c, self.l.moduli());
    }

    /// Adds a term that is already nondegenerate over the target domain.
    pub fn push_normalized(&mut self, term: MTerm) {
        match self.index.get(&term.beta) {
            Some(&i) => l_add_into(&mut self.terms[i].mfun, &term.mfun, self.l.moduli()),
            None => {
                self.index.insert(term.beta.clone(), self.terms.len());
                self.terms.push(term);
            }
        }
    }

    /// Normalizes `m(β ⊙ x + shift)` where `β`, `shift` and `m` live on `src`,
    /// a domain whose blocks agree with the target except that target blocks
    /// may be collapsed (exponent zero, no variables).
    pub fn push_affine(&mut self, src: &Domain, t: &AffineTerm) {
        let ones = vec![1u64; src.shape.len()];
        self.push_affine_parts(src, &src.shape.clone(), &ones, &t.beta, &t.shift, &t.mfun);
    }

    /// General form of [`FormBuilder::push_affine`]: `beta` is laid out by
    /// `layout` (same exponents as the target, before collapsing), while `m`
    /// is a table over `mfun_shape` and block `b` of its argument is
    /// `scale[b]·(β ⊙ x)_b + shift_b`.
    pub fn push_affine_parts(
        &mut self,
        layout: &Domain,
        mfun_shape: &GroupShape,
        scale: &[u64],
        beta: &[u64],
        shift: &[u64],
        table: &[u64],
    ) {
        let tgt = &self.dom;
        let nb = tgt.shape.len();
        let mut d = vec![0u64; nb];
        let mut new_beta = vec![0u64; tgt.total_vars()];
        let mut any_live = false;
        for b in 0..nb {
            if !tgt.is_live(b) {
                continue;
            }
            let Block { prime, exp } = tgt.shape.blocks()[b];
            let coeffs = &beta[layout.range(b)];
            let out = &mut new_beta[tgt.range(b)];
            let v = coeffs
                .iter()
                .map(|&c| valuation(c, prime, exp))
                .min()
                .unwrap_or(exp);
            if v == exp {
                // the block's linear form vanishes; any nondegenerate β' works with d = 0
                out[0] = 1;
                d[b] = 0;
            } else {
                let pv = prime.pow(v);
                for (o, &c) in out.iter_mut().zip(coeffs) {
                    *o = c / pv;
                }
                d[b] = pv;
                any_live = true;
            }
        }
        let lb = self.l.len();
        let smods = mfun_shape.moduli();
        if !any_live {
            let z: Vec<u64> = (0..nb).map(|b| shift[b] % smods[b]).collect();
            let idx = mfun_shape.index_of(&z);
            let row = table[idx * lb..(idx + 1) * lb].to_vec();
            self.add_const(&row);
            return;
        }
        let order = tgt.shape.order() as usize;
        let mut mfun = vec![0u64; order * lb];
        let mut u = vec![0u64; nb];
        let mut z = vec![0u64; nb];
        for (i, row) in mfun.chunks_mut(lb).enumerate() {
            let mut rest = i;
            for b in (0..nb).rev() {
                let m = tgt.shape.modulus(b) as usize;
                u[b] = (rest % m) as u64;
                rest /= m;
            }
            for b in 0..nb {
                z[b] = (scale[b] * d[b] * u[b] + shift[b]) % smods[b];
            }
            let si = mfun_shape.index_of(&z);
            row.copy_from_slice(&table[si * lb..(si + 1) * lb]);
        }
        self.push_normalized(MTerm {
            beta: new_beta,
            mfun,
        });
    }

    /// Folds constant tables into the constant, drops zero terms, sorts by `β`.
    pub fn finish(mut self) -> HatForm {
        let lb = self.l.len();
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            let first = &t.mfun[..lb];
            if t.mfun.chunks(lb).all(|row| row == first) {
                l_add_into(&mut self.const_l, first, self.l.moduli());
            } else {
                terms.push(t);
            }
        }
        terms.sort_unstable_by(|a, b| a.beta.cmp(&b.beta));
        HatForm {
            dom: self.dom,
            l: self.l,
            terms,
            const_l: self.const_l,
        }
    }
}

/// Collapses live-exponent blocks that have no variables left.
pub(crate) fn collapsed(dom: &Domain) -> Domain {
    let blocks: Vec<Block> = dom
        .shape
        .blocks()
        .iter()
        .zip(&dom.vars)
        .map(|(b, &v)| Block {
            prime: b.prime,
            exp: if v == 0 { 0 } else { b.exp },
        })
        .collect();
    let vars = blocks
        .iter()
        .zip(&dom.vars)
        .map(|(b, &v)| if b.exp == 0 { 0 } else { v })
        .collect();
    Domain::new(GroupShape::from_blocks(blocks), vars)
}

/// Normalizes a sum of affine terms: factors degenerate `β = d·β'`, absorbs
/// shifts into the tables, folds constant terms, merges equal `β'`.
pub fn normalize_affine(sum: &AffineSum) -> HatForm {
    let tgt = collapsed(&sum.dom);
    let mut builder = FormBuilder::with_capacity(tgt, sum.l.clone(), sum.terms.len());
    builder.add_const(&sum.const_l);
    for t in &sum.terms {
        builder.push_affine(&sum.dom, t);
    }
    builder.finish()
}

/// Normalizes w-terms over `n` variables into a [`HatForm`].
pub fn normalize(terms: &[WTerm], n: usize, u: &GroupShape, l: &GroupShape) -> HatForm {
    let dom = Domain::uniform(u, n);
    let lb = l.len();
    let order = u.order() as usize;
    let affine = terms
        .iter()
        .map(|t| {
            let mut mfun = vec![0u64; order * lb];
            let w = l.scale_unchecked(&t.coeff, &t.value);
            mfun[..lb].copy_from_slice(&w.0);
            AffineTerm {
                beta: dom.point(&t.beta),
                shift: t.shift.0.clone(),
                mfun,
            }
        })
        .collect();
    normalize_affine(&AffineSum {
        dom,
        l: l.clone(),
        terms: affine,
        const_l: vec![0; lb],
    })
}

impl AffineSum {
    pub fn eval(&self, point: &[u64]) -> Vec<u64> {
        let lb = self.l.len();
        let mut acc = self.const_l.clone();
        let moduli = self.dom.shape.moduli();
        for t in &self.terms {
            let mut idx = 0u64;
            for (b, &m) in moduli.iter().enumerate() {
                let r = self.dom.range(b);
                let mut z = t.shift[b];
                for (c, x) in t.beta[r.clone()].iter().zip(&point[r]) {
                    z = (z + c * x) % m;
                }
                idx = idx * m + z;
            }
            let i = idx as usize;
            l_add_into(&mut acc, &t.mfun[i * lb..(i + 1) * lb], self.l.moduli());
        }
        acc
    }

    pub fn normalize(&self) -> HatForm {
        normalize_affine(self)
    }
}

impl HatForm {
    /// The zero map over `n` variables.
    pub fn zero(u: &GroupShape, l: &GroupShape, n: usize) -> Self {
        HatForm {
            dom: Domain::uniform(u, n),
            l: l.clone(),
            terms: vec![],
            const_l: vec![0; l.len()],
        }
    }

    /// The zero map on an explicit domain.
    pub fn zero_on(dom: Domain, l: &GroupShape) -> Self {
        HatForm {
            dom,
            l: l.clone(),
            terms: vec![],
            const_l: vec![0; l.len()],
        }
    }

    pub fn constant(u: &GroupShape, l: &GroupShape, n: usize, c: &LElement) -> Self {
        let mut h = Self::zero(u, l, n);
        h.const_l = c.0.clone();
        h
    }

    /// Number of variables of a uniform (top-level) form.
    pub fn n(&self) -> usize {
        self.dom.vars.iter().copied().max().unwrap_or(0)
    }

    pub fn eval(&self, point: &[u64]) -> Vec<u64> {
        let lb = self.l.len();
        let mut acc = self.const_l.clone();
        for t in &self.terms {
            let i = self.dom.dot_index(&t.beta, point);
            l_add_into(&mut acc, &t.mfun[i * lb..(i + 1) * lb], self.l.moduli());
        }
        acc
    }

    pub fn eval_zero(&self) -> Vec<u64> {
        let lb = self.l.len();
        let mut acc = self.const_l.clone();
        for t in &self.terms {
            l_add_into(&mut acc, &t.mfun[..lb], self.l.moduli());
        }
        acc
    }

    /// Every term nondegenerate in every live block.
    pub fn is_normalized(&self) -> bool {
        self.terms.iter().all(|t| {
            (0..self.dom.shape.len()).all(|b| {
                if !self.dom.is_live(b) {
                    return true;
                }
                let Block { prime, .. } = self.dom.shape.blocks()[b];
                t.beta[self.dom.range(b)].iter().any(|c| c % prime != 0)
            })
        })
    }

    /// Pointwise `self − other` (same domain).
    pub fn sub(&self, other: &HatForm) -> HatForm {
        assert_eq!(self.dom, other.dom);
        let lm = self.l.moduli();
        let mut b = FormBuilder::with_capacity(
            self.dom.clone(),
            self.l.clone(),
            self.terms.len() + other.terms.len(),
        );
        b.add_const(&self.const_l);
        let mut neg_c = other.const_l.clone();
        l_neg_table(&mut neg_c, lm);
        b.add_const(&neg_c);
        for t in &self.terms {
            b.push_normalized(t.clone());
        }
        for t in &other.terms {
            let mut t = t.clone();
            l_neg_table(&mut t.mfun, lm);
            b.push_normalized(t);
        }
        b.finish()
    }

    /// `h(x)` for `n` U-elements, when the form is uniform.
    pub fn eval_at(&self, xs: &[UElement]) -> LElement {
        Element(self.eval(&self.dom.point(xs)))
    }

    /// The form as w-terms: `m(β⊙x) = Σ_z w^{m(z)}(β⊙x − z)`, plus the constant.
    pub fn to_wterms(&self, n: usize) -> Vec<WTerm> {
        let u = &self.dom.shape;
        let lb = self.l.len();
        let one = Scalar::identity(&self.l);
        let mut out = vec![];
        if self.const_l.iter().any(|&c| c != 0) {
            out.push(WTerm {
                coeff: one.clone(),
                value: Element(self.const_l.clone()),
                beta: vec![u.zero(); n],
                shift: u.zero(),
            });
        }
        for t in &self.terms {
            let beta = self.dom.unflatten(&t.beta, n);
            for (i, row) in t.mfun.chunks(lb).enumerate() {
                if row.iter().all(|&x| x == 0) {
                    continue;
                }
                out.push(WTerm {
                    coeff: one.clone(),
                    value: Element(row.to_vec()),
                    beta: beta.clone(),
                    shift: u.neg_unchecked(&u.element_at(i)),
                });
            }
        }
        out
    }
}

impl fmt::Display for HatForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.to_wterms(self.n()) {
            writeln!(f, "{}", crate::format::format_wterm(&t))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Block;

    fn z(p: u64, k: u32) -> GroupShape {
        GroupShape::new(vec![Block { prime: p, exp: k }]).unwrap()
    }

    fn el(v: &[u64]) -> Element {
        Element(v.to_vec())
    }

    #[test]
    fn w_eval_examples() {
        assert_eq!(w_eval(&el(&[1]), &[0]), el(&[1]));
        assert_eq!(w_eval(&el(&[1]), &[1]), el(&[0]));
        assert_eq!(w_eval(&el(&[2]), &[0, 0]), el(&[2]));
    }

    #[test]
    fn degenerate_beta_is_factored() {
        // μ=1, l=1, β=(2,2), c=0 over Z4 → β'=(1,1), m(u)=w^1(2u)
        let u = z(2, 2);
        let l = z(3, 1);
        let t = WTerm {
            coeff: Scalar(vec![1]),
            value: el(&[1]),
            beta: vec![el(&[2]), el(&[2])],
            shift: el(&[0]),
        };
        let h = normalize(&[t], 2, &u, &l);
        assert_eq!(h.terms.len(), 1);
        assert_eq!(h.terms[0].beta, vec![1, 1]);
        assert_eq!(h.terms[0].mfun, vec![1, 0, 1, 0]);
        assert!(h.is_normalized());
    }

    #[test]
    fn zero_beta_folds_into_constant() {
        let u = z(2, 1);
        let l = z(3, 1);
        let t = WTerm {
            coeff: Scalar(vec![1]),
            value: el(&[1]),
            beta: vec![el(&[0])],
            shift: el(&[0]),
        };
        let h = normalize(&[t], 1, &u, &l);
        assert!(h.terms.is_empty());
        assert_eq!(h.const_l, vec![1]);
    }

    #[test]
    fn equal_betas_merge() {
        let u = z(3, 1);
        let l = z(5, 1);
        let mk = |c: u64, v: u64| WTerm {
            coeff: Scalar(vec![1]),
            value: el(&[v]),
            beta: vec![el(&[1]), el(&[2])],
            shift: el(&[c]),
        };
        let h = normalize(&[mk(0, 1), mk(1, 3)], 2, &u, &l);
        assert_eq!(h.terms.len(), 1);
        // m1 = w^1(u), m2 = w^3(u+1): m(0)=1, m(1)=0, m(2)=3
        assert_eq!(h.terms[0].mfun, vec![1, 0, 3]);
    }

    #[test]
    fn hat_eval_examples() {
        let u = z(2, 1);
        let l = z(3, 1);
        let h = HatForm::zero(&u, &l, 2);
        assert_eq!(h.eval(&[1, 0]), vec![0]);
        let h = HatForm {
            dom: Domain::uniform(&u, 1),
            l: l.clone(),
            terms: vec![MTerm {
                beta: vec![1],
                mfun: vec![1, 0],
            }],
            const_l: vec![0],
        };
        assert_eq!(h.eval(&[0]), vec![1]);
        assert_eq!(h.eval(&[1]), vec![0]);
    }

    #[test]
    fn wterm_dump_roundtrips_semantics() {
        let u =
            GroupShape::new(vec![Block { prime: 2, exp: 1 }, Block { prime: 3, exp: 1 }]).unwrap();
        let l = z(5, 1);
        let terms = vec![
            WTerm {
                coeff: Scalar(vec![2]),
                value: el(&[3]),
                beta: vec![el(&[1, 2]), el(&[0, 1])],
                shift: el(&[1, 1]),
            },
            WTerm {
                coeff: Scalar(vec![1]),
                value: el(&[4]),
                beta: vec![el(&[0, 0]), el(&[1, 0])],
                shift: el(&[0, 2]),
            },
        ];
        let h = normalize(&terms, 2, &u, &l);
        let back = normalize(&h.to_wterms(2), 2, &u, &l);
        assert_eq!(h, back);
        for a in u.elements() {
            for b in u.elements() {
                let args = [a.clone(), b.clone()];
                assert_eq!(h.eval_at(&args), eval_wterms(&terms, &args, &u, &l));
            }
        }
    }
}
