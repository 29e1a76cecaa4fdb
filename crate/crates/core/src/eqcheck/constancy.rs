// SPDX-License-Identifier: Apache-2.0

//! Deciding whether a hat form is constant when `gcd(|U|, |L|) = 1`.
//!
//! For each live block `i` the terms are grouped by the projective point of
//! their block-`i` coefficients mod `p_i`. Inside one class every linear form
//! is a unit multiple of the representative's form plus something in `⟨p_i⟩`,
//! so fixing the representative's value to `c` leaves forms that only see
//! `p_i·x^{(i)}`. Comparing two hyperplanes `c`, `d` gives a form over a
//! domain whose block-`i` exponent is one smaller, which is checked recursively.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::group::{mod_inverse, valuation, Block, GroupShape, UElement};
use crate::wcalc::{
    collapsed, l_add_into, l_neg_table, AffineSum, AffineTerm, Domain, FormBuilder, HatForm,
};

/// Projective point of a block's coefficient vector over `F_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassKey {
    pub block: usize,
    pub key: Vec<u64>,
}

impl fmt::Display for ClassKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (j, x) in self.key.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("]")
    }
}

/// Reduces mod `p` and scales so the first nonzero entry is 1; `None` for the zero vector.
pub fn projective_key(coeffs: &[u64], p: u64) -> Option<Vec<u64>> {
    let first = coeffs.iter().map(|c| c % p).find(|&c| c != 0)?;
    let inv = mod_inverse(first, p)?;
    Some(coeffs.iter().map(|c| c % p * inv % p).collect())
}

/// Class of `β` at block `i`; `β` is given as one U-element per variable.
pub fn class_key(beta: &[UElement], i: usize, u: &GroupShape) -> Option<ClassKey> {
    let coeffs: Vec<u64> = beta.iter().map(|e| e.0[i]).collect();
    projective_key(&coeffs, u.blocks()[i].prime).map(|key| ClassKey { block: i, key })
}

/// The exponent `e` such that `β` is `⟨p^e⟩`-dependent on `α` at block `i`.
pub fn m_dependence(
    alpha: &[UElement],
    beta: &[UElement],
    i: usize,
    u: &GroupShape,
) -> Result<u32> {
    let Block { prime, exp } = u.blocks()[i];
    let m = u.modulus(i);
    let a: Vec<u64> = alpha.iter().map(|e| e.0[i]).collect();
    let b: Vec<u64> = beta.iter().map(|e| e.0[i]).collect();
    let j = a
        .iter()
        .position(|&x| x % prime != 0)
        .ok_or(Error::NotInvertible {
            value: 0,
            modulus: m,
        })?;
    let inv = mod_inverse(a[j], m).ok_or(Error::NotInvertible {
        value: a[j],
        modulus: m,
    })?;
    let scale = inv * b[j] % m;
    Ok(a.iter()
        .zip(&b)
        .map(|(&x, &y)| valuation((y + m * m - scale * x % m) % m, prime, exp))
        .min()
        .unwrap_or(exp))
}

/// One refutation step: block, class, eliminated coordinate and hyperplane pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub key: ClassKey,
    pub coord: usize,
    pub c: u64,
    pub d: u64,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "b{}:{}:k{}:c{}d{}",
            self.key.block, self.key, self.coord, self.c, self.d
        )
    }
}

/// Path of the recursion down to the instance whose value at zero was nonzero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckTrace {
    pub frames: Vec<Frame>,
}

impl fmt::Display for CheckTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frames.is_empty() {
            return f.write_str("-");
        }
        for (j, fr) in self.frames.iter().enumerate() {
            if j > 0 {
                f.write_str("/")?;
            }
            write!(f, "{fr}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constancy {
    Constant(Vec<u64>),
    NotConstant(CheckTrace),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckStats {
    /// Forms examined, including the top-level one.
    pub instances: u64,
    /// Deepest recursion level reached (top level is 0).
    pub max_depth: usize,
}

impl CheckStats {
    pub fn merge(&mut self, other: &CheckStats) {
        self.instances += other.instances;
        self.max_depth = self.max_depth.max(other.max_depth);
    }
}

/// Which hyperplane pairs `(c, d)` are compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairSchedule {
    /// Every pair in lexicographic order.
    #[default]
    All,
    /// Only `(c, 0)`; equivalent because `w_{c,0} ≡ 0` for all `c` forces all
    /// hyperplane restrictions to share one constant value.
    Anchored,
}

/// One class at one block, prepared for repeated `(c, d)` instantiation.
pub(crate) struct ClassData<'a> {
    pub key: ClassKey,
    pub coord: usize,
    /// Representative's block-`i` coefficients.
    pub rep: Vec<u64>,
    pub rep_inv: u64,
    terms: Vec<SubTerm<'a>>,
}

struct SubTerm<'a> {
    /// Block-`i` coefficients after elimination, divided by `p`.
    reduced: Vec<u64>,
    nu: u64,
    beta: &'a [u64],
    mfun: &'a [u64],
    neg: Vec<u64>,
}

/// Groups the terms of `h` by class at block `i`, in order of first appearance.
pub(crate) fn classes(h: &HatForm, i: usize) -> Vec<(ClassKey, Vec<usize>)> {
    let p = h.dom.shape().blocks()[i].prime;
    let r = h.dom.range(i);
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut out: Vec<(ClassKey, Vec<usize>)> = vec![];
    for (t, term) in h.terms.iter().enumerate() {
        let key = projective_key(&term.beta[r.clone()], p).expect("normalized term");
        match index.get(&key) {
            Some(&slot) => out[slot].1.push(t),
            None => {
                index.insert(key.clone(), out.len());
                out.push((ClassKey { block: i, key }, vec![t]));
            }
        }
    }
    out
}

pub(crate) fn prepare<'a>(h: &'a HatForm, key: ClassKey, members: &[usize]) -> ClassData<'a> {
    let i = key.block;
    let Block { prime, .. } = h.dom.shape().blocks()[i];
    let m = h.dom.shape().modulus(i);
    let r = h.dom.range(i);
    let rep: Vec<u64> = h.terms[members[0]].beta[r.clone()].to_vec();
    let coord = rep
        .iter()
        .position(|&x| x % prime != 0)
        .expect("nondegenerate");
    let rep_inv = mod_inverse(rep[coord], m).expect("unit");
    let lm = h.l.moduli();
    let terms = members
        .iter()
        .map(|&t| {
            let term = &h.terms[t];
            let a = &term.beta[r.clone()];
            let nu = a[coord] * rep_inv % m;
            let reduced = (0..a.len())
                .filter(|&l| l != coord)
                .map(|l| {
                    let v = (a[l] + m * m - nu * rep[l] % m) % m;
                    debug_assert_eq!(v % prime, 0);
                    v / prime
                })
                .collect();
            let mut neg = term.mfun.clone();
            l_neg_table(&mut neg, lm);
            SubTerm {
                reduced,
                nu,
                beta: &term.beta,
                mfun: &term.mfun,
                neg,
            }
        })
        .collect();
    ClassData {
        key,
        coord,
        rep,
        rep_inv,
        terms,
    }
}

/// Domain layout of `w_{c,d}` before collapsing: block `i` loses one
/// exponent and holds two copies of the remaining coordinates.
pub(crate) fn wcd_layout(dom: &Domain, i: usize) -> Domain {
    let mut blocks = dom.shape().blocks().to_vec();
    blocks[i].exp -= 1;
    let mut vars = dom.vars().to_vec();
    vars[i] = 2 * (vars[i] - 1);
    Domain::new(GroupShape::from_blocks(blocks), vars)
}

/// `w_{c,d}`: substitute both hyperplanes, double block `i`, shrink, normalize.
pub(crate) fn build_w(h: &HatForm, class: &ClassData, c: u64, d: u64) -> HatForm {
    let i = class.key.block;
    let dom = &h.dom;
    let layout = wcd_layout(dom, i);
    let target = collapsed(&layout);
    let nb = dom.shape().len();
    let m = dom.shape().modulus(i);
    let p = dom.shape().blocks()[i].prime;
    let half = dom.vars()[i] - 1;
    let mut scale = vec![1u64; nb];
    scale[i] = p;
    let mut b = FormBuilder::with_capacity(target, h.l.clone(), 2 * class.terms.len());
    let mut beta = vec![0u64; layout.total_vars()];
    let mut shift = vec![0u64; nb];
    for t in &class.terms {
        for (side, val, table) in [(0usize, c, t.mfun), (1, d, &t.neg[..])] {
            for blk in 0..nb {
                let dst = layout.range(blk);
                if blk == i {
                    beta[dst.clone()].iter_mut().for_each(|x| *x = 0);
                    let start = dst.start + side * half;
                    beta[start..start + half].copy_from_slice(&t.reduced);
                } else {
                    beta[dst].copy_from_slice(&t.beta[dom.range(blk)]);
                }
            }
            shift[i] = t.nu * val % m;
            b.push_affine_parts(&layout, dom.shape(), &scale, &beta, &shift, table);
        }
    }
    b.finish()
}

fn refute(
    h: &HatForm,
    depth: usize,
    schedule: PairSchedule,
    stats: &mut CheckStats,
) -> Option<Vec<Frame>> {
    stats.instances += 1;
    stats.max_depth = stats.max_depth.max(depth);
    if h.terms.is_empty() {
        return None;
    }
    for i in 0..h.dom.shape().len() {
        if !h.dom.is_live(i) {
            continue;
        }
        let m = h.dom.shape().modulus(i);
        for (key, members) in classes(h, i) {
            let class = prepare(h, key, &members);
            for c in 0..m {
                let ds: Vec<u64> = match schedule {
                    PairSchedule::All => (0..m).collect(),
                    PairSchedule::Anchored => vec![0],
                };
                for d in ds {
                    let w = build_w(h, &class, c, d);
                    let frame = Frame {
                        key: class.key.clone(),
                        coord: class.coord,
                        c,
                        d,
                    };
                    if w.eval_zero().iter().any(|&x| x != 0) {
                        return Some(vec![frame]);
                    }
                    if let Some(rest) = refute(&w, depth + 1, schedule, stats) {
                        let mut frames = vec![frame];
                        frames.extend(rest);
                        return Some(frames);
                    }
                }
            }
        }
    }
    None
}

/// Decides constancy of a normalized form over a coprime domain.
pub fn is_constant_coprime(h: &HatForm) -> Constancy {
    is_constant_with(h, PairSchedule::All, &mut CheckStats::default())
}

pub fn is_constant_with(h: &HatForm, schedule: PairSchedule, stats: &mut CheckStats) -> Constancy {
    match refute(h, 0, schedule, stats) {
        None => Constancy::Constant(h.eval_zero()),
        Some(frames) => Constancy::NotConstant(CheckTrace { frames }),
    }
}

/// `h ≡ 0`.
pub(crate) fn is_zero_form(h: &HatForm) -> bool {
    matches!(is_constant_with(h, PairSchedule::Anchored, &mut CheckStats::default()),
        Constancy::Constant(v) if v.iter().all(|&x| x == 0))
}

/// The subsum of `h` over the terms of one class at block `i`.
pub fn class_subsum(h: &HatForm, key: &ClassKey) -> HatForm {
    let members: Vec<usize> = classes(h, key.block)
        .into_iter()
        .find(|(k, _)| k == key)
        .map(|(_, m)| m)
        .unwrap_or_default();
    HatForm {
        dom: h.dom.clone(),
        l: h.l.clone(),
        terms: members.iter().map(|&t| h.terms[t].clone()).collect(),
        const_l: vec![0; h.l.len()],
    }
}

/// Restricts a single-class form to the hyperplane where the representative's
/// block-`i` form equals `c`, eliminating coordinate `k` of block `i`.
pub fn substitute(h: &HatForm, i: usize, k: usize, c: u64) -> Result<AffineSum> {
    let dom = &h.dom;
    let m = dom.shape().modulus(i);
    let r = dom.range(i);
    let rep = h
        .terms
        .first()
        .map(|t| t.beta[r.clone()].to_vec())
        .unwrap_or_else(|| vec![0; r.len()]);
    let mut vars = dom.vars().to_vec();
    vars[i] = vars[i].saturating_sub(1);
    let layout = Domain::new(dom.shape().clone(), vars);
    let mut sum = AffineSum {
        dom: layout.clone(),
        l: h.l.clone(),
        terms: vec![],
        const_l: h.const_l.clone(),
    };
    if h.terms.is_empty() {
        return Ok(sum);
    }
    let inv = mod_inverse(rep[k], m).ok_or(Error::NotInvertible {
        value: rep[k],
        modulus: m,
    })?;
    for t in &h.terms {
        let a = &t.beta[r.clone()];
        let nu = a[k] * inv % m;
        let mut beta = vec![];
        for blk in 0..dom.shape().len() {
            if blk == i {
                beta.extend(
                    (0..a.len())
                        .filter(|&l| l != k)
                        .map(|l| (a[l] + m * m - nu * rep[l] % m) % m),
                );
            } else {
                beta.extend_from_slice(&t.beta[dom.range(blk)]);
            }
        }
        let mut shift = vec![0; dom.shape().len()];
        shift[i] = nu * c % m;
        sum.terms.push(AffineTerm {
            beta,
            shift,
            mfun: t.mfun.clone(),
        });
    }
    Ok(sum)
}

/// `t_c(ū) − t_d(v̄)`: block `i` gets separate `u`- and `v`-coordinates,
/// all other blocks are shared.
pub fn build_wcd(t_c: &AffineSum, t_d: &AffineSum, i: usize) -> AffineSum {
    let dom = &t_c.dom;
    let half = dom.vars()[i];
    let mut vars = dom.vars().to_vec();
    vars[i] = 2 * half;
    let layout = Domain::new(dom.shape().clone(), vars);
    let lm = t_c.l.moduli();
    let mut terms = vec![];
    for (side, src) in [(0usize, t_c), (1, t_d)] {
        for t in &src.terms {
            let mut beta = vec![];
            for blk in 0..dom.shape().len() {
                let part = &t.beta[src.dom.range(blk)];
                if blk == i {
                    let mut v = vec![0u64; 2 * half];
                    v[side * half..(side + 1) * half].copy_from_slice(part);
                    beta.extend(v);
                } else {
                    beta.extend_from_slice(part);
                }
            }
            let mut mfun = t.mfun.clone();
            if side == 1 {
                l_neg_table(&mut mfun, lm);
            }
            terms.push(AffineTerm {
                beta,
                shift: t.shift.clone(),
                mfun,
            });
        }
    }
    let mut const_l = t_c.const_l.clone();
    let mut neg = t_d.const_l.clone();
    l_neg_table(&mut neg, lm);
    l_add_into(&mut const_l, &neg, lm);
    AffineSum {
        dom: layout,
        l: t_c.l.clone(),
        terms,
        const_l,
    }
}

/// Views a form whose block-`i` coefficients lie in `⟨p_i⟩` as a form over
/// the domain with block-`i` exponent reduced by one, then normalizes.
pub fn shrink_domain(sum: &AffineSum, i: usize) -> Result<HatForm> {
    let dom = &sum.dom;
    let Block { prime, exp } = dom.shape().blocks()[i];
    if exp == 0 {
        return Err(Error::ShapeMismatch(format!(
            "block {i} is already trivial"
        )));
    }
    let mut blocks = dom.shape().blocks().to_vec();
    blocks[i].exp -= 1;
    let layout = Domain::new(GroupShape::from_blocks(blocks), dom.vars().to_vec());
    let mut scale = vec![1u64; dom.shape().len()];
    scale[i] = prime;
    let mut b = FormBuilder::with_capacity(collapsed(&layout), sum.l.clone(), sum.terms.len());
    b.add_const(&sum.const_l);
    let r = dom.range(i);
    for t in &sum.terms {
        let mut beta = t.beta.clone();
        for x in &mut beta[r.clone()] {
            if *x % prime != 0 {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} coefficient {x} is not a multiple of {prime}"
                )));
            }
            *x /= prime;
        }
        b.push_affine_parts(&layout, dom.shape(), &scale, &beta, &t.shift, &t.mfun);
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Element;
    use crate::wcalc::MTerm;

    fn z(p: u64, k: u32) -> GroupShape {
        GroupShape::cyclic(p, k)
    }

    fn els(v: &[u64]) -> Vec<UElement> {
        v.iter().map(|&x| Element(vec![x])).collect()
    }

    fn form(u: GroupShape, n: usize, terms: Vec<(Vec<u64>, Vec<u64>)>, c: u64) -> HatForm {
        HatForm {
            dom: Domain::uniform(&u, n),
            l: z(3, 1),
            terms: terms
                .into_iter()
                .map(|(beta, mfun)| MTerm { beta, mfun })
                .collect(),
            const_l: vec![c],
        }
    }

    #[test]
    fn constancy_examples() {
        let h = form(
            z(2, 1),
            1,
            vec![(vec![1], vec![1, 0]), (vec![1], vec![0, 1])],
            0,
        );
        assert_eq!(is_constant_coprime(&h), Constancy::Constant(vec![1]));
        let h = form(z(2, 1), 1, vec![(vec![1], vec![1, 0])], 0);
        assert!(matches!(is_constant_coprime(&h), Constancy::NotConstant(_)));
        let h = form(z(2, 1), 2, vec![], 2);
        assert_eq!(is_constant_coprime(&h), Constancy::Constant(vec![2]));
    }

    #[test]
    fn class_key_examples() {
        let u = z(2, 2);
        assert_eq!(class_key(&els(&[1, 2]), 0, &u).unwrap().key, vec![1, 0]);
        assert_eq!(class_key(&els(&[3, 0]), 0, &u).unwrap().key, vec![1, 0]);
        assert_eq!(class_key(&els(&[1, 1]), 0, &u).unwrap().key, vec![1, 1]);
        assert!(class_key(&els(&[2, 0]), 0, &u).is_none());
    }

    #[test]
    fn m_dependence_examples() {
        let u = z(2, 2);
        assert_eq!(
            m_dependence(&els(&[1, 0]), &els(&[1, 2]), 0, &u).unwrap(),
            1
        );
        assert_eq!(
            m_dependence(&els(&[1, 3]), &els(&[1, 3]), 0, &u).unwrap(),
            2
        );
        assert_eq!(
            m_dependence(&els(&[1, 0]), &els(&[1, 1]), 0, &u).unwrap(),
            0
        );
    }

    #[test]
    fn substitute_examples() {
        // U = Z4, L = Z3, n = 2, class of (1,0)
        let w1 = vec![1, 0, 0, 0];
        let h = form(z(2, 2), 2, vec![(vec![1, 0], w1.clone())], 0);
        let t = substitute(&h, 0, 0, 0).unwrap();
        let n = t.normalize();
        assert!(n.terms.is_empty());
        assert_eq!(n.const_l, vec![1]);

        let h = form(
            z(2, 2),
            2,
            vec![(vec![1, 0], vec![0; 4]), (vec![1, 2], w1.clone())],
            0,
        );
        let t = substitute(&h, 0, 0, 0).unwrap();
        assert_eq!(t.terms[1].beta, vec![2]);
        assert_eq!(t.terms[1].shift, vec![0]);
        for x2 in 0..4 {
            let want = if (2 * x2) % 4 == 0 { 1 } else { 0 };
            assert_eq!(t.eval(&[x2])[0], want);
        }
        let t1 = substitute(&h, 0, 0, 1).unwrap();
        assert_eq!(t1.terms[1].shift, vec![1]);
    }

    #[test]
    fn wcd_and_shrink_examples() {
        // eliminate x1 through the representative (1,0)
        let w1 = vec![1, 0, 0, 0];
        let h = form(
            z(2, 2),
            2,
            vec![(vec![1, 0], vec![0; 4]), (vec![1, 2], w1)],
            0,
        );
        let t0 = substitute(&h, 0, 0, 0).unwrap();
        let w = build_wcd(&t0, &t0, 0);
        // zero iff x2 ≡ y2 mod 2
        for x in 0..4u64 {
            for y in 0..4u64 {
                let v = w.eval(&[x, y])[0];
                assert_eq!(v == 0, x % 2 == y % 2, "{x} {y}");
            }
        }
        let s = shrink_domain(&w, 0).unwrap();
        assert_eq!(s.dom.shape().blocks()[0].exp, 1);
        assert!(matches!(is_constant_coprime(&s), Constancy::NotConstant(_)));

        let empty = AffineSum {
            dom: Domain::uniform(&z(2, 2), 1),
            l: z(3, 1),
            terms: vec![],
            const_l: vec![0],
        };
        let e = shrink_domain(&build_wcd(&empty, &empty, 0), 0).unwrap();
        assert_eq!(is_constant_coprime(&e), Constancy::Constant(vec![0]));
    }

    #[test]
    fn shrink_pulls_back_along_multiplication() {
        // u ↦ w^1(2·x) over Z4 becomes y ↦ w^1(2y) over Z2, i.e. [1, 0]
        let sum = AffineSum {
            dom: Domain::uniform(&z(2, 2), 1),
            l: z(3, 1),
            terms: vec![AffineTerm {
                beta: vec![2],
                shift: vec![0],
                mfun: vec![1, 0, 0, 0],
            }],
            const_l: vec![0],
        };
        let s = shrink_domain(&sum, 0).unwrap();
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.terms[0].mfun, vec![1, 0]);

        // exponent 1 → block disappears, everything folds to constants
        let sum = AffineSum {
            dom: Domain::uniform(&z(2, 1), 1),
            l: z(3, 1),
            terms: vec![],
            const_l: vec![2],
        };
        let s = shrink_domain(&sum, 0).unwrap();
        assert_eq!(s.dom.shape().blocks()[0].exp, 0);
        assert_eq!(s.const_l, vec![2]);
    }

    #[test]
    fn fast_path_matches_composed_operations() {
        // two classes over Z4 × Z3 with three variables
        let u =
            GroupShape::new(vec![Block { prime: 2, exp: 2 }, Block { prime: 3, exp: 1 }]).unwrap();
        let order = 12;
        let mf = |s: u64| {
            (0..order)
                .map(|j| (j * s + j / 5) % 3)
                .collect::<Vec<u64>>()
        };
        let h = HatForm {
            dom: Domain::uniform(&u, 3),
            l: z(5, 1),
            terms: vec![
                MTerm {
                    beta: vec![1, 2, 0, 1, 1, 0],
                    mfun: mf(1),
                },
                MTerm {
                    beta: vec![3, 0, 2, 2, 0, 1],
                    mfun: mf(2),
                },
                MTerm {
                    beta: vec![1, 1, 1, 1, 2, 2],
                    mfun: mf(4),
                },
            ],
            const_l: vec![0],
        };
        for i in 0..2 {
            for (key, members) in classes(&h, i) {
                let class = prepare(&h, key.clone(), &members);
                let sub = class_subsum(&h, &key);
                let m = u.modulus(i);
                for c in 0..m {
                    for d in 0..m {
                        let fast = build_w(&h, &class, c, d);
                        let tc = substitute(&sub, i, class.coord, c).unwrap();
                        let td = substitute(&sub, i, class.coord, d).unwrap();
                        let slow = shrink_domain(&build_wcd(&tc, &td, i), i).unwrap();
                        assert_eq!(fast, slow, "block {i} class {key} c={c} d={d}");
                    }
                }
            }
        }
    }
}
