// SPDX-License-Identifier: Apache-2.0

//! Turning a refutation into concrete points.
//!
//! The trace is replayed from the top-level form. The bottom instance is
//! nonzero at the origin; that point is lifted back through every frame by
//! undoing the shrink and solving the eliminated coordinate on both
//! hyperplanes. Lifting only controls the class subsum, so each lifted pair is
//! checked against the full form, and a self-reduction search is used when
//! the check fails.

use super::constancy::{build_w, classes, is_zero_form, prepare, CheckTrace, ClassData};
use crate::error::{Error, Result};
use crate::wcalc::{collapsed, Domain, FormBuilder, HatForm};

fn nonzero(v: &[u64]) -> bool {
    v.iter().any(|&x| x != 0)
}

/// Points of `h`'s layout on the `c`- and `d`-hyperplanes of `class` that
/// correspond to `y` in the domain of `w_{c,d}`.
fn lift(
    h: &HatForm,
    class: &ClassData,
    c: u64,
    d: u64,
    w_dom: &Domain,
    y: &[u64],
) -> (Vec<u64>, Vec<u64>) {
    let i = class.key.block;
    let dom = &h.dom;
    let m = dom.shape().modulus(i);
    let half = dom.vars()[i] - 1;
    let mut p = vec![0u64; dom.total_vars()];
    let mut q = vec![0u64; dom.total_vars()];
    for b in 0..dom.shape().len() {
        if b == i {
            continue;
        }
        let src = w_dom.range(b);
        let dst = dom.range(b);
        if src.len() == dst.len() {
            p[dst.clone()].copy_from_slice(&y[src.clone()]);
            q[dst].copy_from_slice(&y[src]);
        }
    }
    let src = w_dom.range(i);
    let side = |s: usize| -> Vec<u64> {
        if src.len() == 2 * half {
            y[src.start + s * half..src.start + (s + 1) * half].to_vec()
        } else {
            vec![0; half]
        }
    };
    for (point, vals, target) in [(&mut p, side(0), c), (&mut q, side(1), d)] {
        let dst = dom.range(i);
        let mut it = vals.into_iter();
        let mut acc = 0u64;
        for (l, slot) in dst.clone().enumerate() {
            if l == class.coord {
                continue;
            }
            let v = it.next().unwrap_or(0);
            point[slot] = v;
            acc = (acc + class.rep[l] * v) % m;
        }
        point[dst.start + class.coord] = (target + m - acc) % m * class.rep_inv % m;
    }
    (p, q)
}

/// Replays `trace` from `h0` and returns two points where `h0` differs.
pub fn reconstruct_witness(trace: &CheckTrace, h0: &HatForm) -> Result<(Vec<u64>, Vec<u64>)> {
    if trace.frames.is_empty() {
        return Err(Error::ReconstructionFailed);
    }
    let mut forms = vec![h0.clone()];
    for f in &trace.frames {
        let h = forms.last().unwrap();
        let members = classes(h, f.key.block)
            .into_iter()
            .find(|(k, _)| *k == f.key)
            .ok_or(Error::ReconstructionFailed)?
            .1;
        let class = prepare(h, f.key.clone(), &members);
        if class.coord != f.coord {
            return Err(Error::ReconstructionFailed);
        }
        let w = build_w(h, &class, f.c, f.d);
        forms.push(w);
    }
    let bottom = forms.last().unwrap();
    let mut y = vec![0u64; bottom.dom.total_vars()];
    if !nonzero(&bottom.eval(&y)) {
        return Err(Error::ReconstructionFailed);
    }
    for r in (1..forms.len()).rev() {
        let f = &trace.frames[r - 1];
        let h = &forms[r - 1];
        let members = classes(h, f.key.block)
            .into_iter()
            .find(|(k, _)| *k == f.key)
            .ok_or(Error::ReconstructionFailed)?
            .1;
        let class = prepare(h, f.key.clone(), &members);
        let (p, q) = lift(h, &class, f.c, f.d, &forms[r].dom, &y);
        let (hp, hq) = (h.eval(&p), h.eval(&q));
        if r == 1 {
            return if hp != hq {
                Ok((p, q))
            } else {
                Err(Error::ReconstructionFailed)
            };
        }
        y = if nonzero(&hp) {
            p
        } else if nonzero(&hq) {
            q
        } else {
            return Err(Error::ReconstructionFailed);
        };
    }
    Err(Error::ReconstructionFailed)
}

/// `h` with the first remaining variable of block `b` fixed to `v`.
fn fix_first(h: &HatForm, b: usize, v: u64) -> HatForm {
    let dom = &h.dom;
    let mut vars = dom.vars().to_vec();
    vars[b] -= 1;
    let layout = Domain::new(dom.shape().clone(), vars);
    let nb = dom.shape().len();
    let ones = vec![1u64; nb];
    let m = dom.shape().modulus(b);
    let mut out = FormBuilder::with_capacity(collapsed(&layout), h.l.clone(), h.terms.len());
    out.add_const(&h.const_l);
    let first = dom.range(b).start;
    for t in &h.terms {
        let mut beta = t.beta.clone();
        let coeff = beta.remove(first);
        let mut shift = vec![0u64; nb];
        shift[b] = coeff * v % m;
        out.push_affine_parts(&layout, dom.shape(), &ones, &beta, &shift, &t.mfun);
    }
    out.finish()
}

/// Finds a point of `h`'s layout where `h` is nonzero, one coordinate at a
/// time, keeping the restriction not identically zero.
pub fn find_nonzero(h: &HatForm) -> Option<Vec<u64>> {
    if is_zero_form(h) {
        return None;
    }
    let mut cur = h.clone();
    let mut point = Vec::with_capacity(h.dom.total_vars());
    for b in 0..h.dom.shape().len() {
        let m = h.dom.shape().modulus(b);
        for _ in 0..h.dom.vars()[b] {
            let next = (0..m).find_map(|v| {
                let r = fix_first(&cur, b, v);
                (!is_zero_form(&r)).then_some((v, r))
            })?;
            point.push(next.0);
            cur = next.1;
        }
    }
    nonzero(&h.eval(&point)).then_some(point)
}

/// A point where `h` is nonzero, from the trace when possible.
pub fn witness_point(trace: &CheckTrace, h: &HatForm) -> Option<Vec<u64>> {
    if let Ok((p, q)) = reconstruct_witness(trace, h) {
        if nonzero(&h.eval(&p)) {
            return Some(p);
        }
        if nonzero(&h.eval(&q)) {
            return Some(q);
        }
    }
    find_nonzero(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqcheck::constancy::{is_constant_coprime, Constancy};
    use crate::group::GroupShape;
    use crate::wcalc::MTerm;

    #[test]
    fn lifts_single_class_refutation() {
        // U = Z4, L = Z3: w^1(x1 + 2 x2) is not constant
        let h = HatForm {
            dom: Domain::uniform(&GroupShape::cyclic(2, 2), 2),
            l: GroupShape::cyclic(3, 1),
            terms: vec![MTerm {
                beta: vec![1, 2],
                mfun: vec![1, 0, 0, 0],
            }],
            const_l: vec![0],
        };
        let Constancy::NotConstant(trace) = is_constant_coprime(&h) else {
            panic!("expected refutation")
        };
        let (p, q) = reconstruct_witness(&trace, &h).unwrap();
        assert_ne!(h.eval(&p), h.eval(&q));
        let x = witness_point(&trace, &h).unwrap();
        assert_ne!(h.eval(&x), vec![0]);
    }

    #[test]
    fn self_reduction_finds_nonzero_point() {
        let u = GroupShape::new(vec![
            crate::group::Block { prime: 2, exp: 1 },
            crate::group::Block { prime: 3, exp: 1 },
        ])
        .unwrap();
        let h = HatForm {
            dom: Domain::uniform(&u, 2),
            l: GroupShape::cyclic(5, 1),
            terms: vec![MTerm {
                beta: vec![1, 1, 1, 2],
                mfun: vec![0, 0, 0, 0, 0, 3],
            }],
            const_l: vec![0],
        };
        let x = find_nonzero(&h).unwrap();
        assert_ne!(h.eval(&x), vec![0]);
        let zero = HatForm::zero(&u, &h.l, 2);
        assert!(find_nonzero(&zero).is_none());
    }
}
