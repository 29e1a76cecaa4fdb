// SPDX-License-Identifier: Apache-2.0

//! Gate-by-gate compilation of circuits into canonical forms.
//!
//! A gate's value is `(Σ λ_i l_i + ĥ(u), Σ α_i u_i + u_0)`. Composing with a
//! basic operation keeps this shape: the children's affine U-parts are
//! substituted into the operation's expanded hat, and the children's L-parts
//! are scaled by the operation's `λ`.
//!
//! For algebras where `|U|` and `|L|` share primes, compilation runs on a
//! [`View`]: a set of `L` blocks together with the `U` blocks coprime to them.
//! The remaining `U` blocks are fixed per input, so the hat restricted to the
//! view is again expandable.

use std::collections::HashMap;
use std::sync::Arc;

use crate::algebra::{pack_args, AlgebraSpec};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::group::{Element, GroupShape, LElement, Scalar, UElement};
use crate::wcalc::{
    collapsed, expand_to_form, l_scale_table, AffineTerm, Domain, FormBuilder, HatForm, MTerm,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    pub n: usize,
    pub lambda: Vec<Scalar>,
    pub hat: HatForm,
    pub alpha: Vec<Scalar>,
    pub u_const: UElement,
}

impl CanonicalForm {
    /// Evaluates at `n` pairs given in the view's coordinates.
    pub fn eval(&self, assignment: &[(LElement, UElement)]) -> (LElement, UElement) {
        let l = &self.hat.l;
        let u = self.hat.dom.shape();
        let mut lv = Element(
            self.hat.eval(
                &self.hat.dom.point(
                    &assignment
                        .iter()
                        .map(|(_, x)| x.clone())
                        .collect::<Vec<_>>(),
                ),
            ),
        );
        let mut uv = self.u_const.clone();
        for ((x, y), (ls, us)) in assignment.iter().zip(self.lambda.iter().zip(&self.alpha)) {
            lv = l.add_unchecked(&lv, &l.scale_unchecked(ls, x));
            uv = u.add_unchecked(&uv, &u.scale_unchecked(us, y));
        }
        (lv, uv)
    }

    pub fn linear_is_zero(&self) -> bool {
        self.lambda.iter().all(Scalar::is_zero)
            && self.alpha.iter().all(Scalar::is_zero)
            && self.u_const.is_zero()
    }
}

/// Pointwise difference `a − b`.
pub fn subtract(a: &CanonicalForm, b: &CanonicalForm) -> CanonicalForm {
    assert_eq!(a.n, b.n);
    let l = &a.hat.l;
    let u = a.hat.dom.shape();
    CanonicalForm {
        n: a.n,
        lambda: a
            .lambda
            .iter()
            .zip(&b.lambda)
            .map(|(x, y)| x.add(&y.neg(l), l))
            .collect(),
        hat: a.hat.sub(&b.hat),
        alpha: a
            .alpha
            .iter()
            .zip(&b.alpha)
            .map(|(x, y)| x.add(&y.neg(u), u))
            .collect(),
        u_const: u.sub_unchecked(&a.u_const, &b.u_const),
    }
}

/// Which blocks of `L` and `U` a compilation sees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct View {
    pub l_blocks: Vec<usize>,
    /// `U` blocks kept as variables.
    pub u2_blocks: Vec<usize>,
    /// `U` blocks fixed per input.
    pub u1_blocks: Vec<usize>,
}

impl View {
    pub fn full(alg: &AlgebraSpec) -> Self {
        View {
            l_blocks: (0..alg.l.len()).collect(),
            u2_blocks: (0..alg.u.len()).collect(),
            u1_blocks: vec![],
        }
    }

    /// `L` blocks of prime `q`; `U` blocks of prime `q` are fixed.
    pub fn for_prime(alg: &AlgebraSpec, q: u64) -> Self {
        let (u1, u2): (Vec<usize>, Vec<usize>) =
            (0..alg.u.len()).partition(|&b| alg.u.blocks()[b].prime == q);
        View {
            l_blocks: (0..alg.l.len())
                .filter(|&b| alg.l.blocks()[b].prime == q)
                .collect(),
            u2_blocks: u2,
            u1_blocks: u1,
        }
    }
}

/// Compiles circuits over one algebra and view, caching operation expansions.
pub struct Compiler {
    alg: Arc<AlgebraSpec>,
    view: View,
    l: GroupShape,
    u2: GroupShape,
    u1: GroupShape,
    cache: HashMap<(usize, Vec<u64>), Arc<HatForm>>,
}

struct Restricted {
    lambda: Vec<Vec<Scalar>>,
    alpha: Vec<Vec<Scalar>>,
    u_const: Vec<UElement>,
    u1_alpha: Vec<Vec<Scalar>>,
    u1_const: Vec<UElement>,
}

impl Compiler {
    pub fn new(alg: Arc<AlgebraSpec>, view: View) -> Result<Self> {
        let l = alg.l.project(&view.l_blocks);
        let u2 = alg.u.project(&view.u2_blocks);
        let u1 = alg.u.project(&view.u1_blocks);
        Ok(Compiler {
            alg,
            view,
            l,
            u2,
            u1,
            cache: HashMap::new(),
        })
    }

    /// Compiler over the whole algebra; requires `gcd(|U|, |L|) = 1`.
    pub fn coprime(alg: Arc<AlgebraSpec>) -> Result<Self> {
        if !alg.is_coprime() {
            return Err(Error::NotCoprime {
                value: alg.u.order(),
                modulus: alg.l.order(),
            });
        }
        let view = View::full(&alg);
        Self::new(alg, view)
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    pub fn l_shape(&self) -> &GroupShape {
        &self.l
    }

    pub fn u_shape(&self) -> &GroupShape {
        &self.u2
    }

    pub fn u1_shape(&self) -> &GroupShape {
        &self.u1
    }

    fn restricted(&self) -> Restricted {
        let v = &self.view;
        let ops = &self.alg.ops;
        Restricted {
            lambda: ops
                .iter()
                .map(|o| o.l_scalars.iter().map(|s| s.project(&v.l_blocks)).collect())
                .collect(),
            alpha: ops
                .iter()
                .map(|o| {
                    o.u_scalars
                        .iter()
                        .map(|s| s.project(&v.u2_blocks))
                        .collect()
                })
                .collect(),
            u_const: ops
                .iter()
                .map(|o| o.u_const.project(&v.u2_blocks))
                .collect(),
            u1_alpha: ops
                .iter()
                .map(|o| {
                    o.u_scalars
                        .iter()
                        .map(|s| s.project(&v.u1_blocks))
                        .collect()
                })
                .collect(),
            u1_const: ops
                .iter()
                .map(|o| o.u_const.project(&v.u1_blocks))
                .collect(),
        }
    }

    /// Expansion of operation `op` with the fixed `U` parts of its arguments.
    fn expansion(&mut self, op: usize, fixed: &[UElement]) -> Result<Arc<HatForm>> {
        let key: Vec<u64> = fixed.iter().flat_map(|e| e.0.iter().copied()).collect();
        if let Some(h) = self.cache.get(&(op, key.clone())) {
            return Ok(h.clone());
        }
        let alg = &*self.alg;
        let bop = &alg.ops[op];
        let k = bop.arity;
        let lb = self.l.len();
        let points = (self.u2.order() as usize).pow(k as u32);
        let mut table = vec![0u64; points * lb];
        let mut args2 = vec![self.u2.zero(); k];
        let mut full = vec![alg.u.zero(); k];
        for idx in 0..points {
            crate::algebra::unpack_args(&self.u2, idx, &mut args2);
            for j in 0..k {
                for (pos, &b) in self.view.u2_blocks.iter().enumerate() {
                    full[j].0[b] = args2[j].0[pos];
                }
                for (pos, &b) in self.view.u1_blocks.iter().enumerate() {
                    full[j].0[b] = fixed[j].0[pos];
                }
            }
            let val = &bop.hat_table()[pack_args(&alg.u, &full)];
            for (pos, &b) in self.view.l_blocks.iter().enumerate() {
                table[idx * lb + pos] = val.0[b];
            }
        }
        let form = Arc::new(expand_to_form(&table, k, &self.u2, &self.l)?);
        self.cache.insert((op, key), form.clone());
        Ok(form)
    }

    /// Compiles the listed gates. `tau` gives the fixed `U` parts of the
    /// inputs (view coordinates) when the view has fixed blocks.
    pub fn compile_gates(
        &mut self,
        c: &Circuit,
        targets: &[usize],
        tau: Option<&[UElement]>,
    ) -> Result<Vec<CanonicalForm>> {
        let n = c.n;
        let lsh = self.l.clone();
        let ush = self.u2.clone();
        let dom = collapsed(&Domain::uniform(&ush, n));
        let r = self.restricted();
        let zero_tau: Vec<UElement>;
        let tau = match tau {
            Some(t) => t,
            None => {
                zero_tau = vec![self.u1.zero(); n];
                &zero_tau
            }
        };

        let live = c.reachable(targets);
        let mut uses = vec![0usize; c.gates.len()];
        for (i, g) in c.gates.iter().enumerate() {
            if let (true, Gate::Op(_, ch)) = (live[i], g) {
                for &k in ch {
                    uses[k] += 1;
                }
            }
        }
        for &t in targets {
            uses[t] += 1;
        }

        let mut fixed: Vec<UElement> = vec![self.u1.zero(); c.gates.len()];
        let mut forms: Vec<Option<CanonicalForm>> = vec![None; c.gates.len()];
        let mut out: Vec<Option<CanonicalForm>> = vec![None; targets.len()];

        for (gi, g) in c.gates.iter().enumerate() {
            if !live[gi] {
                continue;
            }
            let form = match g {
                Gate::Input(i) => {
                    fixed[gi] = tau[i - 1].clone();
                    let mut lambda = vec![Scalar::zero(&lsh); n];
                    lambda[i - 1] = Scalar::identity(&lsh);
                    let mut alpha = vec![Scalar::zero(&ush); n];
                    alpha[i - 1] = Scalar::identity(&ush);
                    CanonicalForm {
                        n,
                        lambda,
                        hat: HatForm::zero_on(dom.clone(), &lsh),
                        alpha,
                        u_const: ush.zero(),
                    }
                }
                Gate::Const(l, u) => {
                    fixed[gi] = u.project(&self.view.u1_blocks);
                    let mut hat = HatForm::zero_on(dom.clone(), &lsh);
                    hat.const_l = l.project(&self.view.l_blocks).0;
                    CanonicalForm {
                        n,
                        lambda: vec![Scalar::zero(&lsh); n],
                        hat,
                        alpha: vec![Scalar::zero(&ush); n],
                        u_const: u.project(&self.view.u2_blocks),
                    }
                }
                Gate::Op(op, ch) => {
                    let op = *op;
                    let mut u1v = r.u1_const[op].clone();
                    for (j, &k) in ch.iter().enumerate() {
                        u1v = self.u1.add_unchecked(
                            &u1v,
                            &self.u1.scale_unchecked(&r.u1_alpha[op][j], &fixed[k]),
                        );
                    }
                    fixed[gi] = u1v;
                    let child_fixed: Vec<UElement> = ch.iter().map(|&k| fixed[k].clone()).collect();
                    let exp = self.expansion(op, &child_fixed)?;
                    let children: Vec<&CanonicalForm> = ch
                        .iter()
                        .map(|&k| forms[k].as_ref().expect("child compiled"))
                        .collect();
                    let form = compose(n, &dom, &lsh, &ush, &r, op, &children, &exp);
                    for &k in ch {
                        uses[k] -= 1;
                        if uses[k] == 0 {
                            forms[k] = None;
                        }
                    }
                    form
                }
            };
            for (slot, &t) in targets.iter().enumerate() {
                if t == gi {
                    out[slot] = Some(form.clone());
                    uses[gi] -= 1;
                }
            }
            if uses[gi] > 0 {
                forms[gi] = Some(form);
            }
        }
        Ok(out
            .into_iter()
            .map(|f| f.expect("target compiled"))
            .collect())
    }

    /// Compiles one gate.
    pub fn compile_gate(&mut self, c: &Circuit, gate: usize) -> Result<CanonicalForm> {
        Ok(self.compile_gates(c, &[gate], None)?.remove(0))
    }
}

#[allow(clippy::too_many_arguments)]
fn compose(
    n: usize,
    dom: &Domain,
    lsh: &GroupShape,
    ush: &GroupShape,
    r: &Restricted,
    op: usize,
    children: &[&CanonicalForm],
    exp: &HatForm,
) -> CanonicalForm {
    let lm = lsh.moduli();
    let lam_f = &r.lambda[op];
    let alp_f = &r.alpha[op];

    let mut lambda = vec![Scalar::zero(lsh); n];
    let mut alpha = vec![Scalar::zero(ush); n];
    let mut u_const = r.u_const[op].clone();
    for (j, ch) in children.iter().enumerate() {
        for i in 0..n {
            lambda[i] = lambda[i].add(&lam_f[j].compose(&ch.lambda[i], lsh), lsh);
            alpha[i] = alpha[i].add(&alp_f[j].compose(&ch.alpha[i], ush), ush);
        }
        u_const = ush.add_unchecked(&u_const, &ush.scale_unchecked(&alp_f[j], &ch.u_const));
    }

    let cap: usize = children.iter().map(|c| c.hat.terms.len()).sum::<usize>() + exp.terms.len();
    let mut b = FormBuilder::with_capacity(dom.clone(), lsh.clone(), cap);
    for (j, ch) in children.iter().enumerate() {
        let s = &lam_f[j];
        if s.is_zero() {
            continue;
        }
        let mut c = ch.hat.const_l.clone();
        l_scale_table(&mut c, s, lm);
        b.add_const(&c);
        for t in &ch.hat.terms {
            let mut mfun = t.mfun.clone();
            l_scale_table(&mut mfun, s, lm);
            b.push_normalized(MTerm {
                beta: t.beta.clone(),
                mfun,
            });
        }
    }

    // instantiate the operation's hat on the children's affine U-parts
    b.add_const(&exp.const_l);
    let k = children.len();
    let nb = ush.len();
    let edom = &exp.dom;
    for t in &exp.terms {
        let mut beta = vec![0u64; dom.total_vars()];
        let mut shift = vec![0u64; nb];
        for blk in 0..nb {
            if !edom.is_live(blk) {
                continue;
            }
            let m = ush.modulus(blk);
            let er = edom.range(blk);
            let coeffs = &t.beta[er];
            let tr = dom.range(blk);
            for (j, ch) in children.iter().enumerate().take(k) {
                let cj = coeffs[j];
                if cj == 0 {
                    continue;
                }
                shift[blk] = (shift[blk] + cj * ch.u_const.0[blk]) % m;
                for (slot, i) in tr.clone().zip(0..n) {
                    beta[slot] = (beta[slot] + cj * ch.alpha[i].0[blk]) % m;
                }
            }
        }
        // the expansion's U shape equals the view's U shape; expand terms
        // that came from collapsed blocks back to full tables
        let mfun = lift_mfun(edom, ush, &t.mfun, lsh.len());
        b.push_affine(
            &Domain::new(ush.clone(), dom.vars().to_vec()),
            &AffineTerm { beta, shift, mfun },
        );
    }
    CanonicalForm {
        n,
        lambda,
        hat: b.finish(),
        alpha,
        u_const,
    }
}

/// Re-indexes a table over a possibly collapsed shape as a table over `full`
/// (constant along collapsed blocks).
fn lift_mfun(dom: &Domain, full: &GroupShape, mfun: &[u64], lb: usize) -> Vec<u64> {
    if dom.shape() == full {
        return mfun.to_vec();
    }
    let order = full.order() as usize;
    let mut out = vec![0u64; order * lb];
    let nb = full.len();
    for (i, row) in out.chunks_mut(lb).enumerate() {
        let e = full.element_at(i);
        let z: Vec<u64> = (0..nb)
            .map(|b| {
                if dom.shape().blocks()[b].exp == 0 {
                    0
                } else {
                    e.0[b]
                }
            })
            .collect();
        let si = dom.shape().index_of(&z);
        row.copy_from_slice(&mfun[si * lb..(si + 1) * lb]);
    }
    out
}

/// The linear data `(λ, α, u_0)` of a gate over the whole algebra. Defined for
/// every algebra, including ones where `U` and `L` share primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearPart {
    pub lambda: Vec<Scalar>,
    pub alpha: Vec<Scalar>,
    pub u_const: UElement,
}

pub fn linear_part(c: &Circuit, gate: usize) -> LinearPart {
    let alg = &*c.algebra;
    let (lsh, ush) = (&alg.l, &alg.u);
    let live = c.reachable(&[gate]);
    let mut parts: Vec<Option<LinearPart>> = vec![None; c.gates.len()];
    for (gi, g) in c.gates.iter().enumerate() {
        if !live[gi] {
            continue;
        }
        let part = match g {
            Gate::Input(i) => {
                let mut lambda = vec![Scalar::zero(lsh); c.n];
                lambda[i - 1] = Scalar::identity(lsh);
                let mut alpha = vec![Scalar::zero(ush); c.n];
                alpha[i - 1] = Scalar::identity(ush);
                LinearPart {
                    lambda,
                    alpha,
                    u_const: ush.zero(),
                }
            }
            Gate::Const(_, u) => LinearPart {
                lambda: vec![Scalar::zero(lsh); c.n],
                alpha: vec![Scalar::zero(ush); c.n],
                u_const: u.clone(),
            },
            Gate::Op(op, ch) => {
                let bop = &alg.ops[*op];
                let mut out = LinearPart {
                    lambda: vec![Scalar::zero(lsh); c.n],
                    alpha: vec![Scalar::zero(ush); c.n],
                    u_const: bop.u_const.clone(),
                };
                for (j, &k) in ch.iter().enumerate() {
                    let child = parts[k].as_ref().expect("child visited");
                    for i in 0..c.n {
                        out.lambda[i] = out.lambda[i]
                            .add(&bop.l_scalars[j].compose(&child.lambda[i], lsh), lsh);
                        out.alpha[i] =
                            out.alpha[i].add(&bop.u_scalars[j].compose(&child.alpha[i], ush), ush);
                    }
                    out.u_const = ush.add_unchecked(
                        &out.u_const,
                        &ush.scale_unchecked(&bop.u_scalars[j], &child.u_const),
                    );
                }
                out
            }
        };
        parts[gi] = Some(part);
    }
    parts[gate].take().expect("gate visited")
}

/// Compiles one gate over the whole (coprime) algebra.
pub fn compile(c: &Circuit, gate: usize) -> Result<CanonicalForm> {
    Compiler::coprime(c.algebra.clone())?.compile_gate(c, gate)
}

/// Compiles both outputs over the whole (coprime) algebra, sharing work.
pub fn compile_outputs(c: &Circuit) -> Result<(CanonicalForm, CanonicalForm)> {
    let mut comp = Compiler::coprime(c.algebra.clone())?;
    let mut v = comp.compile_gates(c, &[c.outputs.0, c.outputs.1], None)?;
    let b = v.pop().unwrap();
    let a = v.pop().unwrap();
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{eval_all, parse_circuit};
    use crate::corpus;

    fn e(v: &[u64]) -> Element {
        Element(v.to_vec())
    }

    fn a1() -> Arc<AlgebraSpec> {
        Arc::new(corpus::a1())
    }

    #[test]
    fn projection_form() {
        let c = parse_circuit("circuit T vars 1\ng1 = input 1\noutputs g1 g1\n", a1()).unwrap();
        let f = compile(&c, 0).unwrap();
        assert_eq!(f.lambda, vec![Scalar(vec![1])]);
        assert_eq!(f.alpha, vec![Scalar(vec![1])]);
        assert!(f.hat.terms.is_empty());
        assert_eq!(f.u_const, e(&[0]));
    }

    #[test]
    fn diagonal_of_f() {
        let c = parse_circuit(
            "circuit T vars 1\ng1 = input 1\ng2 = f g1 g1\noutputs g2 g1\n",
            a1(),
        )
        .unwrap();
        let f = compile(&c, 1).unwrap();
        assert_eq!(f.lambda, vec![Scalar(vec![2])]);
        assert_eq!(f.alpha, vec![Scalar(vec![0])]);
        assert_eq!(f.u_const, e(&[0]));
        assert_eq!(f.hat.eval(&[0]), vec![0]);
        assert_eq!(f.hat.eval(&[1]), vec![1]);
    }

    #[test]
    fn constant_gate() {
        let c = parse_circuit(
            "circuit T vars 1\ng1 = const ((1)|(0))\noutputs g1 g1\n",
            a1(),
        )
        .unwrap();
        let f = compile(&c, 0).unwrap();
        assert_eq!(f.lambda, vec![Scalar(vec![0])]);
        assert_eq!(f.alpha, vec![Scalar(vec![0])]);
        assert_eq!(f.hat.const_l, vec![1]);
        assert!(f.hat.terms.is_empty());
    }

    #[test]
    fn subtract_symmetric_f() {
        let c = parse_circuit(
            "circuit S vars 2\ng1 = input 1\ng2 = input 2\ng3 = f g1 g2\ng4 = f g2 g1\noutputs g3 g4\n",
            a1(),
        )
        .unwrap();
        let (a, b) = compile_outputs(&c).unwrap();
        let d = subtract(&a, &b);
        assert!(d.linear_is_zero());
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(d.hat.eval(&[x, y]), vec![0]);
            }
        }
        let same = subtract(&a, &a);
        assert!(same.linear_is_zero());
        assert!(same.hat.terms.is_empty());
    }

    #[test]
    fn forms_match_evaluation_on_nested_circuit() {
        let alg = Arc::new(corpus::z2z3_z5());
        let c = parse_circuit(
            "circuit N vars 2\nx = input 1\ny = input 2\na = f x y\nb = s a x\nk = const ((3)|(1,2))\nc = h b\nd = f c k\noutputs d b\n",
            alg.clone(),
        )
        .unwrap();
        let (fa, fb) = compile_outputs(&c).unwrap();
        let pairs: Vec<(LElement, UElement)> = alg
            .l
            .elements()
            .flat_map(|l| alg.u.elements().map(move |u| (l.clone(), u)))
            .collect();
        for p in &pairs {
            for q in &pairs {
                let asg = vec![p.clone(), q.clone()];
                let vals = eval_all(&c, &asg).unwrap();
                assert_eq!(fa.eval(&asg), vals[c.outputs.0]);
                assert_eq!(fb.eval(&asg), vals[c.outputs.1]);
            }
        }
    }
}
