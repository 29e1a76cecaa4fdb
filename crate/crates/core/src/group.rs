// SPDX-License-Identifier: Apache-2.0

//! Finite abelian groups presented as products of prime-power cyclic groups,
//! their elements, and diagonal scalars acting on them.

use std::fmt;

use num_integer::Integer;

use crate::error::{Error, Result};

/// One cyclic factor `Z_{p^k}`. An exponent of zero denotes the trivial group;
/// such blocks only appear while the constancy recursion shrinks a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    pub prime: u64,
    pub exp: u32,
}

impl Block {
    pub fn modulus(&self) -> u64 {
        self.prime.pow(self.exp)
    }
}

/// `Z_{p_1^{k_1}} × … × Z_{p_m^{k_m}}`, blocks in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GroupShape {
    blocks: Vec<Block>,
    moduli: Vec<u64>,
}

/// Residue tuple, one entry per block of the owning [`GroupShape`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Element(pub Vec<u64>);

pub type UElement = Element;
pub type LElement = Element;

/// Diagonal scalar: block `j` of the image depends only on block `j` of the argument.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Scalar(pub Vec<u64>);

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Multiplicative inverse of `a` modulo `m`, if it exists. Everything is a unit mod 1.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let eg = (a as i128 % m as i128).extended_gcd(&(m as i128));
    if eg.gcd != 1 {
        return None;
    }
    Some(eg.x.rem_euclid(m as i128) as u64)
}

/// p-adic valuation of `x` inside `Z_{p^k}`; zero has valuation `k`.
pub fn valuation(x: u64, p: u64, k: u32) -> u32 {
    if x == 0 {
        return k;
    }
    let mut v = 0;
    let mut x = x;
    while x.is_multiple_of(p) && v < k {
        x /= p;
        v += 1;
    }
    v
}

impl GroupShape {
    /// Validated constructor used for user input: every base prime, every exponent positive.
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        for b in &blocks {
            if !is_prime(b.prime) || b.exp == 0 {
                return Err(Error::NonPrime {
                    line: 0,
                    base: b.prime,
                    exp: b.exp,
                });
            }
        }
        Ok(Self::from_blocks(blocks))
    }

    /// Unchecked constructor; allows zero exponents.
    pub(crate) fn from_blocks(blocks: Vec<Block>) -> Self {
        let moduli = blocks.iter().map(Block::modulus).collect();
        GroupShape { blocks, moduli }
    }

    pub fn cyclic(p: u64, k: u32) -> Self {
        Self::from_blocks(vec![Block { prime: p, exp: k }])
    }

    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn modulus(&self, block: usize) -> u64 {
        self.moduli[block]
    }

    pub fn order(&self) -> u64 {
        self.moduli.iter().product()
    }

    /// Distinct primes, ascending.
    pub fn primes(&self) -> Vec<u64> {
        let mut ps: Vec<u64> = self
            .blocks
            .iter()
            .filter(|b| b.exp > 0)
            .map(|b| b.prime)
            .collect();
        ps.sort_unstable();
        ps.dedup();
        ps
    }

    pub fn zero(&self) -> Element {
        Element(vec![0; self.len()])
    }

    pub fn unit(&self, block: usize) -> Element {
        let mut e = self.zero();
        e.0[block] = 1 % self.moduli[block];
        e
    }

    pub fn contains(&self, e: &Element) -> bool {
        e.0.len() == self.len() && e.0.iter().zip(&self.moduli).all(|(x, m)| x < m)
    }

    pub fn reduce(&self, raw: &[i64]) -> Result<Element> {
        self.check_len(raw.len())?;
        Ok(Element(
            raw.iter()
                .zip(&self.moduli)
                .map(|(&x, &m)| x.rem_euclid(m as i64) as u64)
                .collect(),
        ))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                self.len(),
                len
            )));
        }
        Ok(())
    }

    fn check(&self, e: &Element) -> Result<()> {
        self.check_len(e.0.len())?;
        if !self.contains(e) {
            return Err(Error::ShapeMismatch(format!("{e} is not reduced")));
        }
        Ok(())
    }

    pub fn add(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, b))
    }

    pub(crate) fn add_unchecked(&self, a: &Element, b: &Element) -> Element {
        Element(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.moduli)
                .map(|((x, y), m)| (x + y) % m)
                .collect(),
        )
    }

    pub fn neg(&self, a: &Element) -> Result<Element> {
        self.check(a)?;
        Ok(self.neg_unchecked(a))
    }

    pub(crate) fn neg_unchecked(&self, a: &Element) -> Element {
        Element(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(x, m)| (m - x) % m)
                .collect(),
        )
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.sub_unchecked(a, b))
    }

    pub(crate) fn sub_unchecked(&self, a: &Element, b: &Element) -> Element {
        self.add_unchecked(a, &self.neg_unchecked(b))
    }

    pub fn scale(&self, s: &Scalar, a: &Element) -> Result<Element> {
        self.check(a)?;
        self.check_len(s.0.len())?;
        Ok(self.scale_unchecked(s, a))
    }

    pub(crate) fn scale_unchecked(&self, s: &Scalar, a: &Element) -> Element {
        Element(
            a.0.iter()
                .zip(&s.0)
                .zip(&self.moduli)
                .map(|((x, c), m)| x * c % m)
                .collect(),
        )
    }

    /// Position of `e` in lexicographic order (first block most significant).
    pub fn index(&self, e: &Element) -> usize {
        self.index_of(&e.0)
    }

    pub(crate) fn index_of(&self, residues: &[u64]) -> usize {
        residues
            .iter()
            .zip(&self.moduli)
            .fold(0u64, |acc, (x, m)| acc * m + x) as usize
    }

    pub fn element_at(&self, mut idx: usize) -> Element {
        let mut out = vec![0; self.len()];
        for b in (0..self.len()).rev() {
            let m = self.moduli[b] as usize;
            out[b] = (idx % m) as u64;
            idx /= m;
        }
        Element(out)
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.order() as usize).map(move |i| self.element_at(i))
    }

    /// Projection onto a subset of blocks.
    pub fn project(&self, keep: &[usize]) -> GroupShape {
        GroupShape::from_blocks(keep.iter().map(|&b| self.blocks[b]).collect())
    }
}

impl Element {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn project(&self, keep: &[usize]) -> Element {
        Element(keep.iter().map(|&b| self.0[b]).collect())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_residues(f, &self.0)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_residues(f, &self.0)
    }
}

fn write_residues(f: &mut fmt::Formatter<'_>, xs: &[u64]) -> fmt::Result {
    f.write_str("(")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str(")")
}

impl Scalar {
    pub fn identity(shape: &GroupShape) -> Self {
        Scalar(shape.moduli().iter().map(|&m| 1 % m).collect())
    }

    pub fn zero(shape: &GroupShape) -> Self {
        Scalar(vec![0; shape.len()])
    }

    pub fn from_int(shape: &GroupShape, c: i64) -> Self {
        Scalar(
            shape
                .moduli()
                .iter()
                .map(|&m| c.rem_euclid(m as i64) as u64)
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `self ∘ other`, blockwise product.
    pub fn compose(&self, other: &Scalar, shape: &GroupShape) -> Scalar {
        Scalar(
            self.0
                .iter()
                .zip(&other.0)
                .zip(shape.moduli())
                .map(|((a, b), m)| a * b % m)
                .collect(),
        )
    }

    pub fn add(&self, other: &Scalar, shape: &GroupShape) -> Scalar {
        Scalar(
            self.0
                .iter()
                .zip(&other.0)
                .zip(shape.moduli())
                .map(|((a, b), m)| (a + b) % m)
                .collect(),
        )
    }

    pub fn neg(&self, shape: &GroupShape) -> Scalar {
        Scalar(
            self.0
                .iter()
                .zip(shape.moduli())
                .map(|(a, m)| (m - a) % m)
                .collect(),
        )
    }

    pub fn project(&self, keep: &[usize]) -> Scalar {
        Scalar(keep.iter().map(|&b| self.0[b]).collect())
    }
}

/// The scalar `ν` with `ν·p ≡ 1` on every block of `l_shape`.
pub fn inverse_scalar(p: u64, l_shape: &GroupShape) -> Result<Scalar> {
    l_shape
        .moduli()
        .iter()
        .map(|&m| {
            mod_inverse(p % m, m).ok_or(Error::NotCoprime {
                value: p,
                modulus: m,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Scalar)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(bs: &[(u64, u32)]) -> GroupShape {
        GroupShape::new(
            bs.iter()
                .map(|&(prime, exp)| Block { prime, exp })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn blockwise_arithmetic() {
        let g = shape(&[(2, 2), (3, 1)]);
        let s = g.add(&Element(vec![3, 2]), &Element(vec![2, 2])).unwrap();
        assert_eq!(s, Element(vec![1, 1]));
        let z2 = shape(&[(2, 1)]);
        assert_eq!(z2.neg(&Element(vec![1])).unwrap(), Element(vec![1]));
        let z4 = shape(&[(2, 2)]);
        assert_eq!(
            z4.scale(&Scalar(vec![3]), &Element(vec![2])).unwrap(),
            Element(vec![2])
        );
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = shape(&[(2, 2), (3, 1)]);
        assert!(matches!(
            g.add(&Element(vec![1]), &Element(vec![1, 1])),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(g.add(&Element(vec![4, 0]), &Element(vec![0, 0])).is_err());
    }

    #[test]
    fn inverse_scalars() {
        assert_eq!(
            inverse_scalar(2, &shape(&[(3, 1)])).unwrap(),
            Scalar(vec![2])
        );
        assert_eq!(
            inverse_scalar(3, &shape(&[(5, 1)])).unwrap(),
            Scalar(vec![2])
        );
        assert!(matches!(
            inverse_scalar(2, &shape(&[(2, 1)])),
            Err(Error::NotCoprime { .. })
        ));
    }

    #[test]
    fn non_prime_rejected() {
        assert!(matches!(
            GroupShape::new(vec![Block { prime: 4, exp: 1 }]),
            Err(Error::NonPrime { base: 4, .. })
        ));
    }

    #[test]
    fn index_roundtrip() {
        let g = shape(&[(2, 1), (3, 1)]);
        for i in 0..6 {
            assert_eq!(g.index(&g.element_at(i)), i);
        }
        assert_eq!(g.element_at(1), Element(vec![0, 1]));
        assert_eq!(g.element_at(3), Element(vec![1, 0]));
    }

    /// Abelian-group axioms and scalar distributivity, exhaustively for every
    /// group of order at most 64 built from the listed factorizations.
    #[test]
    fn group_axioms_exhaustive() {
        let shapes: Vec<Vec<(u64, u32)>> = vec![
            vec![],
            vec![(2, 1)],
            vec![(2, 2)],
            vec![(2, 3)],
            vec![(3, 1)],
            vec![(3, 2)],
            vec![(5, 1)],
            vec![(7, 1)],
            vec![(2, 1), (2, 1)],
            vec![(2, 1), (3, 1)],
            vec![(2, 2), (3, 1)],
            vec![(2, 1), (2, 2)],
            vec![(3, 1), (3, 1)],
            vec![(2, 1), (2, 1), (2, 1)],
            vec![(2, 6)],
            vec![(2, 1), (2, 1), (2, 1), (2, 1), (2, 1), (2, 1)],
            vec![(2, 2), (2, 2), (2, 2)],
            vec![(3, 1), (3, 1), (7, 1)],
        ];
        for bs in shapes {
            let g = shape(&bs);
            assert!(g.order() <= 64);
            let elems: Vec<_> = g.elements().collect();
            let zero = g.zero();
            // a sample of scalars: identity, -1, 2, and a mixed one
            let mut scalars = vec![
                Scalar::identity(&g),
                Scalar::from_int(&g, -1),
                Scalar::from_int(&g, 2),
            ];
            scalars.push(Scalar(g.moduli().iter().map(|m| 5 % m).collect()));
            for a in &elems {
                assert_eq!(g.add(a, &zero).unwrap(), *a);
                assert_eq!(g.add(a, &g.neg(a).unwrap()).unwrap(), zero);
                for b in &elems {
                    let ab = g.add(a, b).unwrap();
                    assert_eq!(ab, g.add(b, a).unwrap());
                    for s in &scalars {
                        assert_eq!(
                            g.scale(s, &ab).unwrap(),
                            g.add(&g.scale(s, a).unwrap(), &g.scale(s, b).unwrap())
                                .unwrap()
                        );
                    }
                }
            }
            // associativity on a thinned grid keeps the cubic loop cheap
            for a in elems.iter().step_by(3) {
                for b in elems.iter().step_by(2) {
                    for c in &elems {
                        let l = g.add(&g.add(a, b).unwrap(), c).unwrap();
                        let r = g.add(a, &g.add(b, c).unwrap()).unwrap();
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_scalar_exhaustive() {
        for p in 1..=13u64 {
            for l in 2..=100u64 {
                // represent Z_l by its prime-power factors
                let mut blocks = vec![];
                let mut rest = l;
                let mut q = 2;
                while rest > 1 {
                    let mut k = 0;
                    while rest % q == 0 {
                        rest /= q;
                        k += 1;
                    }
                    if k > 0 {
                        blocks.push(Block { prime: q, exp: k });
                    }
                    q += 1;
                }
                let g = GroupShape::new(blocks).unwrap();
                match inverse_scalar(p, &g) {
                    Ok(nu) => {
                        assert_eq!(p.gcd(&l), 1);
                        let prod = nu.compose(&Scalar::from_int(&g, p as i64), &g);
                        assert_eq!(prod, Scalar::identity(&g));
                    }
                    Err(_) => assert!(p.gcd(&l) > 1),
                }
            }
        }
    }
}
