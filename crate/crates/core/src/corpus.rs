// SPDX-License-Identifier: Apache-2.0

//! Algebras shipped with the crate, used by tests, benchmarks and the CLI.

use crate::algebra::AlgebraSpec;
use crate::format::parse_algebra;

pub const A1: &str = include_str!("../corpus/a1.alg");
pub const Z3_Z2: &str = include_str!("../corpus/z3_z2.alg");
pub const Z4_Z3: &str = include_str!("../corpus/z4_z3.alg");
pub const Z2Z3_Z5: &str = include_str!("../corpus/z2z3_z5.alg");
pub const Z9_Z2: &str = include_str!("../corpus/z9_z2.alg");
pub const Z6_Z2: &str = include_str!("../corpus/z6_z2.alg");
pub const Z2_Z6: &str = include_str!("../corpus/z2_z6.alg");

fn load(text: &str) -> AlgebraSpec {
    parse_algebra(text).expect("bundled algebra parses")
}

/// `U = Z2`, `L = Z3`.
pub fn a1() -> AlgebraSpec {
    load(A1)
}

pub fn z3_z2() -> AlgebraSpec {
    load(Z3_Z2)
}

pub fn z4_z3() -> AlgebraSpec {
    load(Z4_Z3)
}

/// `U = Z2 × Z3`, `L = Z5`.
pub fn z2z3_z5() -> AlgebraSpec {
    load(Z2Z3_Z5)
}

pub fn z9_z2() -> AlgebraSpec {
    load(Z9_Z2)
}

/// `U = Z2 × Z3`, `L = Z2` (shared prime 2).
pub fn z6_z2() -> AlgebraSpec {
    load(Z6_Z2)
}

/// `U = Z2`, `L = Z2 × Z3` (shared prime 2).
pub fn z2_z6() -> AlgebraSpec {
    load(Z2_Z6)
}

pub fn coprime() -> Vec<AlgebraSpec> {
    vec![a1(), z3_z2(), z4_z3(), z2z3_z5(), z9_z2()]
}

pub fn all() -> Vec<AlgebraSpec> {
    let mut v = coprime();
    v.push(z6_z2());
    v.push(z2_z6());
    v
}

/// Looks up a bundled algebra by file stem or algebra name (case-insensitive).
pub fn by_name(name: &str) -> Option<AlgebraSpec> {
    let key = name.to_ascii_lowercase().replace(['-', '_'], "");
    all()
        .into_iter()
        .zip(["a1", "z3z2", "z4z3", "z2z3z5", "z9z2", "z6z2", "z2z6"])
        .find_map(|(alg, stem)| {
            (alg.name.to_ascii_lowercase() == key || stem == key).then_some(alg)
        })
}
