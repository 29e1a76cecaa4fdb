// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error(
        "line {line}: block modulus {base}^{exp} is not a prime power (base {base} is not prime)"
    )]
    NonPrime { line: usize, base: u64, exp: u32 },

    #[error("op `{op}`: hat table has {found} entries, expected {expected}")]
    TableSize {
        op: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate operation `{0}`")]
    DuplicateOp(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{what}: expected {expected} arguments, got {found}")]
    ArityMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("{value} and {modulus} are not coprime")]
    NotCoprime { value: u64, modulus: u64 },

    #[error("coefficient {value} is not a unit modulo {modulus}")]
    NotInvertible { value: u64, modulus: u64 },

    #[error("general mode needs a weight bound for prime {0} (add `weightbound {0} <s>`)")]
    MissingWeightBound(u64),

    #[error("unknown operation `{0}`")]
    UnknownOp(String),

    #[error("reference to undefined gate `{0}`")]
    DanglingRef(String),

    #[error("gate `{0}` is part of a cycle")]
    Cycle(String),

    #[error("bad constant: {0}")]
    BadConstant(String),

    #[error("input index {index} out of range 1..={n}")]
    InputRange { index: usize, n: usize },

    #[error("exhaustive enumeration of {size} points exceeds the bound {bound}")]
    TooLarge { size: u128, bound: u128 },

    #[error("witness reconstruction failed")]
    ReconstructionFailed,
}
