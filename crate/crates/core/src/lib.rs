// SPDX-License-Identifier: Apache-2.0

//! Equivalence checking for circuits over finite 2-nilpotent algebras `L ⊗ U`.
//!
//! Circuits are compiled gate by gate into a canonical form
//! `(λ, f̂, α, u_0)`; two circuits are compared by checking that the
//! difference of their forms is identically zero. See [`check_equivalence`].

pub mod algebra;
pub mod bench;
pub mod circuit;
pub mod compile;
pub mod corpus;
pub mod eqcheck;
pub mod error;
pub mod format;
pub mod group;
pub mod oracle;
#[cfg(test)]
mod properties;
pub mod wcalc;

pub use algebra::{AlgebraSpec, BasicOperation, Hat, Mode, ResolvedMode};
pub use eqcheck::{check_equivalence, check_with, CheckOptions, CheckReport, Reason, Verdict};
pub use error::{Error, Result};
pub use group::{Block, Element, GroupShape, LElement, Scalar, UElement};
