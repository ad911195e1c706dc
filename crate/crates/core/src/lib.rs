//! Finite decision procedures for dividing, algebraic closure and free
//! amalgamation in a handful of concrete theories.
//!
//! Structures are finite and multi-sorted ([`structure`]); each theory is a
//! universal class of such structures ([`theory`]). Everything else is built
//! from embedding search and class-membership checks.

#![no_std]

extern crate alloc;

pub mod amalgam;
pub mod canon;
pub mod cyclic;
pub mod diagram;
pub mod embed;
pub mod dividing;
pub mod formula;
pub mod indep;
pub mod literal;
pub mod oracle;
pub mod pattern;
pub mod sop;
pub mod structure;
pub mod theory;
pub mod typespace;

pub use diagram::Diagram;
pub use structure::{Atom, ConstId, Elem, FinStructure, FunId, PartialMap, RelId, Signature, SortId, StructureError};
pub use theory::{builtin, ClassError, ClassViolation, TheoryKind, TheorySpec};
