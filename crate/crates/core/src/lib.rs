//! Sandwich semigroups of rectangular matrices over small finite fields.
//!
//! Fix a field GF(q), dimensions m and n, and a matrix A of shape n x m. The
//! set of m x n matrices becomes a semigroup under the sandwich product
//! X * Y = X A Y. This crate constructs these semigroups exactly, computes
//! their regular elements, Green's relations, eggbox pictures, idempotents,
//! and minimal generating sets, and cross-checks every closed-form count
//! against brute-force enumeration at small scale.
//!
//! Organization:
//! - [`field`]: GF(q) arithmetic for q <= 256
//! - [`matrix`]: dense exact matrices, echelon forms, rank factorizations
//! - [`combinatorics`]: q-binomials and exact cardinality formulas
//! - [`psgp`]: generic finite partial semigroups and a brute-force Green's
//!   relation engine, used as the oracle everything else is checked against
//! - [`sandwich`]: the sandwich semigroup itself
//! - [`generators`]: closures, generating sets, and their certificates
//! - [`textio`]: the plain-text matrix exchange format

pub mod combinatorics;
pub mod error;
pub mod field;
pub mod generators;
pub mod matrix;
pub mod psgp;
pub mod sandwich;
pub mod textio;

pub use error::{Error, Result};
pub use field::{Fe, Field};
pub use matrix::Matrix;
pub use sandwich::SandwichContext;
