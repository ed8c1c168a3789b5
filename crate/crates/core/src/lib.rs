//! Z₂ⁿ-graded commutative algebra and graded symplectic geometry on a single
//! formal coordinate chart.

pub mod algebra;
pub mod calculus;
pub mod cli;
pub mod darboux;
pub mod degree;
pub mod dynamics;
pub mod error;
pub mod random;
pub mod symplectic;

pub use algebra::{AlgebraContext, AlgebraMatrix, Element, Q};
pub use degree::{canonical_order, Degree, Parity};
pub use error::{Error, Result};
