//! Sparse truncated formal power series in Z₂ⁿ-graded generators.
//!
//! Every generator carries a degree; swapping two homogeneous factors costs
//! the sign (−1)^⟨deg a, deg b⟩. Odd generators square to zero while even
//! generators of nonzero degree do not, so elements are formal series cut at
//! a fixed total order.

mod context;
mod element;
pub mod linalg;
mod matrix;
pub mod render;
mod scalar;
mod subst;

pub use context::{AlgebraContext, Ctx, Generator, MAX_GENERATORS};
pub use element::{Element, Monomial, Series};
pub use matrix::AlgebraMatrix;
pub use scalar::{q, q_from_f64, qi, Scalar, Q};
pub use subst::Substitution;
