//! Invariants of Levi-degenerate, 2-nondegenerate real hypersurfaces in C^3.
//!
//! A hypersurface is given as a graph `Im w = F(z1, z2, zb1, zb2, Re w)`.
//! The crate builds the adapted frame of CR vector fields as truncated power
//! series at a base point, evaluates the primary invariants `J` and `W`,
//! the normalized structure-group parameters and a set of identity checks.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dsl;
pub mod error;
pub mod field;
pub mod frame;
pub mod invariants;
pub mod scalar;
pub mod series;
pub mod verify;

pub use error::{EvalError, ParseError, SeriesError, Span};
pub use scalar::{GaussRational, Scalar, C64};
pub use series::{Base, Context, Germ, Var};
