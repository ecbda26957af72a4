//! Entanglement of pure multipartite states through nilpotent polynomials.
//!
//! A state with nonzero vacuum amplitude is written as `F|O⟩`, where `F` is a
//! polynomial in commuting nilpotent raising variables. Its logarithm `f`
//! (the nilpotential) is additive over unentangled parts. Bringing `f` to a
//! canonical form under local SU(2) or SL(2, C) yields the tanglemeter, whose
//! coefficients label orbits.
//!
//! The crate is `no_std` with `alloc`.
#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod canon;
pub mod dynamics;
mod error;
mod fm;
pub mod invariants;
pub mod linalg;
pub mod localops;
pub mod nilring;
pub mod qudit;
pub mod states;
mod tol;

pub use error::{Error, Result};
pub use nilring::{MulRule, NilPoly};
pub use num_complex::Complex64;
pub use states::StateVector;
pub use tol::Tolerances;
