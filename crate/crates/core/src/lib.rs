//! Exact linear algebra for generalized geometric structures.
//!
//! The crate models the Clifford algebra of `V ⊕ V*` acting on forms
//! `Λ*V*`, the model structures built from pure spinors, octonions and the
//! Cayley form, fiberwise orbit analysis, and a spectral deformation solver
//! on flat tori. Everything is `no_std` with `alloc`; enable `parallel` to
//! spread per-frequency work over a rayon pool.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "parallel"))]
extern crate std;

pub mod clifford;
pub mod error;
pub mod linalg;
pub mod multivector;
pub mod orbit;
pub mod spinrep;
pub mod structures;
pub mod torus;

pub use error::{Error, Result};
pub use linalg::{SubspaceBasis, C64};
pub use multivector::{Basis, FormTuple, Multivector};
