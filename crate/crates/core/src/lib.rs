//! Unextendible product bases and rank-4 PPT states on two qutrits.
//!
//! The crate certifies generalized unextendible product bases, reduces five
//! product vectors in `C^3 ⊗ C^3` to a canonical form, locates product
//! vectors in linear subspaces, builds and classifies rank-4 PPT states and
//! enumerates the sign patterns that make the closed-form state positive.

pub mod canonical;
pub mod error;
pub mod gupb;
pub mod harness;
pub mod json;
pub mod linalg;
pub mod poly;
pub mod rng;
pub mod segre;
pub mod signtables;
pub mod states;

pub use error::{Error, Result};
pub use gupb::{GupbCertificate, GupbKind, ProductVector};
pub use linalg::{C64, CMatrix, CVector, Tolerance};
