//! Discretized magnetic Schrödinger, Pauli and Dirac operators on boxes and
//! tori, eigenvalue counting by matrix inertia, Riesz means, the magnetic
//! Weyl coefficient and Shen-type effective fields.
//!
//! Everything numerical is generic over [`Real`]; the `*64` aliases below
//! are the concrete double-precision types most callers want.

pub mod effectivefield;
pub mod error;
pub mod fieldlab;
pub mod grid;
pub mod linalg;
pub mod magop;
pub mod num;
pub mod quad;
pub mod reference;
pub mod sparse;
pub mod speccount;
pub mod tessellate;
pub mod weylcoeff;

pub use error::{
    EffectiveFieldError, FieldError, OperatorError, ReferenceError, SpectralError,
    TessellateError, WeylError,
};
pub use grid::{GridBox, ScalarField, VectorField};
pub use num::{Cplx, Real};
pub use sparse::{HermitianBuilder, SparseHermitian};

/// Library version, echoed into report metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type GridBox64 = GridBox<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type VectorField64 = VectorField<f64>;
pub type SparseHermitian64 = SparseHermitian<f64>;
pub type Tessellation64 = tessellate::Tessellation<f64>;
pub type OperatorSpec64 = magop::OperatorSpec<f64>;
pub type WeylParams64 = weylcoeff::WeylParams<f64>;

pub type GridBox32 = GridBox<f32>;
pub type ScalarField32 = ScalarField<f32>;
pub type VectorField32 = VectorField<f32>;
