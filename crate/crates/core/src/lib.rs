//! Painlevé equations in polynomial Hamiltonian form, their Calogero-side
//! normal forms (Inozemtsev models and degenerations, rank 1 and rank ℓ),
//! the canonical maps between the two sides, an adaptive integrator, and a
//! numerical verification harness.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the
//! verification suites and the CLI use.

pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod scalar;
pub mod systems;
pub mod transforms;
pub mod verify;

pub use elliptic::{EllipticContext, FDerivatives};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scalar::{Cx, Real};
pub use systems::{AuxParams, Equation, PainleveParams, ParamSet, PhaseState, Side, SystemDescriptor, TimeGauge};

pub type EllipticContext64 = EllipticContext<f64>;
pub type EllipticContext32 = EllipticContext<f32>;
pub type PhaseState64 = PhaseState<f64>;
pub type SystemDescriptor64 = SystemDescriptor<f64>;
pub type AuxParams64 = AuxParams<f64>;
pub type PainleveParams64 = PainleveParams<f64>;
