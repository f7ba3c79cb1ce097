use num_complex::Complex64;
use thiserror::Error;

use crate::systems::Equation;

/// Failure modes shared by the numerical modules.
///
/// Positions are reported in `f64` whatever scalar the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {0} is within tolerance of a lattice pole")]
    PoleAt(Complex64),
    #[error("bad elliptic context: {0}")]
    BadContext(String),
    #[error("f_tau undefined at half period {0} (wp' vanishes)")]
    HalfPeriodSingularity(Complex64),
    #[error("equation {0} has no printed parameter relation")]
    UnsupportedEquation(Equation),
    #[error("Hamiltonian term singular at {0}")]
    CoordinateSingularity(String),
    #[error("coordinate map singular at {0}")]
    MapSingularity(Complex64),
    #[error("Newton iteration did not converge from seed {0}")]
    NoConvergence(Complex64),
    #[error("value {0} lies on a branch point of the inverse map")]
    BranchCut(Complex64),
    #[error("two-body collision between components {0} and {1}")]
    TwoBodyCollision(usize, usize),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("missing parameters for {equation}: required {required:?}")]
    MissingParameter { equation: Equation, required: Vec<&'static str> },
    #[error("integration path passes within {distance:.3e} of fixed singularity {point}")]
    SingularPath { point: Complex64, distance: f64 },
    #[error("step limit of {0} reached")]
    MaxSteps(usize),
    #[error("trajectory too sparse: {0} samples, need at least {1}")]
    TooSparse(usize, usize),
    #[error("degeneration schedule mismatch: {0}")]
    ScheduleMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
