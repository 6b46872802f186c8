use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate wave number q = 0 (the regular solution vanishes identically)")]
    DegenerateWaveNumber,

    #[error("singular energy rescale at q = 0")]
    SingularRescale,

    #[error("q = {q} lies within {distance:e} of a Jost zero; use the residue functional")]
    AtPole { q: Complex64, distance: f64 },

    #[error("S-matrix pole at q = {0}")]
    SMatrixPole(Complex64),

    #[error("q = {q} is not a zero of the Jost function (Newton step {step:e})")]
    NotAPole { q: Complex64, step: f64 },

    #[error("suspected multiple zero at q = {0}; only simple zeros are supported")]
    UnsupportedOrder(Complex64),

    #[error("Jost function nearly vanishes on the contour near q = {0}; perturb the rectangle")]
    ZeroOnBoundary(Complex64),

    #[error("pole search did not converge: {0}")]
    NoConvergence(String),

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("tail budget exceeded: {0}")]
    TailBudget(String),

    #[error("norm diverges: {0}")]
    DivergentNorm(String),

    #[error("not defined for {0}")]
    Domain(String),

    #[error("resonance at q = {0} sits in the integration sector and bending is disabled")]
    PoleInSector(Complex64),

    #[error("ill-defined direction: {0}")]
    IllDefined(String),

    #[error("contour deformation refused: {0}")]
    Refused(String),
}
