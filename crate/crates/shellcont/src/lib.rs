//! Analytic continuation of Lippmann–Schwinger scattering for the spherical
//! shell potential `V(r) = v0` on `a < r < b` (zero angular momentum).

pub mod continuation;
pub mod eigenfunctions;
pub mod error;
pub mod jost;
pub mod model;
pub mod poles;
pub mod propagators;
pub mod young;
pub mod testspace;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use jost::Sign;
pub use model::{ComplexWaveNumber, PhysicalConfig};
pub use num_complex::Complex64;
