pub mod anisotropy;
pub mod convolution;
pub mod cylinder;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod field;
pub mod fft;
pub mod grid;
pub mod linop;
pub mod oracle;
pub mod spectral;
pub mod verify;

pub use anisotropy::{canonicalize, CanonicalPotential, DielectricSpec, Model, PotentialBounds, SteinerCriteria};
pub use convolution::{Convolver, KernelScheme};
pub use energy::{MinimizeResult, Problem, SolverConfig};
pub use field::{Field, ParitySector};
pub use error::{Error, Result};
pub use grid::Grid3;
