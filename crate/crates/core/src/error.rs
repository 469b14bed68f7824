use std::io;

use crate::anisotropy::Model;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dielectric matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("eigenvalue {value} is outside the admissible range of the {model:?} model")]
    EigenvalueOutOfRange { value: f64, model: Model },
    #[error("potential evaluated at the origin")]
    OriginSingular,
    #[error("grid too small: fraction {fraction:e} of the mass lies in the outer 10% shell")]
    GridTooSmall { fraction: f64 },
    #[error("rearrangement requires a nonnegative field")]
    NegativeInput,
    #[error("field has zero mass")]
    ZeroMass,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported file version {0:?}")]
    VersionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no binding: energy {energy:e} never went below -1e-8")]
    NoBinding { energy: f64 },
    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("solution fails its symmetry test (asymmetry {asymmetry:e})")]
    NotSymmetricSolution { asymmetry: f64 },
    #[error("eigensolver stalled after {iterations} iterations (max residual {residual:e})")]
    EigenStall { iterations: usize, residual: f64 },
    #[error("axis {axis} does not satisfy the Steiner monotonicity criterion")]
    CriterionFailed { axis: usize },
    #[error("coincident ring: v_n is singular at r = r', Z = 0")]
    SingularConfiguration,
    #[error("series converges too slowly (t = {t})")]
    SlowConvergence { t: f64 },
    #[error("profile is not cylindrical (azimuthal variance {variance:e})")]
    NotCylindrical { variance: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
