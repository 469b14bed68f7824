//! Cylindrical reduction for potentials with a doubly degenerate spectrum.

pub mod bessel;
pub mod heat;
pub mod kernel;
pub mod operator;
pub mod quadrature;

pub use bessel::{bessel_i, bessel_i_scaled};
pub use kernel::{beta, generating_sum, remark_probe, tn_check, vn, vn_scaled, vn_series, CylinderScales, RemarkReport, SeriesValue};
pub use operator::{CylGrid, CylOperator, CylSolution, CylSpectrum, VnTable};
pub use heat::{heat_kernel_check, heat_kernel_n, HeatKernelReport};
