//! Fixtures shared by the benchmarks.

use polaron_core::{CanonicalPotential, Field, Grid3, Model};

pub fn anisotropic() -> CanonicalPotential {
    CanonicalPotential::new(Model::Full, [0.6, 0.6, 0.4]).expect("valid potential")
}

pub fn gaussian(grid: Grid3, sigma: f64) -> Field {
    Field::from_fn(grid, |p| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (2.0 * sigma * sigma)).exp())
        .expect("finite field")
}
