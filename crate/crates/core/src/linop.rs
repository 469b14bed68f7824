//! Linearized operator at a positive solution and its parity-sector spectra.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anisotropy::CanonicalPotential;
use crate::convolution::{Convolver, KernelScheme};
use crate::eigen::{lobpcg, EigenOptions};
use crate::energy::{to_unit_normalization, MinimizeResult};
use crate::error::{Error, Result};
use crate::field::{project_parity_values, reflect_values, Field, ParitySector};
use crate::spectral::{dot, SpectralOps};

/// Largest reflection asymmetry accepted for a solution used as `Q`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

/// `L xi = -Lap xi + xi - (V * Q^2) xi - 2 Q (V * (Q xi))`.
#[derive(Debug)]
pub struct LinearizedOp {
    q: Field,
    pot: CanonicalPotential,
    conv: Convolver,
    ops: SpectralOps,
    /// `-(V * Q^2)`.
    phi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub sector: ParitySector,
    pub eigenvalues: Vec<f64>,
    pub eigenfields: Vec<Field>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorCount {
    pub sector: String,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub zero_count: usize,
    /// Overlap of the lowest eigenfield with the matching derivative of `Q`
    /// (singly-odd sectors only).
    pub derivative_overlap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelCensus {
    pub tol_zero: f64,
    pub sectors: Vec<SectorCount>,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityReport {
    pub axis: usize,
    pub trials: usize,
    /// Smallest value of `-W xi` over the sampled half space.
    pub min_value: f64,
    /// Fraction of sampled half-space nodes with a strictly positive value.
    pub positive_fraction: f64,
}

/// Centers the minimizer and maps it to the unit normalization.
pub fn unit_solution(res: &MinimizeResult) -> Result<Field> {
    res.require_converged()?;
    let centered = MinimizeResult { psi: res.psi.center()?, ..res.clone() };
    Ok(to_unit_normalization(&centered)?.0)
}

impl LinearizedOp {
    /// `q` must be positive, even in every axis and unit normalized.
    pub fn new(pot: &CanonicalPotential, q: Field) -> Result<Self> {
        let asymmetry = (0..3).map(|a| q.reflection_asymmetry(a)).fold(0.0, f64::max);
        if asymmetry > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetricSolution { asymmetry });
        }
        let q = q.project_parity(ParitySector::EVEN);
        if q.min() < -1e-8 * q.max() {
            return Err(Error::Invalid(format!("solution has negative values down to {:e}", q.min())));
        }
        let grid = *q.grid();
        let conv = Convolver::new(pot, &grid, KernelScheme::default());
        let rho: Vec<f64> = q.values().iter().map(|v| v * v).collect();
        let phi = conv.apply(&rho)?.into_iter().map(|v| -v).collect();
        Ok(Self { q, pot: *pot, conv, ops: SpectralOps::new(&grid), phi })
    }

    pub fn from_minimizer(pot: &CanonicalPotential, res: &MinimizeResult) -> Result<Self> {
        Self::new(pot, unit_solution(res)?)
    }

    pub fn q(&self) -> &Field {
        &self.q
    }

    pub fn potential(&self) -> &CanonicalPotential {
        &self.pot
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn apply(&self, xi: &Field) -> Result<Field> {
        if !xi.grid().same_as(self.q.grid()) {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", xi.grid(), self.q.grid())));
        }
        Field::new(*xi.grid(), self.apply_values(xi.values()))
    }

    pub fn apply_values(&self, xi: &[f64]) -> Vec<f64> {
        let q = self.q.values();
        let lap = self.ops.neg_laplacian(xi);
        let qxi: Vec<f64> = q.iter().zip(xi).map(|(a, b)| a * b).collect();
        let w = self.conv.apply_unchecked(&qxi);
        (0..xi.len()).map(|i| lap[i] + xi[i] + self.phi[i] * xi[i] - 2.0 * q[i] * w[i]).collect()
    }

    /// `(-Lap + 1)^-1`.
    fn precondition(&self, v: &[f64]) -> Vec<f64> {
        self.ops.apply_multiplier(v, |a, b, c| 1.0 / (a * a + b * b + c * c + 1.0))
    }

    pub fn derivative(&self, axis: usize) -> Field {
        let d = self.ops.derivative(self.q.values(), axis);
        Field::new(*self.q.grid(), d).expect("finite derivative")
    }

    /// `||L d_a Q|| / ||d_a Q||`.
    pub fn translation_residual(&self, axis: usize) -> f64 {
        let d = self.derivative(axis);
        let ld = self.apply_values(d.values());
        (dot(&ld, &ld) / dot(d.values(), d.values())).sqrt()
    }

    pub fn max_translation_residual(&self) -> f64 {
        (0..3).map(|a| self.translation_residual(a)).fold(0.0, f64::max)
    }

    /// Lowest `count` eigenpairs of `L` on the parity sector.
    pub fn sector_lowest(&self, sector: ParitySector, count: usize) -> Result<SectorSpectrum> {
        self.sector_lowest_with(sector, count, &EigenOptions::default())
    }

    pub fn sector_lowest_with(&self, sector: ParitySector, count: usize, opts: &EigenOptions) -> Result<SectorSpectrum> {
        let grid = *self.q.grid();
        let project = |v: &[f64]| project_parity_values(&grid, v, sector);
        let start = match sector.single_odd_axis() {
            Some(a) => vec![self.derivative(a).into_values()],
            None if sector == ParitySector::EVEN => vec![self.q.values().to_vec()],
            None => vec![],
        };
        let pairs = lobpcg(
            grid.len(),
            count,
            |v| project(&self.apply_values(v)),
            |v| self.precondition(v),
            project,
            &start,
            opts,
        )?;
        let eigenfields = pairs.vectors.into_iter().map(|v| Field::new(grid, v)).collect::<Result<Vec<_>>>()?;
        Ok(SectorSpectrum {
            sector,
            eigenvalues: pairs.values,
            eigenfields,
            residuals: pairs.residuals,
            iterations: pairs.iterations,
        })
    }

    /// Counts eigenvalues with `|value| < tol_zero` among the lowest `per_sector`
    /// of each sector. `tol_zero = None` uses ten times the translation residual.
    pub fn kernel_census(&self, tol_zero: Option<f64>, per_sector: usize) -> Result<KernelCensus> {
        let tol_zero = tol_zero.unwrap_or_else(|| 10.0 * self.max_translation_residual());
        let mut sectors = Vec::with_capacity(8);
        for sector in ParitySector::all() {
            let spec = self.sector_lowest(sector, per_sector)?;
            let zero_count = spec.eigenvalues.iter().filter(|v| v.abs() < tol_zero).count();
            let derivative_overlap = sector.single_odd_axis().map(|a| {
                let d = self.derivative(a);
                let e = &spec.eigenfields[0];
                dot(d.values(), e.values()).abs() / (dot(d.values(), d.values()) * dot(e.values(), e.values())).sqrt()
            });
            sectors.push(SectorCount {
                sector: sector.label(),
                eigenvalues: spec.eigenvalues,
                residuals: spec.residuals,
                zero_count,
                derivative_overlap,
            });
        }
        let total = sectors.iter().map(|s| s.zero_count).sum();
        Ok(KernelCensus { tol_zero, sectors, total })
    }

    /// `-W xi = 2 Q (V * (Q xi_odd))` on the half space `x_axis > 0`, where
    /// `xi_odd` is the odd extension of a random nonnegative `xi` supported
    /// there. Nodes with `|x| > sample_radius` are left out of the statistics.
    pub fn positivity_probe(&self, axis: usize, trials: usize, seed: u64, sample_radius: f64) -> Result<PositivityReport> {
        if !self.pot.steiner_criteria().axes[axis] {
            return Err(Error::CriterionFailed { axis });
        }
        let grid = *self.q.grid();
        let q = self.q.values();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min_value = f64::INFINITY;
        let mut positive = 0usize;
        let mut sampled = 0usize;
        for _ in 0..trials {
            let half: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let p = grid.point(i);
                    let r2: f64 = p.iter().map(|x| x * x).sum();
                    if p[axis] > 0.0 && r2.sqrt() < sample_radius && rng.gen_bool(0.3) {
                        rng.gen_range(0.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let mirrored = reflect_values(&grid, &half, axis);
            let odd: Vec<f64> = half.iter().zip(&mirrored).map(|(a, b)| a - b).collect();
            let qxi: Vec<f64> = q.iter().zip(&odd).map(|(a, b)| a * b).collect();
            let w = self.conv.apply_unchecked(&qxi);
            for i in 0..grid.len() {
                let p = grid.point(i);
                let r2: f64 = p.iter().map(|x| x * x).sum();
                if p[axis] > 0.0 && r2.sqrt() < sample_radius {
                    let v = 2.0 * q[i] * w[i];
                    min_value = min_value.min(v);
                    sampled += 1;
                    if v > 0.0 {
                        positive += 1;
                    }
                }
            }
        }
        let positive_fraction = if sampled == 0 { 0.0 } else { positive as f64 / sampled as f64 };
        Ok(PositivityReport { axis, trials, min_value, positive_fraction })
    }
}

/// Rayleigh quotient `<xi, L xi> / <xi, xi>`.
pub fn rayleigh_quotient(op: &LinearizedOp, xi: &Field) -> Result<f64> {
    let l = op.apply(xi)?;
    Ok(dot(xi.values(), l.values()) / dot(xi.values(), xi.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{minimize, Init, SolverConfig};
    use crate::grid::Grid3;
    use std::sync::OnceLock;

    fn isotropic_op() -> &'static LinearizedOp {
        static OP: OnceLock<LinearizedOp> = OnceLock::new();
        OP.get_or_init(|| {
            let pot = CanonicalPotential::isotropic(0.3);
            let grid = Grid3::cubic(40, 9.0).unwrap();
            let cfg = SolverConfig { lambda: 4.0, tol_residual: 1e-10, init: Init::Gaussian { sigma: 1.0 }, ..Default::default() };
            let res = minimize(&pot, &grid, &cfg).unwrap();
            LinearizedOp::from_minimizer(&pot, &res).unwrap()
        })
    }

    fn random_field(grid: crate::grid::Grid3, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let envelope = |p: [f64; 3]| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 8.0).exp();
        let values = (0..grid.len()).map(|i| rng.gen_range(-1.0..1.0) * envelope(grid.point(i))).collect();
        Field::new(grid, values).unwrap()
    }

    #[test]
    fn self_adjoint_and_sector_reducing() {
        let op = isotropic_op();
        let grid = *op.q().grid();
        for seed in 0..5 {
            let a = random_field(grid, 2 * seed);
            let b = random_field(grid, 2 * seed + 1);
            let la = op.apply(&a).unwrap();
            let lb = op.apply(&b).unwrap();
            let lhs = dot(a.values(), lb.values());
            let rhs = dot(la.values(), b.values());
            assert!((lhs - rhs).abs() <= 1e-10 * a.l2_norm() * b.l2_norm() / grid.cell_volume().sqrt().powi(2));
            for sector in ParitySector::all() {
                let pa = op.apply(&a.project_parity(sector)).unwrap();
                let ap = op.apply(&a).unwrap().project_parity(sector);
                let diff: f64 = pa.values().iter().zip(ap.values()).map(|(x, y)| (x - y).powi(2)).sum();
                assert!(diff.sqrt() < 1e-10 * dot(a.values(), a.values()).sqrt());
            }
        }
        assert_eq!(op.apply(&Field::zeros(grid)).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn solution_direction_is_negative() {
        let op = isotropic_op();
        let lq = op.apply(op.q()).unwrap();
        assert!(lq.values().iter().all(|&v| v < 0.0));
        assert!(rayleigh_quotient(op, op.q()).unwrap() < 0.0);
        assert!(op.phi().iter().all(|&v| v < 0.0));
    }

    #[test]
    fn translation_modes_are_null() {
        let op = isotropic_op();
        for a in 0..3 {
            assert!(op.translation_residual(a) < 5e-4, "{}", op.translation_residual(a));
        }
        let spec = op.sector_lowest(ParitySector::from_signs([-1, 1, 1]), 1).unwrap();
        assert!(spec.eigenvalues[0].abs() < 5e-4);
        assert!(spec.residuals[0] < 1e-6);
        let even = op.sector_lowest(ParitySector::EVEN, 1).unwrap();
        assert!(even.eigenvalues[0] <= rayleigh_quotient(op, op.q()).unwrap());
    }

    #[test]
    fn asymmetric_solution_is_rejected() {
        let grid = Grid3::cubic(16, 6.0).unwrap();
        let q = Field::from_fn(grid, |p| (-((p[0] - 0.7).powi(2) + p[1] * p[1] + p[2] * p[2])).exp()).unwrap();
        let pot = CanonicalPotential::isotropic(0.3);
        assert!(matches!(LinearizedOp::new(&pot, q), Err(Error::NotSymmetricSolution { .. })));
    }

    #[test]
    fn positivity_probe_isotropic() {
        let op = isotropic_op();
        let radius = 0.6 * op.q().grid().half_len[0];
        let report = op.positivity_probe(0, 3, 11, radius).unwrap();
        assert_eq!(report.positive_fraction, 1.0, "{report:?}");
        assert!(report.min_value > 0.0);
    }

    #[test]
    fn positivity_probe_requires_criterion() {
        let grid = Grid3::cubic(16, 6.0).unwrap();
        let q = Field::from_fn(grid, |p| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp()).unwrap();
        let pot = CanonicalPotential::new(crate::anisotropy::Model::Full, [0.9, 0.9, 0.5]).unwrap();
        let op = LinearizedOp::new(&pot, q).unwrap();
        assert!(matches!(op.positivity_probe(2, 1, 0, 3.0), Err(Error::CriterionFailed { axis: 2 })));
        assert!(op.positivity_probe(0, 1, 0, 3.0).is_ok());
    }
}
