//! Free-space convolution with the anisotropic potential.
//!
//! Densities live on the `n`-point box; the product with the kernel is taken
//! on the doubled `2n` grid so that no periodic image reaches the box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anisotropy::{CanonicalPotential, CoulombTerm};
use crate::error::{Error, Result};
use crate::fft::{fft_friendly, RealFft3};
use crate::grid::{wavenumbers, Grid3};
use crate::spectral::dot;

/// Mass fraction allowed in the outer 10% shell of the box.
pub const SHELL_FRACTION_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelScheme {
    /// Band-limited kernel of the truncated potential, sampled in Fourier
    /// space on an oversampled period and brought back to real space.
    #[default]
    TruncatedSpectral,
    /// Point samples of the potential with the origin cell replaced by a
    /// `16^3` midpoint cell average.
    CellAverage,
}

#[derive(Debug)]
pub struct Convolver {
    grid: Grid3,
    plan: RealFft3,
    /// Transform of `h^3 K` on the doubled grid, already divided by its size.
    kernel_hat: Vec<f64>,
    scheme: KernelScheme,
}

impl Convolver {
    pub fn new(pot: &CanonicalPotential, grid: &Grid3, scheme: KernelScheme) -> Self {
        let big = grid.n.map(|n| 2 * n);
        let kernel = match scheme {
            KernelScheme::TruncatedSpectral => truncated_spectral_kernel(&pot.terms(), grid),
            KernelScheme::CellAverage => cell_average_kernel(&pot.terms(), grid),
        };
        let plan = RealFft3::new(big);
        let scale = 1.0 / big.iter().product::<usize>() as f64;
        let kernel_hat = plan.forward(&kernel).into_iter().map(|c| c.re * scale).collect();
        Self { grid: *grid, plan, kernel_hat, scheme }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn scheme(&self) -> KernelScheme {
        self.scheme
    }

    /// `V * rho`, refusing densities that are not contained in the box.
    pub fn apply(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let fraction = outer_shell_fraction(&self.grid, rho);
        if fraction > SHELL_FRACTION_LIMIT {
            return Err(Error::GridTooSmall { fraction });
        }
        Ok(self.apply_unchecked(rho))
    }

    pub fn apply_unchecked(&self, rho: &[f64]) -> Vec<f64> {
        assert_eq!(rho.len(), self.grid.len());
        let mut spec = self.plan.forward_embedded(rho, self.grid.n);
        spec.par_iter_mut().zip(self.kernel_hat.par_iter()).for_each(|(s, k)| *s *= *k);
        self.plan.inverse_extract(spec, self.grid.n)
    }

    /// `J(f, h) = 1/2 <f, V * h>`.
    pub fn riesz_j(&self, f: &[f64], h: &[f64]) -> Result<f64> {
        let vh = self.apply(h)?;
        Ok(0.5 * dot(f, &vh) * self.grid.cell_volume())
    }
}

/// Fraction of `sum |rho|` carried by points with `|x_a| > 0.9 L_a` on some axis.
pub fn outer_shell_fraction(grid: &Grid3, rho: &[f64]) -> f64 {
    let (mut total, mut shell) = (0.0, 0.0);
    for (idx, v) in rho.iter().enumerate() {
        let a = v.abs();
        total += a;
        if grid.in_outer_shell(idx) {
            shell += a;
        }
    }
    if total > 0.0 {
        shell / total
    } else {
        0.0
    }
}

/// Maps a doubled-grid index to the signed lattice offset, `None` on the
/// unused middle plane.
fn signed_offset(b: usize, n: usize) -> Option<isize> {
    use std::cmp::Ordering::*;
    match b.cmp(&n) {
        Less => Some(b as isize),
        Equal => None,
        Greater => Some(b as isize - 2 * n as isize),
    }
}

fn fill_doubled<F>(grid: &Grid3, value: F) -> Vec<f64>
where
    F: Fn([isize; 3]) -> f64 + Sync,
{
    let n = grid.n;
    let big = n.map(|v| 2 * v);
    let mut out = vec![0.0; big.iter().product()];
    out.par_chunks_mut(big[0] * big[1]).enumerate().for_each(|(c, plane)| {
        let Some(mz) = signed_offset(c, n[2]) else { return };
        for b in 0..big[1] {
            let Some(my) = signed_offset(b, n[1]) else { continue };
            for a in 0..big[0] {
                let Some(mx) = signed_offset(a, n[0]) else { continue };
                plane[a + big[0] * b] = value([mx, my, mz]);
            }
        }
    });
    out
}

fn cell_average_kernel(terms: &[CoulombTerm], grid: &Grid3) -> Vec<f64> {
    let h = grid.spacing();
    let vol = grid.cell_volume();
    let origin: f64 = terms.iter().map(|t| t.cell_average(h, 16)).sum();
    fill_doubled(grid, |m| {
        if m == [0, 0, 0] {
            return origin * vol;
        }
        let x = [m[0] as f64 * h[0], m[1] as f64 * h[1], m[2] as f64 * h[2]];
        terms.iter().map(|t| t.eval(x)).sum::<f64>() * vol
    })
}

fn truncated_spectral_kernel(terms: &[CoulombTerm], grid: &Grid3) -> Vec<f64> {
    let h = grid.spacing();
    let l = grid.half_len;
    // every separation inside [-2L, 2L]^3 must lie inside each truncation ball
    let radii: Vec<f64> = terms
        .iter()
        .map(|t| 2.0 * (0..3).map(|a| (l[a] / t.scale[a]).powi(2)).sum::<f64>().sqrt() * (1.0 + 1e-9))
        .collect();
    let mut fine = [0usize; 3];
    for a in 0..3 {
        let reach = terms.iter().zip(&radii).map(|(t, r)| t.scale[a] * r).fold(0.0, f64::max);
        let period = 2.5 * l[a] + reach;
        let mut m = fft_friendly((period / h[a]).ceil() as usize);
        if m % 2 == 1 {
            m = fft_friendly(m + 1);
        }
        fine[a] = m.max(2 * grid.n[a]);
    }
    let k: [Vec<f64>; 3] = [0, 1, 2].map(|a| wavenumbers(fine[a], fine[a] as f64 * h[a]));
    let plan = RealFft3::new(fine);
    let [m0, n1, _] = plan.spectral_shape();
    let mut spec = vec![rustfft::num_complex::Complex64::new(0.0, 0.0); plan.spectral_len()];
    spec.par_chunks_mut(m0 * n1).enumerate().for_each(|(c, plane)| {
        for b in 0..n1 {
            for a in 0..m0 {
                let kv = [k[0][a].abs(), k[1][b], k[2][c]];
                let g: f64 = terms.iter().zip(&radii).map(|(t, &r)| t.fourier_truncated(kv, r)).sum();
                plane[a + m0 * b].re = g;
            }
        }
    });
    // h^3 K[m] is the normalized inverse DFT of the sampled transform
    let samples = plan.inverse(spec);
    let scale = 1.0 / fine.iter().product::<usize>() as f64;
    let wrap = |m: isize, n: usize| m.rem_euclid(n as isize) as usize;
    fill_doubled(grid, |m| {
        samples[wrap(m[0], fine[0]) + fine[0] * (wrap(m[1], fine[1]) + fine[1] * wrap(m[2], fine[2]))] * scale
    })
}

/// Convenience wrapper building a one-off [`Convolver`].
pub fn convolve_v(pot: &CanonicalPotential, grid: &Grid3, rho: &[f64]) -> Result<Vec<f64>> {
    Convolver::new(pot, grid, KernelScheme::default()).apply(rho)
}
