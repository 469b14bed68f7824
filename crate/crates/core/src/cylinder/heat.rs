//! Heat kernel of `Lap_(n)` on `L^2(r dr dz)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::bessel::bessel_i_scaled;
use super::operator::{radial_stiffness, CylGrid};
use crate::error::{Error, Result};

/// `e^{t Lap_(n)}((r, z), (r', z')) = I_n(r r'/2t) e^{-(r^2 + r'^2 + (z - z')^2)/4t} / (4 sqrt(pi) t^{3/2})`.
pub fn heat_kernel_n(n: u32, t: f64, (r, z): (f64, f64), (rp, zp): (f64, f64)) -> Result<f64> {
    if !(t > 0.0) || !(r > 0.0) || !(rp > 0.0) || !z.is_finite() || !zp.is_finite() {
        return Err(Error::Invalid(format!("heat kernel needs t, r, r' > 0 (t={t}, r={r}, r'={rp})")));
    }
    let x = r * rp / (2.0 * t);
    let gauss = (-((r - rp).powi(2) + (z - zp).powi(2)) / (4.0 * t)).exp();
    Ok(bessel_i_scaled(n, x) * gauss / (4.0 * PI.sqrt() * t.powf(1.5)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatKernelReport {
    pub n: u32,
    pub t: f64,
    pub source: (f64, f64),
    pub nodes: usize,
    pub max_relative_error: f64,
}

/// Compares the closed form with `exp(t A)` of the discrete `Lap_(n)` on an
/// `nr x nz` grid of spacing `h` (z spans the whole line). Nodes at least
/// `margin` cells away from the outer boundaries and where the kernel exceeds
/// `floor` times its peak are compared.
pub fn heat_kernel_check(n: u32, t: f64, size: usize, h: f64, margin: usize, floor: f64) -> Result<HeatKernelReport> {
    if size < 2 * margin + 2 || size % 2 != 0 {
        return Err(Error::Invalid(format!("grid size {size} too small for margin {margin}")));
    }
    let grid = CylGrid::new(size, size, size as f64 * h, size as f64 * h)?;
    let er = SymmetricEigen::new(radial_stiffness(&grid, n));
    let mut kz = DMatrix::zeros(size, size);
    for j in 0..size {
        kz[(j, j)] = 2.0 / (h * h);
        if j + 1 < size {
            kz[(j, j + 1)] = -1.0 / (h * h);
            kz[(j + 1, j)] = -1.0 / (h * h);
        }
    }
    let ez = SymmetricEigen::new(kz);
    let expm = |e: &SymmetricEigen<f64, nalgebra::Dyn>| {
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| (-t * l).exp()));
        &e.eigenvectors * d * e.eigenvectors.transpose()
    };
    let (pr, pz) = (expm(&er), expm(&ez));
    let zc = |j: usize| (j as f64 + 0.5 - size as f64 / 2.0) * h;
    let (src_i, src_j) = (size / 2, size / 2);
    let source = (grid.r(src_i), zc(src_j));
    let mut exact = Vec::new();
    let mut discrete = Vec::new();
    for i in 0..size - margin {
        for j in margin..size - margin {
            let e = heat_kernel_n(n, t, (grid.r(i), zc(j)), source)?;
            let d = pr[(i, src_i)] / (grid.r(i) * h * grid.r(src_i) * h).sqrt() * pz[(j, src_j)] / h;
            exact.push(e);
            discrete.push(d);
        }
    }
    let peak = exact.iter().fold(0.0, |a: f64, &b| a.max(b));
    let mut nodes = 0;
    let mut worst: f64 = 0.0;
    for (e, d) in exact.iter().zip(&discrete) {
        if *e >= floor * peak {
            nodes += 1;
            worst = worst.max((d - e).abs() / e);
        }
    }
    Ok(HeatKernelReport { n, t, source, nodes, max_relative_error: worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_positive() {
        let a = heat_kernel_n(2, 0.3, (1.2, -0.4), (0.7, 0.9)).unwrap();
        let b = heat_kernel_n(2, 0.3, (0.7, 0.9), (1.2, -0.4)).unwrap();
        assert!(a > 0.0 && (a - b).abs() <= 1e-15 * a);
        assert!(heat_kernel_n(0, 0.0, (1.0, 0.0), (1.0, 0.0)).is_err());
    }

    #[test]
    fn matches_projected_3d_kernel() {
        // int (4 pi t)^-3/2 e^{-|x - x'|^2/4t} Y_n(theta') d theta' over the ring
        let (n, t, (r, z), (rp, zp)): (u32, f64, (f64, f64), (f64, f64)) = (3, 0.2, (0.9, 0.1), (1.1, -0.2));
        let m = 20000;
        let mut s = 0.0;
        for k in 0..m {
            let th = 2.0 * PI * k as f64 / m as f64;
            let d2 = r * r + rp * rp - 2.0 * r * rp * th.cos() + (z - zp).powi(2);
            s += (-d2 / (4.0 * t)).exp() * (f64::from(n) * th).cos();
        }
        let projected = s * 2.0 * PI / m as f64 / (4.0 * PI * t).powf(1.5);
        let k = heat_kernel_n(n, t, (r, z), (rp, zp)).unwrap();
        assert!((projected - k).abs() < 1e-12 * k, "{projected} vs {k}");
    }

    #[test]
    fn discrete_semigroup_agrees() {
        for n in [0, 1, 3] {
            let rep = heat_kernel_check(n, 0.1, 64, 0.05, 8, 0.1).unwrap();
            assert!(rep.nodes > 50);
            assert!(rep.max_relative_error < 1e-2, "{rep:?}");
        }
    }
}
