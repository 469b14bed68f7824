//! Radial reference solver for the isotropic potential `(1 - s)/|x|`.
//!
//! Works with `u = r psi` on a logarithmic grid `r = e^x` and the symmetric
//! unknown `w = u e^{-x/2}`, for which the radial equation becomes the
//! generalized tridiagonal problem `-1/2 (w'' - w/4) - r^2 Phi w = -mu r^2 w`.
//! The Hartree potential comes from Newton's theorem.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain end in units of `1 / ((1 - s) lambda)`.
pub const RMAX_NATURAL: f64 = 40.0;
const RMIN_NATURAL: f64 = 1e-13;
const MIXING: f64 = 0.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    /// `u(r) = r psi(r)`.
    pub u: Vec<f64>,
    pub energy: f64,
    pub mu: f64,
    pub kinetic: f64,
    pub interaction: f64,
    pub mass: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl RadialSolution {
    pub fn psi(&self) -> Vec<f64> {
        self.u.iter().zip(&self.r).map(|(u, r)| u / r).collect()
    }

    /// `psi` at radius `r` by linear interpolation in `log r`.
    pub fn psi_at(&self, r: f64) -> f64 {
        let psi = self.psi();
        if r <= self.r[0] {
            return psi[0];
        }
        if r >= *self.r.last().unwrap() {
            return 0.0;
        }
        let x = r.ln();
        let x0 = self.r[0].ln();
        let dx = (self.r[1] / self.r[0]).ln();
        let t = (x - x0) / dx;
        let i = (t.floor() as usize).min(self.r.len() - 2);
        let f = t - i as f64;
        psi[i] * (1.0 - f) + psi[i + 1] * f
    }
}

/// Richardson-extrapolated reference values.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadialReference {
    pub energy: f64,
    pub mu: f64,
    pub kinetic: f64,
    pub interaction: f64,
    /// Difference between the extrapolated value and the finest grid.
    pub energy_correction: f64,
}

/// Solves on `points` interior nodes.
pub fn solve_radial_with(s: f64, lambda: f64, points: usize) -> Result<RadialSolution> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Invalid(format!("isotropy strength {s} outside [0, 1)")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Invalid(format!("mass {lambda} must be positive")));
    }
    let c = 1.0 - s;
    let unit = 1.0 / (c * lambda);
    let (x0, x1) = ((RMIN_NATURAL * unit).ln(), (RMAX_NATURAL * unit).ln());
    let dx = (x1 - x0) / (points + 1) as f64;
    let r: Vec<f64> = (1..=points).map(|i| (x0 + i as f64 * dx).exp()).collect();
    let n = points;

    // initial guess: hydrogenic-like profile of the natural size
    let mut w: Vec<f64> = r.iter().map(|&ri| ri * (-ri / (2.0 * unit)).exp() / ri.sqrt()).collect();
    normalize(&mut w, &r, dx, lambda);
    let mut density: Vec<f64> = w.iter().map(|v| v * v).collect();

    let mut residual = f64::INFINITY;
    let mut theta = 0.0;
    let mut iterations = 0;
    let max_iter = 2000;
    while iterations < max_iter {
        iterations += 1;
        let phi = hartree(&density, &r, dx, c);
        let (diag, off) = operator(&r, &phi, dx);
        let (t, vec) = lowest_pair(&diag, off, &r)?;
        theta = t;
        w = vec;
        normalize(&mut w, &r, dx, lambda);
        // self-consistent residual of the unmixed eigenvector
        let phi_w = hartree(&w.iter().map(|v| v * v).collect::<Vec<_>>(), &r, dx, c);
        let (dw, ow) = operator(&r, &phi_w, dx);
        let rq = rayleigh(&dw, ow, &w, &r);
        residual = el_residual(&dw, ow, &w, &r, -rq, dx);
        if residual < 1e-11 * lambda * lambda * c * c {
            density = w.iter().map(|v| v * v).collect();
            break;
        }
        for (d, v) in density.iter_mut().zip(&w) {
            *d = MIXING * *d + (1.0 - MIXING) * v * v;
        }
    }
    if residual > 1e-9 * lambda * lambda * c * c {
        return Err(Error::NotConverged { iterations, residual });
    }
    let _ = theta;
    let phi = hartree(&density, &r, dx, c);
    let (diag, off) = operator(&r, &phi, dx);
    let mu = -rayleigh(&diag, off, &w, &r);
    // kinetic part of the operator alone
    let lap: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { w[i - 1] } else { 0.0 };
            let right = if i + 1 < n { w[i + 1] } else { 0.0 };
            -0.5 * ((left - 2.0 * w[i] + right) / (dx * dx) - 0.25 * w[i])
        })
        .collect();
    let kinetic = 4.0 * PI * dx * w.iter().zip(&lap).map(|(a, b)| a * b).sum::<f64>();
    let interaction = 4.0 * PI * dx * (0..n).map(|i| w[i] * w[i] * r[i] * r[i] * phi[i]).sum::<f64>();
    let mass = 4.0 * PI * dx * (0..n).map(|i| w[i] * w[i] * r[i] * r[i]).sum::<f64>();
    let u = w.iter().zip(&r).map(|(wi, ri)| wi * ri.sqrt()).collect();
    Ok(RadialSolution {
        r,
        u,
        energy: kinetic - 0.5 * interaction,
        mu,
        kinetic,
        interaction,
        mass,
        residual,
        iterations,
    })
}

/// Default resolution of 4096 interior nodes.
pub fn solve_radial(s: f64, lambda: f64) -> Result<RadialSolution> {
    solve_radial_with(s, lambda, 4096)
}

/// Second-order Richardson extrapolation over 2048, 4096 and 8192 nodes,
/// applied to each quantity separately.
pub fn radial_reference(s: f64, lambda: f64) -> Result<RadialReference> {
    let sizes = [2048usize, 4096, 8192];
    let runs: Vec<RadialSolution> = sizes.iter().map(|&n| solve_radial_with(s, lambda, n)).collect::<Result<_>>()?;
    let h: Vec<f64> = sizes.iter().map(|&n| 1.0 / (n + 1) as f64).collect();
    let extrapolate = |f: &dyn Fn(&RadialSolution) -> f64| {
        let v: Vec<f64> = runs.iter().map(f).collect();
        richardson(&h, &v)
    };
    let energy = extrapolate(&|r| r.energy);
    Ok(RadialReference {
        energy,
        mu: extrapolate(&|r| r.mu),
        kinetic: extrapolate(&|r| r.kinetic),
        interaction: extrapolate(&|r| r.interaction),
        energy_correction: energy - runs[2].energy,
    })
}

/// Fits `f(h) = f0 + a h^2 + b h^4` through three points and returns `f0`.
fn richardson(h: &[f64], v: &[f64]) -> f64 {
    let m = nalgebra::Matrix3::from_fn(|i, j| h[i].powi(2 * j as i32));
    let rhs = nalgebra::Vector3::new(v[0], v[1], v[2]);
    m.lu().solve(&rhs).map(|s| s[0]).unwrap_or(v[2])
}

fn normalize(w: &mut [f64], r: &[f64], dx: f64, lambda: f64) {
    let m = 4.0 * PI * dx * w.iter().zip(r).map(|(v, ri)| v * v * ri * ri).sum::<f64>();
    let s = (lambda / m).sqrt();
    w.iter_mut().for_each(|v| *v *= s);
}

/// `Phi(r) = 4 pi c [ (1/r) int_0^r u^2 + int_r^inf u^2 / s ]` with `u^2 = w^2 r`.
fn hartree(density: &[f64], r: &[f64], dx: f64, c: f64) -> Vec<f64> {
    let n = r.len();
    // integrands in x: u^2 dr = w^2 r^2 dx, u^2/r dr = w^2 r dx
    let inner: Vec<f64> = (0..n).map(|i| density[i] * r[i] * r[i]).collect();
    let outer: Vec<f64> = (0..n).map(|i| density[i] * r[i]).collect();
    let mut below = vec![0.0; n];
    let mut acc = 0.5 * inner[0] * dx;
    below[0] = acc;
    for i in 1..n {
        acc += 0.5 * (inner[i - 1] + inner[i]) * dx;
        below[i] = acc;
    }
    let mut above = vec![0.0; n];
    let mut acc = 0.5 * outer[n - 1] * dx;
    above[n - 1] = acc;
    for i in (0..n - 1).rev() {
        acc += 0.5 * (outer[i + 1] + outer[i]) * dx;
        above[i] = acc;
    }
    (0..n).map(|i| 4.0 * PI * c * (below[i] / r[i] + above[i])).collect()
}

/// Diagonal and constant off-diagonal of `A = -1/2 (D2 - 1/4) - r^2 Phi`.
fn operator(r: &[f64], phi: &[f64], dx: f64) -> (Vec<f64>, f64) {
    let diag = (0..r.len()).map(|i| 1.0 / (dx * dx) + 0.125 - r[i] * r[i] * phi[i]).collect();
    (diag, -0.5 / (dx * dx))
}

fn apply(diag: &[f64], off: f64, w: &[f64]) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|i| {
            let mut v = diag[i] * w[i];
            if i > 0 {
                v += off * w[i - 1];
            }
            if i + 1 < n {
                v += off * w[i + 1];
            }
            v
        })
        .collect()
}

fn rayleigh(diag: &[f64], off: f64, w: &[f64], r: &[f64]) -> f64 {
    let aw = apply(diag, off, w);
    let num: f64 = w.iter().zip(&aw).map(|(a, b)| a * b).sum();
    let den: f64 = w.iter().zip(r).map(|(a, ri)| a * a * ri * ri).sum();
    num / den
}

fn el_residual(diag: &[f64], off: f64, w: &[f64], r: &[f64], mu: f64, dx: f64) -> f64 {
    let aw = apply(diag, off, w);
    let s: f64 = (0..w.len()).map(|i| (aw[i] + mu * r[i] * r[i] * w[i]).powi(2)).sum();
    (4.0 * PI * dx * s).sqrt()
}

/// Lowest eigenpair of `A w = theta diag(r^2) w`: Sturm bisection on the
/// symmetric scaling `r^-1 A r^-1`, then inverse iteration.
fn lowest_pair(diag: &[f64], off: f64, r: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = diag.len();
    let d: Vec<f64> = (0..n).map(|i| diag[i] / (r[i] * r[i])).collect();
    let e: Vec<f64> = (0..n - 1).map(|i| off / (r[i] * r[i + 1])).collect();
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if q.abs() < 1e-300 { 1e-300 } else { q };
            q = d[i] - x - e[i - 1] * e[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let rad = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - rad);
        hi = hi.max(d[i] + rad);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
            break;
        }
    }
    let theta = 0.5 * (lo + hi);
    // inverse iteration on the scaled matrix with a shift just below theta
    let shift = theta - 1e-9 * theta.abs().max(1e-300);
    let mut y = vec![1.0; n];
    for _ in 0..3 {
        y = thomas(&d, &e, shift, &y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotConverged { iterations: 0, residual: f64::NAN });
        }
        y.iter_mut().for_each(|v| *v /= norm);
    }
    let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    // undo the scaling: w = r^-1 y
    let w = (0..n).map(|i| sign * y[i] / r[i]).collect();
    Ok((theta, w))
}

/// Solves `(T - shift) y = b` for symmetric tridiagonal `T`.
fn thomas(d: &[f64], e: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut denom = d[0] - shift;
    c[0] = if n > 1 { e[0] / denom } else { 0.0 };
    g[0] = b[0] / denom;
    for i in 1..n {
        denom = d[i] - shift - e[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = e[i] / denom;
        }
        g[i] = (b[i] - e[i - 1] * g[i - 1]) / denom;
    }
    let mut y = vec![0.0; n];
    y[n - 1] = g[n - 1];
    for i in (0..n - 1).rev() {
        y[i] = g[i] - c[i] * y[i + 1];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coulomb_ground_state_constants() {
        let sol = solve_radial(0.0, 1.0).unwrap();
        assert!((sol.mass - 1.0).abs() < 1e-10);
        // known Choquard constants for -1/2 Laplacian and unit coupling
        assert!((sol.energy + 0.05426).abs() < 2e-4, "{}", sol.energy);
        assert!((sol.mu - 0.1628).abs() < 1e-3, "{}", sol.mu);
        assert!(sol.u.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn virial_identities_hold() {
        let sol = radial_reference(0.3, 1.0).unwrap();
        let a = sol.mu;
        let b = 1.5 * 2.0 * sol.kinetic;
        let c = 0.75 * sol.interaction;
        let d = -3.0 * sol.energy;
        for x in [b, c, d] {
            assert!((x - a).abs() < 1e-8 * a.abs(), "{a} {b} {c} {d}");
        }
        assert!(sol.energy_correction.abs() < 1e-4 * sol.energy.abs());
    }

    #[test]
    fn scaling_in_mass() {
        let one = solve_radial(0.5, 1.0).unwrap();
        let two = solve_radial(0.5, 2.0).unwrap();
        assert!((two.energy / one.energy - 8.0).abs() < 1e-6 * 8.0);
        assert!((two.mu / one.mu - 4.0).abs() < 1e-6 * 4.0);
    }

    #[test]
    fn profile_is_decreasing() {
        let sol = solve_radial(0.5, 1.0).unwrap();
        let psi = sol.psi();
        // the first few nodes feel the artificial inner boundary
        let start = sol.r.iter().position(|&r| r > 1e-4).unwrap();
        let cut = sol.r.iter().position(|&r| r > 30.0).unwrap();
        for i in start..cut {
            assert!(psi[i] < psi[i - 1], "not decreasing at r = {}", sol.r[i]);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(solve_radial(1.0, 1.0).is_err());
        assert!(solve_radial(0.2, 0.0).is_err());
    }
}
