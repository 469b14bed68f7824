//! `L_n = -Lap_(n) + 1 + Phi + W_(n)` on the half plane `r > 0`, `z >= 0`
//! (functions even in `z`), discretized on a cell-centered grid.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::kernel::{angular_factor, CylinderScales};
use super::quadrature::rule;
use crate::anisotropy::{CanonicalPotential, Model};
use crate::eigen::{lobpcg, EigenOptions};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::linop::LinearizedOp;
use crate::spectral::{dot, trig_interpolate_1d};

pub const VNTABLE_MAGIC: &[u8; 8] = b"CVNT001\0";

/// Largest relative azimuthal variance accepted for a cylindrical solution.
pub const CYLINDRICAL_TOLERANCE: f64 = 1e-6;

/// Nodes `r_i = (i + 1/2) hr`, `z_j = (j + 1/2) hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylGrid {
    pub nr: usize,
    pub nz: usize,
    pub rmax: f64,
    pub zmax: f64,
}

impl CylGrid {
    pub fn new(nr: usize, nz: usize, rmax: f64, zmax: f64) -> Result<Self> {
        if nr < 4 || nz < 4 || !(rmax > 0.0) || !(zmax > 0.0) {
            return Err(Error::Invalid(format!("bad cylinder grid {nr}x{nz} over {rmax}x{zmax}")));
        }
        Ok(Self { nr, nz, rmax, zmax })
    }

    pub fn hr(&self) -> f64 {
        self.rmax / self.nr as f64
    }

    pub fn hz(&self) -> f64 {
        self.zmax / self.nz as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hr()
    }

    pub fn z(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hz()
    }

    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    /// `r hr hz`, the measure of a cell of the half plane.
    pub fn weight(&self, i: usize) -> f64 {
        self.r(i) * self.hr() * self.hz()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|a| self.weight(a / self.nz)).collect()
    }
}

/// `v_n(r_i, r_k, m hz)` for `n = 0..=nmax` and `m = 0..2 nz`; the coincident
/// cells `i = k, m = 0` hold cell averages.
#[derive(Debug, Clone, PartialEq)]
pub struct VnTable {
    pub nmax: u32,
    pub grid: CylGrid,
    pub scales: CylinderScales,
    values: Vec<f64>,
}

impl VnTable {
    pub fn build(scales: CylinderScales, grid: CylGrid, nmax: u32) -> Result<Self> {
        let (nr, nz2, stride) = (grid.nr, 2 * grid.nz, nmax as usize + 1);
        let rows: Vec<Vec<f64>> = (0..nr)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; nr * nz2 * stride];
                for k in i..nr {
                    for m in 0..nz2 {
                        let h = if k == i && m == 0 {
                            cell_average(&scales, &grid, i, nmax)
                        } else {
                            scales.harmonics(nmax, grid.r(i), grid.r(k), m as f64 * grid.hz()).expect("off-diagonal cell")
                        };
                        row[(k * nz2 + m) * stride..][..stride].copy_from_slice(&h);
                    }
                }
                row
            })
            .collect();
        let mut values = vec![0.0; nr * nr * nz2 * stride];
        for i in 0..nr {
            for k in i..nr {
                let src = &rows[i][k * nz2 * stride..(k + 1) * nz2 * stride];
                values[(i * nr + k) * nz2 * stride..][..nz2 * stride].copy_from_slice(src);
                values[(k * nr + i) * nz2 * stride..][..nz2 * stride].copy_from_slice(src);
            }
        }
        Ok(Self { nmax, grid, scales, values })
    }

    /// `v_n(r_i, r_k, m hz)`.
    pub fn get(&self, n: u32, i: usize, k: usize, m: usize) -> f64 {
        let (nr, nz2, stride) = (self.grid.nr, 2 * self.grid.nz, self.nmax as usize + 1);
        self.values[((i * nr + k) * nz2 + m) * stride + n as usize]
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(VNTABLE_MAGIC)?;
        for v in [self.nmax as u64, self.grid.nr as u64, self.grid.nz as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.grid.rmax, self.grid.zmax, self.scales.plane, self.scales.axial] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        let bad = |m: &str| Error::Invalid(format!("malformed table: {m}"));
        if bytes.len() < 64 || &bytes[..8] != VNTABLE_MAGIC {
            return Err(bad("magic"));
        }
        let word = |k: usize| <[u8; 8]>::try_from(&bytes[8 + 8 * k..16 + 8 * k]).unwrap();
        let (nmax, nr, nz) = (u64::from_le_bytes(word(0)), u64::from_le_bytes(word(1)), u64::from_le_bytes(word(2)));
        let f = |k: usize| f64::from_le_bytes(word(k));
        let grid = CylGrid::new(nr as usize, nz as usize, f(3), f(4))?;
        let scales = CylinderScales { plane: f(5), axial: f(6) };
        let count = (nr * nr * 2 * nz * (nmax + 1)) as usize;
        let body = &bytes[64..];
        if body.len() != 8 * count {
            return Err(bad("length"));
        }
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { nmax: nmax as u32, grid, scales, values })
    }
}

/// Average of `v_n(r_i, r_i + rho, zeta)` over `|rho| < hr/2`, `|zeta| < hz/2`.
/// Each quarter cell is split into two triangles at the singular corner and
/// integrated in Duffy coordinates.
fn cell_average(scales: &CylinderScales, grid: &CylGrid, i: usize, nmax: u32) -> Vec<f64> {
    let (x, w) = rule();
    let (a, b) = (0.5 * grid.hr(), 0.5 * grid.hz());
    let r = grid.r(i);
    let mut acc = vec![0.0; nmax as usize + 1];
    for sign in [-1.0, 1.0] {
        for (p1, p2) in [([a, 0.0], [a, b]), ([a, b], [0.0, b])] {
            let jac = (p1[0] * p2[1] - p1[1] * p2[0]).abs();
            for (xs, ws) in x.iter().zip(w) {
                let s = 0.5 * (xs + 1.0);
                for (xu, wu) in x.iter().zip(w) {
                    let u = 0.5 * (xu + 1.0);
                    let rho = sign * s * (p1[0] + u * (p2[0] - p1[0]));
                    let zeta = s * (p1[1] + u * (p2[1] - p1[1]));
                    let weight = 0.25 * ws * wu * s * jac;
                    let h = scales.harmonics(nmax, r, (r + rho).max(0.0), zeta).expect("interior point");
                    acc.iter_mut().zip(&h).for_each(|(o, v)| *o += weight * v);
                }
            }
        }
    }
    // zeta is even, so the upper half cell carries the full average
    let area = 2.0 * a * b;
    acc.iter_mut().for_each(|v| *v /= area);
    acc
}

/// Cylindrical samples of a 3D solution: `Q`, `dQ/dr` and `Phi = -V * Q^2`.
#[derive(Debug, Clone)]
pub struct CylSolution {
    pub grid: CylGrid,
    pub scales: CylinderScales,
    pub axis: usize,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub phi: Vec<f64>,
    /// Largest relative azimuthal variance of `Q` measured on rings at `z = 0`.
    pub azimuthal_variance: f64,
}

/// Values of a 3D field on the `(p1, axis)` half plane at `p2 = 0`.
fn sample_half_plane(f: &Field, grid: &CylGrid, axis: usize) -> Vec<f64> {
    let g = f.grid();
    let (p1, p2) = ((axis + 1) % 3, (axis + 2) % 3);
    let plane = f.interpolate_axis(p2, &[0.0]);
    let mut shape = g.n;
    shape[p2] = 1;
    let at = |i1: usize, ia: usize| {
        let mut idx = [0usize; 3];
        idx[p1] = i1;
        idx[axis] = ia;
        plane[idx[0] + shape[0] * (idx[1] + shape[1] * idx[2])]
    };
    let h = g.spacing();
    let radial: Vec<Vec<f64>> = (0..g.n[axis])
        .map(|ia| {
            let line: Vec<f64> = (0..g.n[p1]).map(|i1| at(i1, ia)).collect();
            (0..grid.nr).map(|i| trig_interpolate_1d(&line, g.coord(p1, 0), h[p1], grid.r(i))).collect()
        })
        .collect();
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.nr {
        let line: Vec<f64> = radial.iter().map(|row| row[i]).collect();
        for j in 0..grid.nz {
            out[grid.index(i, j)] = trig_interpolate_1d(&line, g.coord(axis, 0), h[axis], grid.z(j));
        }
    }
    out
}

/// Mean over rings at `z = 0` of the azimuthal variance of `q`, relative to `max q^2`.
fn ring_variance(q: &Field, axis: usize, radii: &[f64]) -> f64 {
    let g = q.grid();
    let (p1, p2) = ((axis + 1) % 3, (axis + 2) % 3);
    let slice = q.interpolate_axis(axis, &[0.0]);
    let mut shape = g.n;
    shape[axis] = 1;
    let h = g.spacing();
    let at = |i1: usize, i2: usize| {
        let mut idx = [0usize; 3];
        idx[p1] = i1;
        idx[p2] = i2;
        slice[idx[0] + shape[0] * (idx[1] + shape[1] * idx[2])]
    };
    let eval = |x1: f64, x2: f64| {
        let col: Vec<f64> = (0..g.n[p2])
            .map(|i2| {
                let line: Vec<f64> = (0..g.n[p1]).map(|i1| at(i1, i2)).collect();
                trig_interpolate_1d(&line, g.coord(p1, 0), h[p1], x1)
            })
            .collect();
        trig_interpolate_1d(&col, g.coord(p2, 0), h[p2], x2)
    };
    let peak = q.max().powi(2);
    let angles = 16;
    let mut worst: f64 = 0.0;
    for &rho in radii {
        let samples: Vec<f64> = (0..angles)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
                eval(rho * t.cos(), rho * t.sin())
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / angles as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / angles as f64;
        worst = worst.max(var / peak);
    }
    worst
}

impl CylSolution {
    /// `op` must be built on a unit-normalized solution of a simplified-model
    /// potential with a doubly degenerate spectrum.
    pub fn new(op: &LinearizedOp, grid: CylGrid) -> Result<Self> {
        let pot = op.potential();
        if pot.model != Model::Simplified {
            return Err(Error::Invalid("the cylindrical reduction needs a simplified-model potential".into()));
        }
        let (scales, axis) = CylinderScales::of(pot)?;
        let q = op.q();
        let g = q.grid();
        let half = [0, 1, 2].map(|a| -g.coord(a, 0));
        let (p1, p2) = ((axis + 1) % 3, (axis + 2) % 3);
        if grid.rmax > half[p1].min(half[p2]) || grid.zmax > half[axis] {
            return Err(Error::GridMismatch(format!("cylinder {grid:?} exceeds the box {half:?}")));
        }
        let radii: Vec<f64> = [0.5, 1.0, 2.0, 3.0].iter().map(|f| f * half[p1] / 6.0).collect();
        let variance = ring_variance(q, axis, &radii);
        if variance > CYLINDRICAL_TOLERANCE {
            return Err(Error::NotCylindrical { variance });
        }
        let phi = Field::new(*g, op.phi().to_vec())?;
        Ok(Self {
            grid,
            scales,
            axis,
            q: sample_half_plane(q, &grid, axis),
            dq: sample_half_plane(&op.derivative(p1), &grid, axis),
            phi: sample_half_plane(&phi, &grid, axis),
            azimuthal_variance: variance,
        })
    }

    pub fn from_potential(pot: &CanonicalPotential, q: Field, grid: CylGrid) -> Result<Self> {
        Self::new(&LinearizedOp::new(pot, q)?, grid)
    }

    pub fn table(&self, nmax: u32) -> Result<VnTable> {
        VnTable::build(self.scales, self.grid, nmax)
    }

    pub fn operator(&self, table: &VnTable, n: u32) -> Result<CylOperator> {
        if table.grid != self.grid || table.scales != self.scales {
            return Err(Error::GridMismatch("table built for another grid or potential".into()));
        }
        if n > table.nmax {
            return Err(Error::Invalid(format!("table holds harmonics up to {}, asked for {n}", table.nmax)));
        }
        Ok(CylOperator::assemble(self, table, n))
    }
}

/// Weighted stiffness `(1/r) d/dr (r d/dr)` on the cell-centered radial
/// grid with an outer Dirichlet face and no flux through the axis.
pub(crate) fn radial_stiffness(grid: &CylGrid, n: u32) -> DMatrix<f64> {
    let (nr, h) = (grid.nr, grid.hr());
    let mut k = DMatrix::zeros(nr, nr);
    for i in 0..nr {
        let r = grid.r(i);
        let right = (i as f64 + 1.0) * h;
        if i + 1 < nr {
            k[(i, i)] += right / h;
            k[(i, i + 1)] -= right / h;
            k[(i + 1, i)] -= right / h;
            k[(i + 1, i + 1)] += right / h;
        } else {
            k[(i, i)] += 2.0 * right / h;
        }
        k[(i, i)] += f64::from(n * n) * h / r;
    }
    // S_r = diag(r h)^-1/2 K diag(r h)^-1/2
    for i in 0..nr {
        for j in 0..nr {
            k[(i, j)] /= (grid.r(i) * h * grid.r(j) * h).sqrt();
        }
    }
    k
}

/// `-d^2/dz^2` on `z > 0` for even functions, Dirichlet at `zmax`.
fn axial_stiffness(grid: &CylGrid) -> DMatrix<f64> {
    let (nz, h) = (grid.nz, grid.hz());
    let mut k = DMatrix::zeros(nz, nz);
    for j in 0..nz {
        k[(j, j)] = if j + 1 < nz { 2.0 } else { 3.0 } / (h * h);
        if j == 0 {
            k[(j, j)] -= 1.0 / (h * h);
        }
        if j + 1 < nz {
            k[(j, j + 1)] = -1.0 / (h * h);
            k[(j + 1, j)] = -1.0 / (h * h);
        }
    }
    k
}

/// Symmetric form `S = W^1/2 L_n W^-1/2` with `W = diag(r hr hz)`.
#[derive(Debug, Clone)]
pub struct CylOperator {
    pub n: u32,
    pub grid: CylGrid,
    sqrt_w: Vec<f64>,
    sr: DMatrix<f64>,
    sz: DMatrix<f64>,
    radial: SymmetricEigen<f64, nalgebra::Dyn>,
    axial: SymmetricEigen<f64, nalgebra::Dyn>,
    diag: Vec<f64>,
    /// Dense `-2 Q_a Q_b K_n(a, b) sqrt(w_a w_b)`.
    nonlocal: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylSpectrum {
    pub n: u32,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Ground state on the grid, sign fixed so that its largest entry is positive.
    pub ground: Vec<f64>,
    /// `min / max` of the ground state; `>= 0` means a single sign.
    pub sign_ratio: f64,
}

impl CylSpectrum {
    pub fn single_signed(&self, tol: f64) -> bool {
        self.sign_ratio >= -tol
    }
}

impl CylOperator {
    fn assemble(sol: &CylSolution, table: &VnTable, n: u32) -> Self {
        let grid = sol.grid;
        let w = grid.weights();
        let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        let (sr, sz) = (radial_stiffness(&grid, n), axial_stiffness(&grid));
        let radial = SymmetricEigen::new(sr.clone());
        let axial = SymmetricEigen::new(sz.clone());
        let diag: Vec<f64> = sol.phi.iter().map(|p| 1.0 + p).collect();
        let len = grid.len();
        let fac = angular_factor(n);
        let nonlocal: Vec<f64> = (0..len)
            .into_par_iter()
            .flat_map_iter(|a| {
                let (i, j) = (a / grid.nz, a % grid.nz);
                let (qa, sa) = (sol.q[a], sqrt_w[a]);
                let (q, sq) = (&sol.q, &sqrt_w);
                (0..len).map(move |b| {
                    let (k, l) = (b / grid.nz, b % grid.nz);
                    let kern = table.get(n, i, k, j.abs_diff(l)) + table.get(n, i, k, j + l + 1);
                    -2.0 * qa * q[b] * fac * kern * sa * sq[b]
                })
            })
            .collect();
        Self { n, grid, sqrt_w, sr, sz, radial, axial, diag, nonlocal }
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// `(S_r x I + I x S_z) y` for `y` laid out `[i * nz + j]`.
    fn local(&self, y: &[f64]) -> Vec<f64> {
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        let y = DMatrix::from_row_slice(nr, nz, y);
        let out = &self.sr * &y + &y * &self.sz;
        let mut v = Vec::with_capacity(nr * nz);
        for i in 0..nr {
            for j in 0..nz {
                v.push(out[(i, j)]);
            }
        }
        v
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let len = self.dim();
        let mut out = self.local(y);
        for a in 0..len {
            out[a] += self.diag[a] * y[a] + dot(&self.nonlocal[a * len..(a + 1) * len], y);
        }
        out
    }

    /// `(S_r x I + I x S_z + 1)^-1`.
    fn precondition(&self, y: &[f64]) -> Vec<f64> {
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        let (ur, uz) = (&self.radial.eigenvectors, &self.axial.eigenvectors);
        let y = DMatrix::from_row_slice(nr, nz, y);
        let mut c = ur.transpose() * y * uz;
        for i in 0..nr {
            for j in 0..nz {
                c[(i, j)] /= self.radial.eigenvalues[i] + self.axial.eigenvalues[j] + 1.0;
            }
        }
        let out = ur * c * uz.transpose();
        (0..nr).flat_map(|i| (0..nz).map(move |j| (i, j))).map(|(i, j)| out[(i, j)]).collect()
    }

    /// Weighted form of a grid function: `y = W^1/2 f`.
    pub fn to_symmetric(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.sqrt_w).map(|(a, b)| a * b).collect()
    }

    pub fn from_symmetric(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.sqrt_w).map(|(a, b)| a / b).collect()
    }

    /// `||L_n f|| / ||f||` in the weighted norm.
    pub fn residual_of(&self, f: &[f64]) -> f64 {
        let y = self.to_symmetric(f);
        let ly = self.apply(&y);
        (dot(&ly, &ly) / dot(&y, &y)).sqrt()
    }

    pub fn rayleigh(&self, f: &[f64]) -> f64 {
        let y = self.to_symmetric(f);
        dot(&y, &self.apply(&y)) / dot(&y, &y)
    }

    /// Lowest `count` eigenpairs; `start` is an optional grid function.
    pub fn lowest(&self, count: usize, start: Option<&[f64]>, opts: &EigenOptions) -> Result<CylSpectrum> {
        let start: Vec<Vec<f64>> = start.map(|f| vec![self.to_symmetric(f)]).unwrap_or_default();
        let pairs = lobpcg(self.dim(), count, |y| self.apply(y), |y| self.precondition(y), |y| y.to_vec(), &start, opts)?;
        let mut ground = self.from_symmetric(&pairs.vectors[0]);
        let (lo, hi) = ground.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi.abs() < lo.abs() {
            ground.iter_mut().for_each(|v| *v = -*v);
        }
        let (lo, hi) = ground.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        Ok(CylSpectrum { n: self.n, values: pairs.values, residuals: pairs.residuals, ground, sign_ratio: lo / hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::kernel::vn_scaled;

    #[test]
    fn table_entries_and_roundtrip() {
        let scales = CylinderScales { plane: 0.8, axial: 0.6 };
        let grid = CylGrid::new(6, 5, 3.0, 2.5).unwrap();
        let t = VnTable::build(scales, grid, 3).unwrap();
        for (n, i, k, m) in [(0, 1, 4, 3), (2, 5, 0, 0), (3, 2, 2, 7)] {
            let exact = vn_scaled(&scales, n, grid.r(i), grid.r(k), m as f64 * grid.hz()).unwrap();
            assert!((t.get(n, i, k, m) - exact).abs() < 1e-11 * exact.abs().max(1e-3));
            assert_eq!(t.get(n, i, k, m), t.get(n, k, i, m));
        }
        // the cell average of a log singularity exceeds the neighbouring values
        assert!(t.get(0, 3, 3, 0) > t.get(0, 3, 3, 1));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        t.save(&path).unwrap();
        assert_eq!(VnTable::load(&path).unwrap(), t);
    }

    #[test]
    fn cell_average_of_smooth_part() {
        // far from the axis the cell average of v_0 tends to the 2D log average
        let scales = CylinderScales::coulomb();
        let grid = CylGrid::new(40, 4, 40.0, 1.0).unwrap();
        let avg = cell_average(&scales, &grid, 30, 0)[0];
        // brute-force midpoint average on a fine mesh, skipping the origin
        let (a, b) = (0.5 * grid.hr(), 0.5 * grid.hz());
        let m = 400;
        let mut s = 0.0;
        for p in 0..m {
            for q in 0..m / 2 {
                let rho = -a + (p as f64 + 0.5) * 2.0 * a / m as f64;
                let zeta = (q as f64 + 0.5) * 2.0 * b / m as f64;
                s += scales.harmonics(0, grid.r(30), grid.r(30) + rho, zeta).unwrap()[0];
            }
        }
        let brute = s / (m * m / 2) as f64;
        assert!((avg - brute).abs() < 1e-3 * avg, "{avg} vs {brute}");
    }

    #[test]
    fn free_laplacian_spectrum() {
        // without Q the operator is -Lap_(n) + 1 on a cylinder: the lowest
        // eigenvalue approaches 1 + (j_{n,1}/R)^2 + (pi/2Z)^2
        let grid = CylGrid::new(40, 20, 4.0, 2.0).unwrap();
        let sol = CylSolution {
            grid,
            scales: CylinderScales::coulomb(),
            axis: 2,
            q: vec![0.0; grid.len()],
            dq: vec![0.0; grid.len()],
            phi: vec![0.0; grid.len()],
            azimuthal_variance: 0.0,
        };
        let table = VnTable { nmax: 1, grid, scales: sol.scales, values: vec![0.0; grid.nr * grid.nr * 2 * grid.nz * 2] };
        for (n, j) in [(0u32, 2.404825557695773), (1, 3.831705970207512)] {
            let op = sol.operator(&table, n).unwrap();
            let spec = op.lowest(1, None, &EigenOptions { tol: 1e-9, max_iter: 2000, ..Default::default() }).unwrap();
            let exact = 1.0 + (j / 4.0_f64).powi(2) + (std::f64::consts::PI / 4.0).powi(2);
            assert!((spec.values[0] - exact).abs() < 5e-3 * exact, "n={n}: {} vs {exact}", spec.values[0]);
            assert!(spec.single_signed(1e-8));
        }
    }
}
