//! Fourier pseudo-spectral operators on a [`Grid3`].

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::fft::RealFft3;
use crate::grid::Grid3;

#[derive(Debug)]
pub struct SpectralOps {
    grid: Grid3,
    plan: RealFft3,
    k: [Vec<f64>; 3],
}

impl SpectralOps {
    pub fn new(grid: &Grid3) -> Self {
        Self {
            grid: *grid,
            plan: RealFft3::new(grid.n),
            k: [grid.wavenumbers(0), grid.wavenumbers(1), grid.wavenumbers(2)],
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    fn is_nyquist(&self, axis: usize, m: usize) -> bool {
        2 * m == self.grid.n[axis]
    }

    /// `F^-1 [ m(k) F f ]` for a real multiplier that is even in every axis.
    pub fn apply_multiplier<M>(&self, f: &[f64], multiplier: M) -> Vec<f64>
    where
        M: Fn(f64, f64, f64) -> f64 + Sync,
    {
        let mut spec = self.plan.forward(f);
        let [m0, n1, _] = self.plan.spectral_shape();
        let scale = 1.0 / self.grid.len() as f64;
        spec.par_chunks_mut(m0 * n1).enumerate().for_each(|(c, plane)| {
            let kz = self.k[2][c];
            for b in 0..n1 {
                let ky = self.k[1][b];
                for a in 0..m0 {
                    plane[a + m0 * b] *= multiplier(self.k[0][a].abs(), ky, kz) * scale;
                }
            }
        });
        self.plan.inverse(spec)
    }

    pub fn neg_laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.apply_multiplier(f, |a, b, c| a * a + b * b + c * c)
    }

    /// Spectral first derivative; the Nyquist mode is dropped.
    pub fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let mut spec = self.plan.forward(f);
        let [m0, n1, _] = self.plan.spectral_shape();
        let scale = 1.0 / self.grid.len() as f64;
        spec.par_chunks_mut(m0 * n1).enumerate().for_each(|(c, plane)| {
            for b in 0..n1 {
                for a in 0..m0 {
                    let (m, k) = match axis {
                        0 => (a, self.k[0][a].abs()),
                        1 => (b, self.k[1][b]),
                        _ => (c, self.k[2][c]),
                    };
                    let factor = if self.is_nyquist(axis, m) { 0.0 } else { k * scale };
                    let v = plane[a + m0 * b];
                    plane[a + m0 * b] = Complex64::new(-v.im * factor, v.re * factor);
                }
            }
        });
        self.plan.inverse(spec)
    }

    /// Band-limited translate `f(x - shift)`.
    pub fn translate(&self, f: &[f64], shift: [f64; 3]) -> Vec<f64> {
        let mut spec = self.plan.forward(f);
        let [m0, n1, _] = self.plan.spectral_shape();
        let scale = 1.0 / self.grid.len() as f64;
        spec.par_chunks_mut(m0 * n1).enumerate().for_each(|(c, plane)| {
            for b in 0..n1 {
                for a in 0..m0 {
                    let idx = [a, b, c];
                    let mut phase = Complex64::new(scale, 0.0);
                    for ax in 0..3 {
                        let k = if ax == 0 { self.k[0][a].abs() } else { self.k[ax][idx[ax]] };
                        let arg = -k * shift[ax];
                        // the Nyquist mode keeps only its real (cosine) part
                        phase *= if self.is_nyquist(ax, idx[ax]) {
                            Complex64::new(arg.cos(), 0.0)
                        } else {
                            Complex64::from_polar(1.0, arg)
                        };
                    }
                    plane[a + m0 * b] *= phase;
                }
            }
        });
        self.plan.inverse(spec)
    }

    /// `||grad f||^2` on the grid.
    pub fn gradient_norm_sq(&self, f: &[f64]) -> f64 {
        let lap = self.neg_laplacian(f);
        dot(f, &lap) * self.grid.cell_volume()
    }
}

/// Deterministic dot product: fixed chunking, sequential final sum.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.par_chunks(8192)
        .zip(b.par_chunks(8192))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Trigonometric interpolation of periodic samples `f_j = f(x0 + j h)` at `x`.
pub fn trig_interpolate_1d(samples: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = samples.len();
    let t = (x - x0) / h;
    // Dirichlet-kernel form of the interpolant with the Nyquist term split
    // symmetrically.
    let mut acc = 0.0;
    for (j, &s) in samples.iter().enumerate() {
        let u = std::f64::consts::PI * (t - j as f64) / n as f64;
        let w = if u.sin().abs() < 1e-14 {
            1.0
        } else if n % 2 == 0 {
            (n as f64 * u).sin() / (n as f64 * u.tan())
        } else {
            (n as f64 * u).sin() / (n as f64 * u.sin())
        };
        acc += s * w;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Grid3, sigma: f64, center: [f64; 3]) -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                let r2: f64 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum();
                (-r2 / (2.0 * sigma * sigma)).exp()
            })
            .collect()
    }

    #[test]
    fn laplacian_of_gaussian() {
        let grid = Grid3::cubic(40, 10.0).unwrap();
        let ops = SpectralOps::new(&grid);
        let s = 1.3;
        let f = gaussian(&grid, s, [0.0; 3]);
        let lap = ops.neg_laplacian(&f);
        for i in (0..grid.len()).step_by(97) {
            let p = grid.point(i);
            let r2: f64 = p.iter().map(|x| x * x).sum();
            let exact = (3.0 / (s * s) - r2 / s.powi(4)) * f[i];
            assert!((lap[i] - exact).abs() < 1e-9, "{} {}", lap[i], exact);
        }
        // ||grad f||^2 = (3/(2 s^2)) * int f^2 with int f^2 = (pi s^2)^{3/2}
        let g = ops.gradient_norm_sq(&f);
        let exact = 1.5 / (s * s) * (std::f64::consts::PI * s * s).powf(1.5);
        assert!((g - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn derivative_and_translate() {
        let grid = Grid3::new([40, 36, 38], [10.0, 9.0, 9.5]).unwrap();
        let ops = SpectralOps::new(&grid);
        let f = gaussian(&grid, 1.2, [0.3, -0.2, 0.1]);
        for axis in 0..3 {
            let d = ops.derivative(&f, axis);
            for i in (0..grid.len()).step_by(101) {
                let p = grid.point(i);
                let c = [0.3, -0.2, 0.1][axis];
                let exact = -(p[axis] - c) / (1.2 * 1.2) * f[i];
                assert!((d[i] - exact).abs() < 1e-9);
            }
        }
        let moved = ops.translate(&f, [0.5, 0.25, -0.4]);
        let expect = gaussian(&grid, 1.2, [0.8, 0.05, -0.3]);
        for (a, b) in moved.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn trig_interpolation_reproduces_band_limited() {
        let n = 16;
        let h = 0.5;
        let x0 = -4.0 + 0.25;
        let period = n as f64 * h;
        let f = |x: f64| (2.0 * std::f64::consts::PI * 3.0 * x / period).cos() + 0.5;
        let samples: Vec<f64> = (0..n).map(|j| f(x0 + j as f64 * h)).collect();
        for x in [-1.3, 0.0, 2.71, x0 + 3.0 * h] {
            assert!((trig_interpolate_1d(&samples, x0, h, x) - f(x)).abs() < 1e-12);
        }
    }
}
