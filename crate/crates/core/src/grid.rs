use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell-centered box `[-L, L]^3` with `n` points per axis; sample `i` sits at
/// `(i + 1/2) h - L`, so reflections map grid points onto grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub n: [usize; 3],
    pub half_len: [f64; 3],
}

impl Grid3 {
    pub fn new(n: [usize; 3], half_len: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if n[a] == 0 || n[a] % 2 != 0 {
                return Err(Error::Invalid(format!("grid size {} on axis {a} must be positive and even", n[a])));
            }
            if !(half_len[a] > 0.0 && half_len[a].is_finite()) {
                return Err(Error::Invalid(format!("half length {} on axis {a}", half_len[a])));
            }
        }
        Ok(Self { n, half_len })
    }

    pub fn cubic(n: usize, half_len: f64) -> Result<Self> {
        Self::new([n; 3], [half_len; 3])
    }

    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| 2.0 * self.half_len[a] / self.n[a] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let rest = idx / self.n[0];
        [i, rest % self.n[1], rest / self.n[1]]
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let h = 2.0 * self.half_len[axis] / self.n[axis] as f64;
        (i as f64 + 0.5) * h - self.half_len[axis]
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        (0..self.n[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    /// Same sample layout with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, half_len: self.half_len.map(|l| l * factor) }
    }

    /// Angular wave numbers in FFT order; the Nyquist entry is returned as
    /// `-pi/h`.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        wavenumbers(self.n[axis], 2.0 * self.half_len[axis])
    }

    /// True when `|x_a| > 0.9 L_a` on some axis.
    pub fn in_outer_shell(&self, idx: usize) -> bool {
        let [i, j, k] = self.unindex(idx);
        [(0, i), (1, j), (2, k)]
            .iter()
            .any(|&(a, m)| self.coord(a, m).abs() > 0.9 * self.half_len[a])
    }

    pub fn same_as(&self, other: &Grid3) -> bool {
        self.n == other.n
            && (0..3).all(|a| (self.half_len[a] - other.half_len[a]).abs() <= 1e-12 * self.half_len[a])
    }
}

pub(crate) fn wavenumbers(n: usize, period: f64) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI / period;
    (0..n)
        .map(|m| {
            let s = if m < n.div_ceil(2) { m as isize } else { m as isize - n as isize };
            s as f64 * step
        })
        .collect()
}
