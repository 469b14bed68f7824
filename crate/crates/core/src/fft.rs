//! Real-to-complex 3D transforms with zero-padding aware pruning.
//!
//! Spectra use the half-complex layout `[n0/2 + 1, n1, n2]`, x fastest.
//! Both directions are unnormalized.

use std::sync::Arc;

use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy)]
struct SendPtr(*mut Complex64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

pub struct RealFft3 {
    shape: [usize; 3],
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl std::fmt::Debug for RealFft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFft3").field("shape", &self.shape).finish()
    }
}

impl RealFft3 {
    pub fn new(shape: [usize; 3]) -> Self {
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        Self {
            shape,
            r2c: rp.plan_fft_forward(shape[0]),
            c2r: rp.plan_fft_inverse(shape[0]),
            fwd: [cp.plan_fft_forward(shape[1]), cp.plan_fft_forward(shape[2])],
            inv: [cp.plan_fft_inverse(shape[1]), cp.plan_fft_inverse(shape[2])],
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn spectral_shape(&self) -> [usize; 3] {
        [self.shape[0] / 2 + 1, self.shape[1], self.shape[2]]
    }

    pub fn spectral_len(&self) -> usize {
        self.spectral_shape().iter().product()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        self.forward_embedded(input, self.shape)
    }

    pub fn inverse(&self, spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse_extract(spectrum, self.shape)
    }

    /// Transform of `input` (shape `src`) zero-padded into the full shape at
    /// the low corner.
    pub fn forward_embedded(&self, input: &[f64], src: [usize; 3]) -> Vec<Complex64> {
        let [n0, n1, n2] = self.shape;
        let m0 = n0 / 2 + 1;
        assert!(src[0] <= n0 && src[1] <= n1 && src[2] <= n2);
        assert_eq!(input.len(), src.iter().product::<usize>());
        let mut spec = vec![Complex64::new(0.0, 0.0); m0 * n1 * n2];

        // x rows that carry data
        spec.par_chunks_mut(m0 * n1).take(src[2]).enumerate().for_each(|(k, plane)| {
            let mut row = self.r2c.make_input_vec();
            let mut scratch = self.r2c.make_scratch_vec();
            for j in 0..src[1] {
                row[..src[0]].copy_from_slice(&input[src[0] * (j + src[1] * k)..][..src[0]]);
                row[src[0]..].fill(0.0);
                let out = &mut plane[j * m0..(j + 1) * m0];
                self.r2c.process_with_scratch(&mut row, out, &mut scratch).expect("r2c length");
            }
        });
        self.axis_y(&mut spec, src[2], &self.fwd[0]);
        self.axis_z(&mut spec, n1, &self.fwd[1]);
        spec
    }

    /// Inverse transform keeping only the low corner `dst` of the output.
    pub fn inverse_extract(&self, mut spec: Vec<Complex64>, dst: [usize; 3]) -> Vec<f64> {
        let [n0, n1, n2] = self.shape;
        let m0 = n0 / 2 + 1;
        assert!(dst[0] <= n0 && dst[1] <= n1 && dst[2] <= n2);
        assert_eq!(spec.len(), m0 * n1 * n2);
        self.axis_z(&mut spec, n1, &self.inv[1]);
        self.axis_y(&mut spec, dst[2], &self.inv[0]);
        let mut out = vec![0.0; dst.iter().product()];
        out.par_chunks_mut(dst[0] * dst[1]).enumerate().for_each(|(k, plane)| {
            let mut row = self.c2r.make_output_vec();
            let mut buf = self.c2r.make_input_vec();
            let mut scratch = self.c2r.make_scratch_vec();
            for j in 0..dst[1] {
                buf.copy_from_slice(&spec[m0 * (j + n1 * k)..][..m0]);
                buf[0].im = 0.0;
                if n0 % 2 == 0 {
                    buf[m0 - 1].im = 0.0;
                }
                self.c2r.process_with_scratch(&mut buf, &mut row, &mut scratch).expect("c2r length");
                plane[j * dst[0]..(j + 1) * dst[0]].copy_from_slice(&row[..dst[0]]);
            }
        });
        out
    }

    fn axis_y(&self, spec: &mut [Complex64], planes: usize, fft: &Arc<dyn Fft<f64>>) {
        let [_, n1, _] = self.shape;
        let m0 = self.shape[0] / 2 + 1;
        spec.par_chunks_mut(m0 * n1).take(planes).for_each(|plane| {
            let mut buf = vec![Complex64::new(0.0, 0.0); m0 * n1];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for j in 0..n1 {
                for i in 0..m0 {
                    buf[i * n1 + j] = plane[i + m0 * j];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n1 {
                for i in 0..m0 {
                    plane[i + m0 * j] = buf[i * n1 + j];
                }
            }
        });
    }

    fn axis_z(&self, spec: &mut [Complex64], rows: usize, fft: &Arc<dyn Fft<f64>>) {
        let [_, n1, n2] = self.shape;
        let m0 = self.shape[0] / 2 + 1;
        let ptr = SendPtr(spec.as_mut_ptr());
        (0..rows).into_par_iter().for_each(|j| {
            let p = ptr;
            let mut buf = vec![Complex64::new(0.0, 0.0); m0 * n2];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            // SAFETY: each j touches the disjoint index set i + m0 (j + n1 k).
            unsafe {
                for k in 0..n2 {
                    for i in 0..m0 {
                        buf[i * n2 + k] = *p.0.add(i + m0 * (j + n1 * k));
                    }
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for k in 0..n2 {
                    for i in 0..m0 {
                        *p.0.add(i + m0 * (j + n1 * k)) = buf[i * n2 + k];
                    }
                }
            }
        });
    }
}

/// Rounds up to the next size with only the prime factors 2, 3, 5 and 7.
pub fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(x: &[f64], shape: [usize; 3]) -> Vec<Complex64> {
        let [n0, n1, n2] = shape;
        let m0 = n0 / 2 + 1;
        let mut out = vec![Complex64::new(0.0, 0.0); m0 * n1 * n2];
        for c in 0..n2 {
            for b in 0..n1 {
                for a in 0..m0 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n2 {
                        for j in 0..n1 {
                            for i in 0..n0 {
                                let ph = -2.0
                                    * std::f64::consts::PI
                                    * ((a * i) as f64 / n0 as f64
                                        + (b * j) as f64 / n1 as f64
                                        + (c * k) as f64 / n2 as f64);
                                acc += x[i + n0 * (j + n1 * k)] * Complex64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[a + m0 * (b + n1 * c)] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let shape = [6, 4, 5];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..120).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let plan = RealFft3::new(shape);
        let a = plan.forward(&x);
        let b = naive_dft(&x, shape);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
        let back = plan.inverse(a);
        for (u, v) in back.iter().zip(&x) {
            assert!((u / 120.0 - v).abs() < 1e-14);
        }
    }

    #[test]
    fn pruned_paths_match_dense() {
        let shape = [8, 6, 4];
        let src = [4, 3, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let small: Vec<f64> = (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut big = vec![0.0; 192];
        for k in 0..2 {
            for j in 0..3 {
                for i in 0..4 {
                    big[i + 8 * (j + 6 * k)] = small[i + 4 * (j + 3 * k)];
                }
            }
        }
        let plan = RealFft3::new(shape);
        let a = plan.forward_embedded(&small, src);
        let b = plan.forward(&big);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-13);
        }
        let full = plan.inverse(b.clone());
        let part = plan.inverse_extract(b, src);
        for k in 0..2 {
            for j in 0..3 {
                for i in 0..4 {
                    assert!((part[i + 4 * (j + 3 * k)] - full[i + 8 * (j + 6 * k)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn friendly_sizes() {
        assert_eq!(fft_friendly(127), 128);
        assert_eq!(fft_friendly(11), 12);
        assert_eq!(fft_friendly(97), 98);
    }
}
