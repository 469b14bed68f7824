//! Azimuthal Fourier coefficients `v_n` of the interaction kernel.
//!
//! With `Y_0 = (2 pi)^-1/2` and `Y_n = pi^-1/2 cos(n .)`,
//! `v_n(r, r', Z) = int_{-pi}^{pi} V Y_n d theta` and `V = sum_n v_n Y_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::quadrature::{integrate, rule};
use crate::anisotropy::{CanonicalPotential, Model};
use crate::error::{Error, Result};

/// Relative accuracy of the `theta` quadratures.
pub const QUAD_TOL: f64 = 1e-12;

/// Largest `m-/m+` accepted by the series.
pub const SERIES_T_MAX: f64 = 0.999;

pub fn harmonic(n: u32, theta: f64) -> f64 {
    if n == 0 {
        1.0 / (2.0 * PI).sqrt()
    } else {
        (f64::from(n) * theta).cos() / PI.sqrt()
    }
}

/// `int_{-pi}^{pi} Y_n cos(n .) Y_n`-normalization factor turning `v_n` into
/// the kernel of `V * (f Y_n) = (int f v_n ...) sqrt(.) Y_n`.
pub fn angular_factor(n: u32) -> f64 {
    if n == 0 {
        (2.0 * PI).sqrt()
    } else {
        PI.sqrt()
    }
}

/// Cylinder geometry of a simplified-model potential: in-plane and axial
/// scales of `1/|D^-1 x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderScales {
    pub plane: f64,
    pub axial: f64,
}

impl CylinderScales {
    pub fn coulomb() -> Self {
        Self { plane: 1.0, axial: 1.0 }
    }

    /// Scales of a potential with a doubly degenerate spectrum.
    pub fn of(pot: &CanonicalPotential) -> Result<(Self, usize)> {
        let axis = pot
            .cylinder_axis()
            .or_else(|| {
                let d = pot.d;
                ((d[0] - d[1]).abs() < 1e-10 && (d[1] - d[2]).abs() < 1e-10).then_some(2)
            })
            .ok_or_else(|| Error::Invalid(format!("potential {:?} has no doubly degenerate eigenvalue", pot.d)))?;
        let plane = pot.d[(axis + 1) % 3];
        Ok((Self { plane, axial: pot.d[axis] }, axis))
    }

    /// `|D^-1 (r - r', 0, Z)|^2`.
    pub fn k_sq(&self, r: f64, rp: f64, z: f64) -> f64 {
        ((r - rp) / self.plane).powi(2) + (z / self.axial).powi(2)
    }

    /// `(m+, m-)`.
    pub fn m_pm(&self, r: f64, rp: f64, z: f64) -> (f64, f64) {
        let zz = (z / self.axial).powi(2);
        let a = (((r + rp) / self.plane).powi(2) + zz).sqrt();
        let b = (((r - rp) / self.plane).powi(2) + zz).sqrt();
        (a + b, a - b)
    }

    fn eval(&self, r: f64, rp: f64, z: f64, theta: f64) -> f64 {
        let c = 2.0 * r * rp / (self.plane * self.plane);
        1.0 / (self.k_sq(r, rp, z) + 2.0 * c * (0.5 * theta).sin().powi(2)).sqrt()
    }
}

/// `v_m = 2 int_0^pi f Y_m`, `m = 0..=nmax`, for an even `2 pi`-periodic `f`
/// whose nearest complex singularity lies at distance `width` from `theta = 0`.
///
/// Panels double in length away from the peak, each with a fixed 20-point rule.
pub fn harmonic_coefficients<F: Fn(f64) -> f64>(f: F, width: f64, nmax: u32) -> Vec<f64> {
    let (x, w) = rule();
    let mut out = vec![0.0; nmax as usize + 1];
    let quarter = PI / 4.0;
    let mut a = 0.0;
    let mut b = width.clamp(1e-300, quarter).min(PI);
    let mut cos_n = vec![0.0; nmax as usize + 1];
    loop {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(w) {
            let t = c + h * xi;
            let fw = wi * h * f(t);
            let ct = t.cos();
            cos_n[0] = 1.0;
            if nmax > 0 {
                cos_n[1] = ct;
            }
            for m in 2..=nmax as usize {
                cos_n[m] = 2.0 * ct * cos_n[m - 1] - cos_n[m - 2];
            }
            for (o, cm) in out.iter_mut().zip(&cos_n) {
                *o += fw * cm;
            }
        }
        if b >= PI {
            break;
        }
        a = b;
        b = (b + b.min(quarter)).min(PI);
    }
    out[0] *= 2.0 / (2.0 * PI).sqrt();
    for o in out.iter_mut().skip(1) {
        *o *= 2.0 / PI.sqrt();
    }
    out
}

impl CylinderScales {
    /// Distance of the singularity of `theta -> V` from the real axis.
    fn width(&self, r: f64, rp: f64, z: f64) -> f64 {
        let c = 2.0 * r * rp / (self.plane * self.plane);
        if c == 0.0 {
            PI
        } else {
            (1.0 + self.k_sq(r, rp, z) / c).acosh()
        }
    }

    /// `v_0, ..., v_nmax` of `1/|D^-1 x|`; `r'` may vanish.
    pub fn harmonics(&self, nmax: u32, r: f64, rp: f64, z: f64) -> Result<Vec<f64>> {
        if !(r >= 0.0 && rp >= 0.0 && r.is_finite() && rp.is_finite()) {
            return Err(Error::Invalid(format!("radii must be non-negative, got {r}, {rp}")));
        }
        if self.k_sq(r, rp, z) == 0.0 {
            return Err(Error::SingularConfiguration);
        }
        Ok(harmonic_coefficients(|t| self.eval(r, rp, z, t), self.width(r, rp, z), nmax))
    }

    /// Harmonics of the full-model difference `1/|x| - 1/|D^-1 x|`.
    pub fn full_harmonics(&self, nmax: u32, r: f64, rp: f64, z: f64) -> Result<Vec<f64>> {
        if self.k_sq(r, rp, z) == 0.0 || (r - rp).hypot(z) == 0.0 {
            return Err(Error::SingularConfiguration);
        }
        let coulomb = Self::coulomb();
        let width = self.width(r, rp, z).min(coulomb.width(r, rp, z));
        Ok(harmonic_coefficients(|t| coulomb.eval(r, rp, z, t) - self.eval(r, rp, z, t), width, nmax))
    }
}

fn check_args(r: f64, rp: f64) -> Result<()> {
    if !(r > 0.0 && rp > 0.0) || !r.is_finite() || !rp.is_finite() {
        return Err(Error::Invalid(format!("radii must be positive, got {r}, {rp}")));
    }
    Ok(())
}

/// `v_n` of `1/|D^-1 x|` by adaptive quadrature of `2 int_0^pi V Y_n`.
pub fn vn_scaled(scales: &CylinderScales, n: u32, r: f64, rp: f64, z: f64) -> Result<f64> {
    check_args(r, rp)?;
    if scales.k_sq(r, rp, z) == 0.0 {
        return Err(Error::SingularConfiguration);
    }
    Ok(2.0 * integrate(|t| scales.eval(r, rp, z, t) * harmonic(n, t), 0.0, PI, QUAD_TOL))
}

/// `v_n` for a canonical potential with a doubly degenerate spectrum (or isotropic).
pub fn vn(pot: &CanonicalPotential, n: u32, r: f64, rp: f64, z: f64) -> Result<f64> {
    let (scales, _) = CylinderScales::of(pot)?;
    match pot.model {
        Model::Simplified => vn_scaled(&scales, n, r, rp, z),
        Model::Full => {
            check_args(r, rp)?;
            if scales.k_sq(r, rp, z) == 0.0 {
                return Err(Error::SingularConfiguration);
            }
            let coulomb = CylinderScales::coulomb();
            let f = |t: f64| (coulomb.eval(r, rp, z, t) - scales.eval(r, rp, z, t)) * harmonic(n, t);
            Ok(2.0 * integrate(f, 0.0, PI, QUAD_TOL))
        }
    }
}

/// `C(2j, j) / 4^j` for `j = 0..len`.
fn central_ratios(len: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(len);
    let mut v = 1.0;
    for j in 0..len {
        if j > 0 {
            v *= (2 * j - 1) as f64 / (2 * j) as f64;
        }
        c.push(v);
    }
    c
}

fn central_ratio(j: usize) -> f64 {
    (1..=j).fold(1.0, |v, i| v * (2 * i - 1) as f64 / (2 * i) as f64)
}

/// Coefficient of `t^k Y_n(theta)` in `(1 - 2 t cos(theta) + t^2)^-1/2`;
/// zero unless `k >= n` and `k - n` is even.
pub fn beta(n: u32, k: u32) -> f64 {
    if k < n || (k - n) % 2 != 0 {
        return 0.0;
    }
    let p = ((k + n) / 2) as usize;
    let q = ((k - n) / 2) as usize;
    let lead = if n == 0 { (2.0 * PI).sqrt() } else { 2.0 * PI.sqrt() };
    lead * central_ratio(p) * central_ratio(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Bound on the truncated tail.
    pub tail_bound: f64,
    pub terms: u32,
}

/// `v_n = (2/m+) sum_{k >= n} beta(n, k) (m-/m+)^k`, truncated at `kmax`.
pub fn vn_series(scales: &CylinderScales, n: u32, r: f64, rp: f64, z: f64, kmax: u32) -> Result<SeriesValue> {
    check_args(r, rp)?;
    let (mp, mm) = scales.m_pm(r, rp, z);
    let t = mm / mp;
    if t > SERIES_T_MAX {
        return Err(Error::SlowConvergence { t });
    }
    let c = central_ratios(kmax as usize + 2);
    let lead = if n == 0 { (2.0 * PI).sqrt() } else { 2.0 * PI.sqrt() };
    let mut sum = 0.0;
    let mut terms = 0;
    let mut k = n;
    while k <= kmax {
        let b = lead * c[((k + n) / 2) as usize] * c[((k - n) / 2) as usize];
        sum += b * t.powi(k as i32);
        terms += 1;
        k += 2;
    }
    // beta(n, k) <= 2 sqrt(pi), so the tail is below a geometric series
    let first = if k > kmax { k } else { kmax + 1 };
    let tail_bound = 2.0 / mp * 2.0 * PI.sqrt() * t.powi(first as i32) / (1.0 - t * t);
    Ok(SeriesValue { value: 2.0 / mp * sum, tail_bound, terms })
}

/// `sum_k t^k sum_n beta(n, k) Y_n(theta)`, summed until the tail drops below `tol`.
pub fn generating_sum(t: f64, theta: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Invalid(format!("t = {t} must lie in [0, 1)")));
    }
    if t > SERIES_T_MAX {
        return Err(Error::SlowConvergence { t });
    }
    let kmax = if t == 0.0 { 0 } else { ((tol * (1.0 - t)).ln() / t.ln()).ceil().max(0.0) as usize + 1 };
    let c = central_ratios(kmax + 2);
    let mut total = 0.0;
    let mut tk = 1.0;
    for k in 0..=kmax {
        let mut inner = 0.0;
        let mut n = k % 2;
        while n <= k {
            let lead = if n == 0 { (2.0 * PI).sqrt() } else { 2.0 * PI.sqrt() };
            inner += lead * c[(k + n) / 2] * c[(k - n) / 2] * harmonic(n as u32, theta);
            n += 2;
        }
        total += tk * inner;
        tk *= t;
    }
    Ok(total)
}

/// `T_n = int_0^pi (cos(n theta) - cos(theta)) / sqrt(K + 2 c (1 - cos(theta)))`
/// with `c = a^2 r r'`.
pub fn tn_check(n: u32, k_sq: f64, coupling: f64) -> Result<f64> {
    if !(k_sq > 0.0 && coupling > 0.0) {
        return Err(Error::Invalid("K and the coupling must be positive".into()));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let f = |t: f64| ((f64::from(n) * t).cos() - t.cos()) / (k_sq + 4.0 * coupling * (0.5 * t).sin().powi(2)).sqrt();
    Ok(integrate(f, 0.0, PI, QUAD_TOL))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemarkReport {
    pub n: u32,
    pub samples: usize,
    /// `(r, r', Z, v_n)` with `v_n > 0`, if one was found.
    pub positive_witness: Option<[f64; 4]>,
    pub negative_witness: Option<[f64; 4]>,
    /// Smallest sampled `v_n`, `v_0` and `v_1`.
    pub min_vn: f64,
    pub min_v0: f64,
    pub min_v1: f64,
}

/// Samples `(r, r', Z)` uniformly in `(0, extent]^2 x [-extent, extent]` and
/// looks for both signs of the full-model `v_n`.
pub fn remark_probe(pot: &CanonicalPotential, n: u32, samples: usize, extent: f64, seed: u64) -> Result<RemarkReport> {
    if pot.model != Model::Full {
        return Err(Error::Invalid("the sign probe needs a full-model potential".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = RemarkReport {
        n,
        samples,
        positive_witness: None,
        negative_witness: None,
        min_vn: f64::INFINITY,
        min_v0: f64::INFINITY,
        min_v1: f64::INFINITY,
    };
    let (scales, _) = CylinderScales::of(pot)?;
    for _ in 0..samples {
        let r = rng.gen_range(0.0..extent) + 1e-3;
        let rp = rng.gen_range(0.0..extent) + 1e-3;
        let z = rng.gen_range(-extent..extent);
        let v = scales.full_harmonics(n.max(1), r, rp, z)?;
        let vn = v[n as usize];
        if vn > 0.0 && report.positive_witness.is_none() {
            report.positive_witness = Some([r, rp, z, vn]);
        }
        if vn < 0.0 && report.negative_witness.is_none() {
            report.negative_witness = Some([r, rp, z, vn]);
        }
        report.min_vn = report.min_vn.min(vn);
        report.min_v0 = report.min_v0.min(v[0]);
        report.min_v1 = report.min_v1.min(v[1]);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplified(plane: f64, axial: f64) -> CylinderScales {
        CylinderScales { plane, axial }
    }

    #[test]
    fn beta_closed_forms() {
        assert_eq!(beta(0, 0), (2.0 * PI).sqrt());
        assert!((beta(1, 1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(beta(2, 1), 0.0);
        assert_eq!(beta(3, 2), 0.0);
        assert!((beta(0, 2) - (2.0 * PI).sqrt() * 0.25).abs() < 1e-15);
        // beta(2, 2) = 2 sqrt(pi) C(4,2) / 2^4
        assert!((beta(2, 2) - 2.0 * PI.sqrt() * 6.0 / 16.0).abs() < 1e-15);
        for n in 0..10 {
            for k in n..30 {
                if (k - n) % 2 == 0 {
                    assert!(beta(n, k) > 0.0);
                }
            }
        }
    }

    #[test]
    fn quadrature_matches_dense_trapezoid() {
        let s = simplified(1.0, 1.0);
        let m = 1_000_000;
        let h = 2.0 * PI / m as f64;
        let trap: f64 = (0..m).map(|j| s.eval(1.0, 1.0, 1.0, -PI + j as f64 * h) * harmonic(0, -PI + j as f64 * h)).sum::<f64>() * h;
        let q = vn_scaled(&s, 0, 1.0, 1.0, 1.0).unwrap();
        assert!((q - trap).abs() < 1e-8 * trap.abs());
    }

    #[test]
    fn small_radius_limits() {
        let s = simplified(0.7, 0.9);
        let rp = 1e-9;
        let v0 = vn_scaled(&s, 0, 1.3, rp, 0.4).unwrap();
        let direct = 1.0 / s.k_sq(1.3, 0.0, 0.4).sqrt();
        assert!((v0 - (2.0 * PI).sqrt() * direct).abs() < 1e-8 * v0);
        for n in 1..4 {
            assert!(vn_scaled(&s, n, 1.3, rp, 0.4).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn coincident_ring_is_singular() {
        let s = simplified(0.7, 0.9);
        assert!(matches!(vn_scaled(&s, 0, 1.0, 1.0, 0.0), Err(Error::SingularConfiguration)));
        assert!(vn_scaled(&s, 0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn series_matches_quadrature() {
        let s = simplified(1.0, 1.0);
        for n in 0..6 {
            let q = vn_scaled(&s, n, 1.0, 1.0, 2.0).unwrap();
            let sv = vn_series(&s, n, 1.0, 1.0, 2.0, 400).unwrap();
            assert!(sv.tail_bound < 1e-10);
            assert!((sv.value - q).abs() < 1e-8 * q.abs(), "n={n}: {} vs {q}", sv.value);
        }
        let at_zero = vn_series(&s, 0, 1.0, 1e-300, 0.5, 10).unwrap();
        assert_eq!(at_zero.value, 2.0 / s.m_pm(1.0, 1e-300, 0.5).0 * beta(0, 0));
        assert!(matches!(vn_series(&s, 0, 1.0, 1.0, 1e-6, 10), Err(Error::SlowConvergence { .. })));
    }

    #[test]
    fn generating_function_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let t = rng.gen_range(0.0..0.9);
            let th = rng.gen_range(-PI..PI);
            let exact = 1.0 / (1.0 - 2.0 * t * th.cos() + t * t).sqrt();
            assert!((generating_sum(t, th, 1e-13).unwrap() - exact).abs() < 1e-9 * exact);
        }
        let (t, th): (f64, f64) = (0.99, 0.3);
        let exact = 1.0 / (1.0 - 2.0 * t * th.cos() + t * t).sqrt();
        assert!((generating_sum(t, th, 1e-13).unwrap() - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn harmonics_match_adaptive_quadrature() {
        let s = simplified(0.7, 0.9);
        for &(r, rp, z) in &[(1.0, 1.0, 2.0), (1.0, 1.01, 0.0), (3.0, 2.99, 0.01), (0.1, 5.0, 0.3), (2.0, 2.0, 1e-3)] {
            let h = s.harmonics(12, r, rp, z).unwrap();
            for n in 0..=12u32 {
                let q = vn_scaled(&s, n, r, rp, z).unwrap();
                assert!((h[n as usize] - q).abs() < 1e-11 * h[0], "n={n} ({r},{rp},{z}): {} vs {q}", h[n as usize]);
            }
        }
        let pot = CanonicalPotential::new(Model::Full, [0.6, 0.6, 0.4]).unwrap();
        let (sc, _) = CylinderScales::of(&pot).unwrap();
        let h = sc.full_harmonics(4, 1.0, 1.2, 0.3).unwrap();
        for n in 0..=4u32 {
            assert!((h[n as usize] - vn(&pot, n, 1.0, 1.2, 0.3).unwrap()).abs() < 1e-11 * h[0]);
        }
    }

    #[test]
    fn tn_values() {
        assert_eq!(tn_check(1, 0.5, 2.0).unwrap(), 0.0);
        let t2 = tn_check(2, 1.0, 1.0).unwrap();
        let m = 1_000_000;
        let h = PI / m as f64;
        let f = |t: f64| ((2.0 * t).cos() - t.cos()) / (1.0 + 2.0 * (1.0 - t.cos())).sqrt();
        let trap: f64 = (0..=m).map(|j| f(j as f64 * h) * if j == 0 || j == m { 0.5 } else { 1.0 }).sum::<f64>() * h;
        assert!(t2 < 0.0);
        assert!((t2 - trap).abs() < 1e-9 * trap.abs());
    }

    #[test]
    fn full_model_sign_structure() {
        // degenerate pair above the axial value: every v_n stays positive
        let pot = CanonicalPotential::new(Model::Full, [0.6, 0.6, 0.4]).unwrap();
        let rep = remark_probe(&pot, 2, 1000, 4.0, 5).unwrap();
        assert!(rep.positive_witness.is_some() && rep.negative_witness.is_none(), "{rep:?}");
        assert!(rep.min_v0 > 0.0 && rep.min_v1 > 0.0);
        // degenerate pair below: both signs, already for n = 1
        let pot = CanonicalPotential::new(Model::Full, [0.8, 0.4, 0.4]).unwrap();
        let rep = remark_probe(&pot, 2, 1000, 4.0, 5).unwrap();
        assert!(rep.positive_witness.is_some() && rep.negative_witness.is_some(), "{rep:?}");
        assert!(rep.min_v0 > 0.0 && rep.min_v1 < 0.0);
    }
}
