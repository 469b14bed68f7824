//! Dielectric matrices and the anisotropic interaction potential.
//!
//! Two families are supported. The full model uses a matrix `0 < M <= 1` and
//! the potential `|x|^-1 - |M^-1 x|^-1` in the principal-axis frame; the
//! simplified model uses `0 <= S < 1` and `|(1 - S)^-1 x|^-1`. Everything
//! downstream works with the diagonal [`CanonicalPotential`].

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when deciding that two canonical entries are equal.
pub const EQUALITY_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Full,
    Simplified,
}

/// A dielectric matrix together with the model it parametrizes.
#[derive(Debug, Clone, PartialEq)]
pub struct DielectricSpec {
    pub model: Model,
    pub matrix: [[f64; 3]; 3],
}

impl DielectricSpec {
    pub fn new(model: Model, matrix: [[f64; 3]; 3]) -> Result<Self> {
        let spec = Self { model, matrix };
        spec.validate()?;
        Ok(spec)
    }

    pub fn diagonal(model: Model, diag: [f64; 3]) -> Result<Self> {
        let mut matrix = [[0.0; 3]; 3];
        for i in 0..3 {
            matrix[i][i] = diag[i];
        }
        Self::new(model, matrix)
    }

    pub fn isotropic(model: Model, s: f64) -> Result<Self> {
        Self::diagonal(model, [s; 3])
    }

    fn validate(&self) -> Result<()> {
        let scale = self
            .matrix
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut asym = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                asym = asym.max((self.matrix[i][j] - self.matrix[j][i]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale || self.matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        for value in self.eigen().0 {
            let ok = match self.model {
                Model::Full => value > 0.0 && value <= 1.0 + 1e-14,
                Model::Simplified => (-1e-14..1.0).contains(&value),
            };
            if !ok {
                return Err(Error::EigenvalueOutOfRange { value, model: self.model });
            }
        }
        Ok(())
    }

    /// Eigenvalues in ascending order with matching unit eigenvectors (columns).
    fn eigen(&self) -> ([f64; 3], Matrix3<f64>) {
        let m = Matrix3::from_fn(|i, j| 0.5 * (self.matrix[i][j] + self.matrix[j][i]));
        let eig = SymmetricEigen::new(m);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.map(|k| eig.eigenvalues[k]);
        let vectors = Matrix3::from_columns(&order.map(|k| eig.eigenvectors.column(k).into_owned()));
        (values, vectors)
    }

    /// Spectral norm of the difference of two matrices.
    pub fn distance(&self, other: &DielectricSpec) -> f64 {
        let d = Matrix3::from_fn(|i, j| self.matrix[i][j] - other.matrix[i][j]);
        let d = 0.5 * (d + d.transpose());
        SymmetricEigen::new(d).eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Potential in the original (unrotated) frame, used to cross-check the
    /// canonical form.
    pub fn eval_original(&self, x: [f64; 3]) -> Result<f64> {
        let r = norm(x);
        if r < ORIGIN_EPS {
            return Err(Error::OriginSingular);
        }
        let (values, vectors) = self.eigen();
        let y = vectors.transpose() * nalgebra::Vector3::from(x);
        match self.model {
            Model::Full => {
                // det(M^-1)^{-1/2} |M^{1/2} x|^{-1}
                let det: f64 = values.iter().product();
                let q: f64 = (0..3).map(|i| values[i] * y[i] * y[i]).sum();
                Ok(1.0 / r - det.sqrt() / q.sqrt())
            }
            Model::Simplified => {
                let q: f64 = (0..3).map(|i| (y[i] / (1.0 - values[i])).powi(2)).sum();
                Ok(1.0 / q.sqrt())
            }
        }
    }
}

/// Diagonal form of the potential in its principal-axis frame.
///
/// Full model: `d = (m1, m2, m3)` with `m3 <= m2 <= m1 <= 1`.
/// Simplified model: `d = (1 - s1, 1 - s2, 1 - s3)` with `d1 <= d2 <= d3 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPotential {
    pub model: Model,
    pub d: [f64; 3],
}

const ORIGIN_EPS: f64 = 1e-300;

/// `coefficient / |diag(scale)^-1 x|`; the building block of both models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombTerm {
    pub coefficient: f64,
    pub scale: [f64; 3],
}

impl CoulombTerm {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.coefficient / scaled_norm(x, self.scale)
    }

    /// Fourier transform `c det(D) 4 pi / |D k|^2`.
    pub fn fourier(&self, k: [f64; 3]) -> f64 {
        let det: f64 = self.scale.iter().product();
        let dk2: f64 = (0..3).map(|i| (self.scale[i] * k[i]).powi(2)).sum();
        self.coefficient * det * 4.0 * PI / dk2
    }

    /// Fourier transform of the kernel truncated to `|D^-1 x| < radius`.
    /// Smooth at `k = 0`.
    pub fn fourier_truncated(&self, k: [f64; 3], radius: f64) -> f64 {
        let det: f64 = self.scale.iter().product();
        let dk2: f64 = (0..3).map(|i| (self.scale[i] * k[i]).powi(2)).sum();
        let dk = dk2.sqrt();
        let arg = radius * dk;
        let shape = if arg < 1e-4 {
            // (1 - cos(R q)) / q^2 = R^2/2 - R^4 q^2/24 + ...
            radius * radius * (0.5 - arg * arg / 24.0)
        } else {
            // 2 sin^2(Rq/2) avoids cancellation in 1 - cos
            2.0 * (0.5 * arg).sin().powi(2) / dk2
        };
        self.coefficient * det * 4.0 * PI * shape
    }

    /// Average of the term over the cell `[-h/2, h/2]^3`, midpoint rule on
    /// `sub^3` sub-cells (never touches the origin for even `sub`).
    pub fn cell_average(&self, h: [f64; 3], sub: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..sub {
            for b in 0..sub {
                for c in 0..sub {
                    let x = [
                        ((a as f64 + 0.5) / sub as f64 - 0.5) * h[0],
                        ((b as f64 + 0.5) / sub as f64 - 0.5) * h[1],
                        ((c as f64 + 0.5) / sub as f64 - 0.5) * h[2],
                    ];
                    acc += self.eval(x);
                }
            }
        }
        acc / (sub * sub * sub) as f64
    }
}

pub(crate) fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn scaled_norm(x: [f64; 3], scale: [f64; 3]) -> f64 {
    ((x[0] / scale[0]).powi(2) + (x[1] / scale[1]).powi(2) + (x[2] / scale[2]).powi(2)).sqrt()
}

/// Coulomb envelope coefficients: `b/|x| <= V(x) <= a/|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialBounds {
    pub a: f64,
    pub b: f64,
}

/// Which directions leave the potential invariant under Steiner symmetrization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SteinerCriteria {
    /// `axes[k]`: V is symmetric strictly decreasing along `e_k`.
    pub axes: [bool; 3],
    /// Radial strictly decreasing in the planes (e1,e2), (e2,e3), (e1,e3).
    pub plane_12: bool,
    pub plane_23: bool,
    pub plane_13: bool,
}

impl SteinerCriteria {
    pub fn plane(&self, i: usize, j: usize) -> bool {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.plane_12,
            (1, 2) => self.plane_23,
            (0, 2) => self.plane_13,
            _ => false,
        }
    }
}

/// Reduce a dielectric matrix to its canonical diagonal potential.
pub fn canonicalize(spec: &DielectricSpec) -> Result<CanonicalPotential> {
    canonicalize_with_frame(spec).map(|(pot, _)| pot)
}

/// Like [`canonicalize`] but also returns the rotation whose columns are the
/// original-frame directions of the canonical axes, so that
/// `V_original(R x) = V_canonical(x)`.
pub fn canonicalize_with_frame(spec: &DielectricSpec) -> Result<(CanonicalPotential, [[f64; 3]; 3])> {
    spec.validate()?;
    let (values, vectors) = spec.eigen();
    // `values` ascending; the stable sort keeps index order on ties.
    let (d, order) = match spec.model {
        Model::Full => {
            // Along eigenvector i the reduced entry is sqrt(m_j m_k), j,k != i.
            let pairs = [
                (values[1] * values[2]).sqrt(),
                (values[0] * values[2]).sqrt(),
                (values[0] * values[1]).sqrt(),
            ];
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| pairs[b].total_cmp(&pairs[a]));
            (order.map(|k| pairs[k].min(1.0)), order)
        }
        Model::Simplified => {
            let ds = values.map(|s| 1.0 - s);
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| ds[a].total_cmp(&ds[b]));
            (order.map(|k| ds[k]), order)
        }
    };
    let mut frame = [[0.0; 3]; 3];
    for (col, &k) in order.iter().enumerate() {
        for row in 0..3 {
            frame[row][col] = vectors[(row, k)];
        }
    }
    Ok((CanonicalPotential { model: spec.model, d }, frame))
}

impl CanonicalPotential {
    pub fn new(model: Model, d: [f64; 3]) -> Result<Self> {
        let mut d = d;
        match model {
            Model::Full => {
                d.sort_by(|a, b| b.total_cmp(a));
                if !(d[2] > 0.0 && d[0] <= 1.0) {
                    return Err(Error::EigenvalueOutOfRange { value: if d[2] <= 0.0 { d[2] } else { d[0] }, model });
                }
            }
            Model::Simplified => {
                d.sort_by(|a, b| a.total_cmp(b));
                if !(d[0] > 0.0 && d[2] <= 1.0) {
                    return Err(Error::EigenvalueOutOfRange { value: if d[0] <= 0.0 { d[0] } else { d[2] }, model });
                }
            }
        }
        Ok(Self { model, d })
    }

    /// The potential as a signed sum of ellipsoidal Coulomb kernels.
    pub fn terms(&self) -> Vec<CoulombTerm> {
        match self.model {
            Model::Full => vec![
                CoulombTerm { coefficient: 1.0, scale: [1.0; 3] },
                CoulombTerm { coefficient: -1.0, scale: self.d },
            ],
            Model::Simplified => vec![CoulombTerm { coefficient: 1.0, scale: self.d }],
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.model == Model::Full && self.d.iter().all(|&v| (v - 1.0).abs() < EQUALITY_TOL)
    }

    pub fn eval_real(&self, x: [f64; 3]) -> Result<f64> {
        if norm(x) < ORIGIN_EPS {
            return Err(Error::OriginSingular);
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: [f64; 3]) -> f64 {
        match self.model {
            Model::Full => 1.0 / norm(x) - 1.0 / scaled_norm(x, self.d),
            Model::Simplified => 1.0 / scaled_norm(x, self.d),
        }
    }

    pub fn eval_fourier(&self, k: [f64; 3]) -> Result<f64> {
        if norm(k) < ORIGIN_EPS {
            return Err(Error::OriginSingular);
        }
        Ok(self.terms().iter().map(|t| t.fourier(k)).sum())
    }

    pub fn bounds(&self) -> PotentialBounds {
        let max = self.d.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.d.iter().cloned().fold(f64::MAX, f64::min);
        match self.model {
            Model::Full => PotentialBounds { a: 1.0 - min, b: 1.0 - max },
            Model::Simplified => PotentialBounds { a: max, b: min },
        }
    }

    pub fn steiner_criteria(&self) -> SteinerCriteria {
        let eq = |a: f64, b: f64| (a - b).abs() <= EQUALITY_TOL;
        let d = self.d;
        match self.model {
            Model::Full => {
                let m1_cubed = d[0].powi(3);
                let axis = |k: usize| k == 0 || m1_cubed <= d[k] * d[k] * (1.0 + EQUALITY_TOL);
                let axes = [axis(0), axis(1), axis(2)];
                SteinerCriteria {
                    axes,
                    plane_12: eq(d[0], d[1]),
                    plane_23: eq(d[1], d[2]) && axes[1],
                    plane_13: eq(d[0], d[2]),
                }
            }
            Model::Simplified => SteinerCriteria {
                axes: [true; 3],
                plane_12: eq(d[0], d[1]),
                plane_23: eq(d[1], d[2]),
                plane_13: eq(d[0], d[2]),
            },
        }
    }

    /// Isotropic potential `(1 - s)/|x|` in the full model.
    pub fn isotropic(s: f64) -> Self {
        Self { model: Model::Full, d: [s; 3] }
    }

    /// The axis singled out by a doubly degenerate spectrum, if any:
    /// the index `k` whose entry differs from the two equal others.
    pub fn cylinder_axis(&self) -> Option<usize> {
        let eq = |a: f64, b: f64| (a - b).abs() <= EQUALITY_TOL;
        let d = self.d;
        match (eq(d[0], d[1]), eq(d[1], d[2]), eq(d[0], d[2])) {
            (true, true, _) => None,
            (true, false, _) => Some(2),
            (false, true, _) => Some(0),
            (false, false, true) => Some(1),
            _ => None,
        }
    }
}
