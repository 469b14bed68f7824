//! Real scalar fields on a [`Grid3`]: mass, parity, rearrangements,
//! centering and the PFLD file format.
//!
//! PFLD layout (all little-endian): the 8 magic bytes `PFLD0001`, three `u64`
//! point counts, three `f64` half lengths, then the values as `f64` with the
//! x index fastest. Sample `i` on an axis sits at `(i + 1/2) h - L`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::spectral::{dot, trig_interpolate_1d, SpectralOps};

pub const PFLD_MAGIC: &[u8; 8] = b"PFLD0001";

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid3,
    values: Vec<f64>,
    mass: f64,
}

impl Field {
    pub fn new(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("field contains non-finite values".into()));
        }
        let mass = dot(&values, &values) * grid.cell_volume();
        Ok(Self { grid, values, mass })
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self { values: vec![0.0; grid.len()], grid, mass: 0.0 }
    }

    pub fn from_fn<F: Fn([f64; 3]) -> f64>(grid: Grid3, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `int |f|^2`, cached at construction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, values)
    }

    /// Rescales to `int |f|^2 = lambda`.
    pub fn normalized_to(&self, lambda: f64) -> Result<Self> {
        if self.mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let s = (lambda / self.mass).sqrt();
        self.with_values(self.values.iter().map(|v| v * s).collect())
    }

    pub fn inner(&self, other: &Field) -> f64 {
        dot(&self.values, &other.values) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass.sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `f(x)` with coordinate `axis` negated.
    pub fn reflect(&self, axis: usize) -> Field {
        Field { grid: self.grid, values: reflect_values(&self.grid, &self.values, axis), mass: self.mass }
    }

    /// `||f - reflect(f)|| / ||f||`.
    pub fn reflection_asymmetry(&self, axis: usize) -> f64 {
        let r = reflect_values(&self.grid, &self.values, axis);
        let diff: f64 = self.values.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum();
        (diff / dot(&self.values, &self.values)).sqrt()
    }

    pub fn project_parity(&self, sector: ParitySector) -> Field {
        let values = project_parity_values(&self.grid, &self.values, sector);
        Field::new(self.grid, values).expect("projection keeps values finite")
    }

    /// Centroid of `|f|^2`.
    pub fn centroid(&self) -> Result<[f64; 3]> {
        let total = dot(&self.values, &self.values);
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let mut c = [0.0; 3];
        for (idx, v) in self.values.iter().enumerate() {
            let p = self.grid.point(idx);
            for a in 0..3 {
                c[a] += p[a] * v * v;
            }
        }
        Ok(c.map(|x| x / total))
    }

    /// Band-limited translation moving the centroid of `|f|^2` to the origin.
    pub fn center(&self) -> Result<Field> {
        let ops = SpectralOps::new(&self.grid);
        let h = self.grid.spacing();
        let mut current = self.clone();
        for _ in 0..8 {
            let c = current.centroid()?;
            if (0..3).all(|a| c[a].abs() < 1e-7 * h[a]) {
                break;
            }
            let moved = ops.translate(&current.values, c.map(|x| -x));
            current = self.with_values(moved)?;
        }
        Ok(current)
    }

    pub fn steiner_rearrange(&self, direction: Direction) -> Result<Field> {
        if self.values.iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeInput);
        }
        let values = match direction {
            Direction::Axis(a) => rearrange_axis(&self.grid, &self.values, a),
            Direction::Plane(a, b) => rearrange_plane(&self.grid, &self.values, a, b),
        };
        Ok(Field { grid: self.grid, values, mass: self.mass })
    }

    /// Fourier interpolation along one axis onto new coordinates; the other
    /// axes keep their samples. Returns values with the target axis length
    /// replaced by `targets.len()`.
    pub fn interpolate_axis(&self, axis: usize, targets: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let h = self.grid.spacing()[axis];
        let x0 = self.grid.coord(axis, 0);
        let mut shape = n;
        shape[axis] = targets.len();
        let mut out = vec![0.0; shape.iter().product()];
        let mut line = vec![0.0; n[axis]];
        let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        for u in 0..n[others[0]] {
            for w in 0..n[others[1]] {
                let mut idx = [0usize; 3];
                idx[others[0]] = u;
                idx[others[1]] = w;
                for (m, slot) in line.iter_mut().enumerate() {
                    idx[axis] = m;
                    *slot = self.values[self.grid.index(idx[0], idx[1], idx[2])];
                }
                for (t, &x) in targets.iter().enumerate() {
                    idx[axis] = t;
                    out[idx[0] + shape[0] * (idx[1] + shape[1] * idx[2])] = trig_interpolate_1d(&line, x0, h, x);
                }
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(PFLD_MAGIC)?;
        for n in self.grid.n {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for l in self.grid.half_len {
            w.write_all(&l.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Field> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Field> {
        if bytes.len() < 8 || &bytes[..4] != b"PFLD" {
            return Err(Error::BadMagic);
        }
        if &bytes[..8] != PFLD_MAGIC {
            return Err(Error::VersionMismatch(String::from_utf8_lossy(&bytes[4..8]).into_owned()));
        }
        let header = 8 + 48;
        if bytes.len() < header {
            return Err(Error::ShapeMismatch("truncated header".into()));
        }
        let word = |i: usize| -> [u8; 8] { bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap() };
        let n = [0, 1, 2].map(|i| u64::from_le_bytes(word(i)) as usize);
        let half_len = [3, 4, 5].map(|i| f64::from_le_bytes(word(i)));
        let grid = Grid3::new(n, half_len).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let count = grid.len();
        if bytes.len() != header + 8 * count {
            return Err(Error::ShapeMismatch(format!(
                "expected {} value bytes, found {}",
                8 * count,
                bytes.len() - header
            )));
        }
        let values = bytes[header..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Field::new(grid, values)
    }
}

/// Parity pattern `(tau_x, tau_y, tau_z)`; `true` means odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParitySector {
    pub odd: [bool; 3],
}

impl ParitySector {
    pub const EVEN: ParitySector = ParitySector { odd: [false; 3] };

    pub fn new(odd: [bool; 3]) -> Self {
        Self { odd }
    }

    /// From signs `+1`/`-1`.
    pub fn from_signs(tau: [i8; 3]) -> Self {
        Self { odd: tau.map(|t| t < 0) }
    }

    pub fn signs(&self) -> [i8; 3] {
        self.odd.map(|o| if o { -1 } else { 1 })
    }

    pub fn all() -> [ParitySector; 8] {
        std::array::from_fn(|m| Self { odd: [m & 1 != 0, m & 2 != 0, m & 4 != 0] })
    }

    pub fn odd_count(&self) -> usize {
        self.odd.iter().filter(|&&o| o).count()
    }

    /// The axis that is odd when exactly one is.
    pub fn single_odd_axis(&self) -> Option<usize> {
        (self.odd_count() == 1).then(|| self.odd.iter().position(|&o| o).unwrap())
    }

    pub fn label(&self) -> String {
        self.odd.iter().map(|&o| if o { '-' } else { '+' }).collect()
    }
}

impl std::fmt::Display for ParitySector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({})", self.label().chars().map(String::from).collect::<Vec<_>>().join(","))
    }
}

impl std::str::FromStr for ParitySector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| *c == '+' || *c == '-').collect();
        if chars.len() != 3 {
            return Err(Error::Invalid(format!("sector {s:?} needs three signs")));
        }
        Ok(Self { odd: [chars[0] == '-', chars[1] == '-', chars[2] == '-'] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Axis(usize),
    Plane(usize, usize),
}

pub(crate) fn reflect_values(grid: &Grid3, v: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.n;
    let mut out = vec![0.0; v.len()];
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let mut s = [i, j, k];
                s[axis] = n[axis] - 1 - s[axis];
                out[grid.index(i, j, k)] = v[grid.index(s[0], s[1], s[2])];
            }
        }
    }
    out
}

pub(crate) fn project_parity_values(grid: &Grid3, v: &[f64], sector: ParitySector) -> Vec<f64> {
    let mut out = v.to_vec();
    for axis in 0..3 {
        let r = reflect_values(grid, &out, axis);
        let sign = if sector.odd[axis] { -1.0 } else { 1.0 };
        for (o, rv) in out.iter_mut().zip(&r) {
            *o = 0.5 * (*o + sign * rv);
        }
    }
    out
}

/// Symmetric-decreasing placement order for `n` cell-centered points:
/// the two central cells first, then alternating outward.
fn center_out_order(n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n);
    let half = n / 2;
    for d in 0..half {
        order.push(half - 1 - d);
        order.push(half + d);
    }
    if n % 2 == 1 {
        order.push(n - 1);
    }
    order
}

fn rearrange_axis(grid: &Grid3, v: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.n;
    let order = center_out_order(n[axis]);
    let mut out = vec![0.0; v.len()];
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let mut line = vec![0.0; n[axis]];
    for u in 0..n[others[0]] {
        for w in 0..n[others[1]] {
            let mut idx = [0usize; 3];
            idx[others[0]] = u;
            idx[others[1]] = w;
            for (m, slot) in line.iter_mut().enumerate() {
                idx[axis] = m;
                *slot = v[grid.index(idx[0], idx[1], idx[2])];
            }
            line.sort_by(|a, b| b.total_cmp(a));
            for (rank, &pos) in order.iter().enumerate() {
                idx[axis] = pos;
                out[grid.index(idx[0], idx[1], idx[2])] = line[rank];
            }
        }
    }
    out
}

fn rearrange_plane(grid: &Grid3, v: &[f64], a: usize, b: usize) -> Vec<f64> {
    assert!(a != b && a < 3 && b < 3);
    let n = grid.n;
    let c = 3 - a - b;
    // cells of the (a, b) slice sorted by distance to the axis
    let mut cells: Vec<(usize, usize)> = (0..n[a]).flat_map(|i| (0..n[b]).map(move |j| (i, j))).collect();
    let radius = |&(i, j): &(usize, usize)| grid.coord(a, i).hypot(grid.coord(b, j));
    cells.sort_by(|p, q| radius(p).total_cmp(&radius(q)));
    let mut out = vec![0.0; v.len()];
    let mut slice = vec![0.0; cells.len()];
    for w in 0..n[c] {
        let at = |i: usize, j: usize| {
            let mut idx = [0usize; 3];
            idx[a] = i;
            idx[b] = j;
            idx[c] = w;
            grid.index(idx[0], idx[1], idx[2])
        };
        for (s, &(i, j)) in slice.iter_mut().zip(&cells) {
            *s = v[at(i, j)];
        }
        slice.sort_by(|p, q| q.total_cmp(p));
        for (s, &(i, j)) in slice.iter().zip(&cells) {
            out[at(i, j)] = *s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(grid: Grid3, c: [f64; 3]) -> Field {
        Field::from_fn(grid, |p| (-(0..3).map(|a| (p[a] - c[a]).powi(2)).sum::<f64>() / 2.0).exp()).unwrap()
    }

    fn random_field(grid: Grid3, seed: u64, positive: bool) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = if positive { 0.0 } else { -1.0 };
        Field::new(grid, (0..grid.len()).map(|_| rng.gen_range(lo..1.0)).collect()).unwrap()
    }

    #[test]
    fn projections_resolve_identity() {
        let grid = Grid3::new([6, 4, 8], [1.0, 2.0, 1.5]).unwrap();
        let f = random_field(grid, 5, false);
        let mut sum = vec![0.0; grid.len()];
        for s in ParitySector::all() {
            let p = f.project_parity(s);
            let again = p.project_parity(s);
            for (x, y) in p.values().iter().zip(again.values()) {
                assert!((x - y).abs() < 1e-15);
            }
            for (acc, x) in sum.iter_mut().zip(p.values()) {
                *acc += x;
            }
        }
        for (a, b) in sum.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn odd_field_vanishes_in_even_sector() {
        let grid = Grid3::cubic(8, 2.0).unwrap();
        let f = Field::from_fn(grid, |p| p[0] * (-p[1] * p[1] - p[2] * p[2]).exp()).unwrap();
        let even = f.project_parity(ParitySector::EVEN);
        assert!(even.values().iter().all(|v| v.abs() < 1e-15));
        let own = f.project_parity(ParitySector::from_signs([-1, 1, 1]));
        assert_eq!(own.values(), f.values());
    }

    #[test]
    fn sector_labels_round_trip() {
        for s in ParitySector::all() {
            assert_eq!(s.label().parse::<ParitySector>().unwrap(), s);
        }
        assert_eq!(ParitySector::from_signs([-1, 1, 1]).single_odd_axis(), Some(0));
        assert_eq!(ParitySector::from_signs([-1, -1, 1]).single_odd_axis(), None);
    }

    #[test]
    fn centering_removes_shift() {
        let grid = Grid3::cubic(32, 8.0).unwrap();
        let h = grid.spacing()[0];
        let f = gaussian(grid, [3.0 * h, -1.0 * h, 0.5 * h]);
        let c = f.center().unwrap();
        let cc = c.centroid().unwrap();
        assert!(cc.iter().all(|v| v.abs() < 1e-6 * h), "{cc:?}");
        assert!((c.mass() - f.mass()).abs() < 1e-10 * f.mass());
        let g = gaussian(grid, [0.0; 3]);
        for (a, b) in g.center().unwrap().values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(Field::zeros(grid).center(), Err(Error::ZeroMass)));
    }

    #[test]
    fn axis_rearrangement_recenters_gaussian() {
        let grid = Grid3::cubic(16, 8.0).unwrap();
        let h = grid.spacing()[0];
        let shifted = gaussian(grid, [2.0 * h, 0.0, 0.0]);
        let st = shifted.steiner_rearrange(Direction::Axis(0)).unwrap();
        let centered = gaussian(grid, [0.0; 3]);
        // only the edge samples that leave the box differ
        for (a, b) in st.values().iter().zip(centered.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        // a symmetric decreasing profile is a fixed point
        let again = centered.steiner_rearrange(Direction::Axis(0)).unwrap();
        assert_eq!(again.values(), centered.values());
        let neg = Field::from_fn(grid, |p| p[0]).unwrap();
        assert!(matches!(neg.steiner_rearrange(Direction::Axis(1)), Err(Error::NegativeInput)));
    }

    #[test]
    fn rearrangement_preserves_mass_and_decreases_gradient() {
        let grid = Grid3::cubic(12, 3.0).unwrap();
        let ops = SpectralOps::new(&grid);
        for seed in 0..20 {
            let f = random_field(grid, seed, true);
            for dir in [Direction::Axis(0), Direction::Axis(2), Direction::Plane(0, 1)] {
                let st = f.steiner_rearrange(dir).unwrap();
                let recomputed = dot(st.values(), st.values()) * grid.cell_volume();
                assert!((recomputed - f.mass()).abs() < 1e-12 * f.mass());
                let mut a: Vec<f64> = f.values().to_vec();
                let mut b: Vec<f64> = st.values().to_vec();
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                assert_eq!(a, b);
                assert!(discrete_grad_sq(&grid, st.values()) <= discrete_grad_sq(&grid, f.values()) + 1e-12);
            }
            let _ = &ops;
        }
    }

    /// Nearest-neighbour difference energy with zero exterior.
    fn discrete_grad_sq(grid: &Grid3, v: &[f64]) -> f64 {
        let n = grid.n;
        let mut acc = 0.0;
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let here = v[grid.index(i, j, k)];
                    let idx = [i, j, k];
                    for a in 0..3 {
                        let next = if idx[a] + 1 < n[a] {
                            let mut m = idx;
                            m[a] += 1;
                            v[grid.index(m[0], m[1], m[2])]
                        } else {
                            0.0
                        };
                        acc += (next - here).powi(2);
                        if idx[a] == 0 {
                            acc += here * here;
                        }
                    }
                }
            }
        }
        acc
    }

    #[test]
    fn pfld_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.pfld");
        let grid = Grid3::new([4, 6, 2], [1.0, 1.5, 0.25]).unwrap();
        let f = random_field(grid, 9, false);
        f.save(&path).unwrap();
        let g = Field::load(&path).unwrap();
        assert_eq!(g.grid(), f.grid());
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let bytes = std::fs::read(&path).unwrap();
        assert!(matches!(Field::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(Field::from_bytes(&bytes[..20]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(Field::from_bytes(b"NOPE0001"), Err(Error::BadMagic)));
        let mut v2 = bytes.clone();
        v2[7] = b'2';
        assert!(matches!(Field::from_bytes(&v2), Err(Error::VersionMismatch(_))));
    }

    #[test]
    fn little_endian_header_layout() {
        let grid = Grid3::new([2, 2, 2], [1.0, 1.0, 1.0]).unwrap();
        let f = Field::new(grid, vec![1.5; 8]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pfld");
        f.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"PFLD0001");
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[32..40], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[56..64], &1.5f64.to_le_bytes());
        assert_eq!(bytes.len(), 56 + 64);
    }
}
