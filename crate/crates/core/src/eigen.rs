//! Block preconditioned eigensolver (LOBPCG) for symmetric operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Relative residual `||A x - theta x|| / ||x||` for convergence.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block vectors beyond the requested count.
    pub guard: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, guard: 2, seed: 7 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(u, v)| *u += a * v);
}

fn combine(dim: usize, vectors: &[Vec<f64>], coeffs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (v, c) in vectors.iter().zip(coeffs) {
        if c != 0.0 {
            axpy(&mut out, c, v);
        }
    }
    out
}

/// Orthonormalizes `v` against `basis` (twice, modified Gram-Schmidt) and
/// applies the same combination to its image when one is given.
fn orthonormalize(basis: &[Vec<f64>], images: &[Vec<f64>], v: &mut Vec<f64>, image: Option<&mut Vec<f64>>) -> bool {
    let original = dot(v, v).sqrt();
    if original == 0.0 || !original.is_finite() {
        return false;
    }
    let mut image = image;
    for _ in 0..2 {
        for (b, ab) in basis.iter().zip(images) {
            let c = dot(b, v);
            axpy(v, -c, b);
            if let Some(img) = image.as_deref_mut() {
                axpy(img, -c, ab);
            }
        }
    }
    let norm = dot(v, v).sqrt();
    if norm < 1e-10 * original {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    if let Some(img) = image {
        img.iter_mut().for_each(|x| *x /= norm);
    }
    true
}

/// Lowest `count` eigenpairs of the symmetric operator `apply` restricted to
/// the range of the orthogonal projector `project`.
pub fn lobpcg<A, T, P>(
    dim: usize,
    count: usize,
    apply: A,
    precondition: T,
    project: P,
    start: &[Vec<f64>],
    opts: &EigenOptions,
) -> Result<EigenPairs>
where
    A: Fn(&[f64]) -> Vec<f64>,
    T: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    if count == 0 {
        return Ok(EigenPairs { values: vec![], vectors: vec![], residuals: vec![], iterations: 0 });
    }
    let block = count + opts.guard;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(block);
    let mut ax: Vec<Vec<f64>> = Vec::with_capacity(block);
    let mut candidates: Vec<Vec<f64>> = start.iter().take(block).cloned().collect();
    let mut attempts = 0;
    while x.len() < block {
        let raw = if candidates.is_empty() {
            let noise: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            precondition(&noise)
        } else {
            candidates.remove(0)
        };
        let mut v = project(&raw);
        if orthonormalize(&x, &ax, &mut v, None) {
            ax.push(apply(&v));
            x.push(v);
        }
        attempts += 1;
        if attempts > 20 * block {
            return Err(Error::EigenStall { iterations: 0, residual: f64::INFINITY });
        }
    }

    let rayleigh_ritz = |s: &[Vec<f64>], as_: &[Vec<f64>]| {
        let q = s.len();
        let mut h = DMatrix::<f64>::zeros(q, q);
        for i in 0..q {
            for j in i..q {
                let v = 0.5 * (dot(&s[i], &as_[j]) + dot(&s[j], &as_[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        (eig, order)
    };

    let (eig, order) = rayleigh_ritz(&x, &ax);
    let mut theta: Vec<f64> = order.iter().take(block).map(|&c| eig.eigenvalues[c]).collect();
    let rotate = |vs: &[Vec<f64>], col: usize| combine(dim, vs, (0..vs.len()).map(|r| eig.eigenvectors[(r, col)]));
    let nx: Vec<Vec<f64>> = order.iter().take(block).map(|&c| rotate(&x, c)).collect();
    let nax: Vec<Vec<f64>> = order.iter().take(block).map(|&c| rotate(&ax, c)).collect();
    x = nx;
    ax = nax;
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut ap: Vec<Vec<f64>> = Vec::new();
    let mut residuals = vec![f64::INFINITY; block];

    let mut iterations = 0;
    loop {
        let r: Vec<Vec<f64>> = (0..block)
            .map(|i| {
                let mut v = ax[i].clone();
                axpy(&mut v, -theta[i], &x[i]);
                v
            })
            .collect();
        for i in 0..block {
            residuals[i] = dot(&r[i], &r[i]).sqrt();
        }
        if residuals[..count].iter().all(|&v| v <= opts.tol) {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::EigenStall { iterations, residual: residuals[..count].iter().fold(0.0, |a: f64, &b| a.max(b)) });
        }
        iterations += 1;
        if iterations % 25 == 0 {
            // refresh images to stop drift
            ax = x.iter().map(|v| apply(v)).collect();
        }

        let mut s = x.clone();
        let mut as_ = ax.clone();
        for (pv, apv) in p.iter().zip(&ap) {
            let (mut v, mut av) = (pv.clone(), apv.clone());
            if orthonormalize(&s, &as_, &mut v, Some(&mut av)) {
                s.push(v);
                as_.push(av);
            }
        }
        for i in 0..block {
            if residuals[i] <= 0.1 * opts.tol {
                continue;
            }
            let mut w = project(&precondition(&r[i]));
            if orthonormalize(&s, &as_, &mut w, None) {
                as_.push(apply(&w));
                s.push(w);
            }
        }

        let (eig, order) = rayleigh_ritz(&s, &as_);
        let cols: Vec<usize> = order.iter().take(block).copied().collect();
        theta = cols.iter().map(|&c| eig.eigenvalues[c]).collect();
        let mut nx = Vec::with_capacity(block);
        let mut nax = Vec::with_capacity(block);
        let mut np = Vec::with_capacity(block);
        let mut nap = Vec::with_capacity(block);
        for &c in &cols {
            let coef = |r: usize| eig.eigenvectors[(r, c)];
            let tail = &s[block..];
            let atail = &as_[block..];
            let pv = combine(dim, tail, (block..s.len()).map(coef));
            let apv = combine(dim, atail, (block..s.len()).map(coef));
            let mut xv = combine(dim, &s[..block], (0..block).map(coef));
            let mut axv = combine(dim, &as_[..block], (0..block).map(coef));
            axpy(&mut xv, 1.0, &pv);
            axpy(&mut axv, 1.0, &apv);
            nx.push(xv);
            nax.push(axv);
            np.push(pv);
            nap.push(apv);
        }
        x = nx;
        ax = nax;
        p = np;
        ap = nap;
    }

    let ax: Vec<Vec<f64>> = x[..count].iter().map(|v| apply(v)).collect();
    let mut values = Vec::with_capacity(count);
    let mut final_res = Vec::with_capacity(count);
    for i in 0..count {
        let norm = dot(&x[i], &x[i]);
        let th = dot(&x[i], &ax[i]) / norm;
        let mut v = ax[i].clone();
        axpy(&mut v, -th, &x[i]);
        values.push(th);
        final_res.push((dot(&v, &v) / norm).sqrt());
    }
    x.truncate(count);
    Ok(EigenPairs { values, vectors: x, residuals: final_res, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator_lowest_values() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 37) % n) as f64 * 0.1 - 3.0).collect();
        let mut sorted = diag.clone();
        sorted.sort_by(f64::total_cmp);
        let res = lobpcg(
            n,
            3,
            |v| v.iter().zip(&diag).map(|(a, d)| a * d).collect(),
            |v| v.to_vec(),
            |v| v.to_vec(),
            &[],
            &EigenOptions { tol: 1e-10, ..Default::default() },
        )
        .unwrap();
        for i in 0..3 {
            assert!((res.values[i] - sorted[i]).abs() < 1e-10, "{:?}", res.values);
            assert!(res.residuals[i] < 1e-10);
        }
    }

    #[test]
    fn projected_laplacian_chain() {
        // 1D Dirichlet Laplacian restricted to antisymmetric vectors
        let n = 101;
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { v[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                    2.0 * v[i] - l - r
                })
                .collect()
        };
        let project = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| 0.5 * (v[i] - v[n - 1 - i])).collect() };
        let res = lobpcg(n, 2, apply, |v| v.to_vec(), project, &[], &EigenOptions { tol: 1e-9, max_iter: 2000, ..Default::default() })
            .unwrap();
        // antisymmetric modes are the even-numbered sines: k = 2, 4
        for (i, k) in [2.0, 4.0].iter().enumerate() {
            let exact = 2.0 - 2.0 * (k * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((res.values[i] - exact).abs() < 1e-9, "{} {}", res.values[i], exact);
        }
        let v = &res.vectors[0];
        assert!((0..n).all(|i| (v[i] + v[n - 1 - i]).abs() < 1e-12));
    }
}
