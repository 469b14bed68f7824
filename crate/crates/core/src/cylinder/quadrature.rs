//! Adaptive Gauss-Legendre quadrature.

use std::sync::OnceLock;

const ORDER: usize = 20;
const MAX_DEPTH: usize = 48;

/// Nodes and weights of the `n`-point rule on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (x, w) = rule();
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut signed = 0.0;
    let mut abs = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let v = f(c + h * xi);
        signed += wi * v;
        abs += wi * v.abs();
    }
    (signed * h, abs * h)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, abs_tol: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let (left, left_abs) = panel(f, a, m);
    let (right, right_abs) = panel(f, m, b);
    let refined = left + right;
    let floor = 64.0 * f64::EPSILON * (left_abs + right_abs);
    if (refined - whole).abs() <= abs_tol.max(floor) || depth >= MAX_DEPTH || !(m > a && m < b) {
        return refined;
    }
    adapt(f, a, m, left, 0.5 * abs_tol, depth + 1) + adapt(f, m, b, right, 0.5 * abs_tol, depth + 1)
}

/// `int_a^b f` to a tolerance of `rel_tol * int_a^b |f|`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (coarse, _) = panel(&f, a, b);
    let scale = adapt(&|x| f(x).abs(), a, b, panel(&f, a, b).1, 1e-3 * panel(&f, a, b).1.max(1e-300), 0);
    adapt(&f, a, b, coarse, rel_tol * scale.max(1e-300), 0)
}
