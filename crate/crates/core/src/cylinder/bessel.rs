//! Modified Bessel functions of the first kind, integer order.

/// `I_n(x) e^{-x}` for `x >= 0`.
pub fn bessel_i_scaled(n: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "argument must be nonnegative");
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x >= 30.0 * f64::from(n.max(1)) {
        asymptotic_scaled(n, x)
    } else {
        series(n, x) * (-x).exp()
    }
}

pub fn bessel_i(n: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_i(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    bessel_i_scaled(n, x) * x.exp()
}

fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= half / f64::from(k);
    }
    let q = half * half;
    let mut term = lead;
    let mut sum = lead;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + f64::from(n)));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

fn asymptotic_scaled(n: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(n) * f64::from(n);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `I_n(x) e^{-x} = (1/pi) int_0^pi e^{x (cos t - 1)} cos(n t) dt` by the
    /// trapezoid rule, exponentially accurate for periodic integrands.
    fn trapezoid(n: u32, x: f64) -> f64 {
        let m = 20000;
        let h = PI / m as f64;
        let mut s = 0.0;
        for j in 0..=m {
            let t = j as f64 * h;
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            s += w * (x * (t.cos() - 1.0)).exp() * (f64::from(n) * t).cos();
        }
        s * h / PI
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_i(0, 0.0), 1.0);
        for n in 1..6 {
            assert_eq!(bessel_i(n, 0.0), 0.0);
        }
    }

    #[test]
    fn matches_integral_representation() {
        for n in [0u32, 1, 2, 3, 7, 12] {
            for x in [1e-3, 0.5, 2.0, 10.0, 29.9, 30.1, 45.0, 90.0, 200.0, 400.0] {
                let a = bessel_i_scaled(n, x);
                let b = trapezoid(n, x);
                // the reference cancels down from the size of I_0
                let scale = b.abs().max(trapezoid(0, x));
                assert!((a - b).abs() <= 1e-12 * scale, "n={n} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn small_argument_leading_term() {
        let x: f64 = 1e-4;
        for n in 1..6u32 {
            let lead = (0.5 * x).powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
            assert!((bessel_i(n, x) / lead - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn recurrence() {
        // I_{n-1} - I_{n+1} = (2n/x) I_n
        for x in [0.7, 5.0, 33.0, 150.0] {
            for n in 1..10 {
                let lhs = bessel_i_scaled(n - 1, x) - bessel_i_scaled(n + 1, x);
                let rhs = 2.0 * f64::from(n) / x * bessel_i_scaled(n, x);
                assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(bessel_i_scaled(n - 1, x)));
            }
        }
    }
}
