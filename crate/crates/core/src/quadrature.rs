//! Small quadrature helpers shared by the solvers.

use std::f64::consts::PI;

/// Uniform periodic nodes `s_k = -pi + 2 pi k / n`, `k = 0..n`.
pub fn periodic_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| -PI + 2.0 * PI * k as f64 / n as f64)
        .collect()
}

/// Rectangle rule on a uniform periodic grid over one period of length
/// `2 pi`. Equals the trapezoid rule under periodicity.
pub fn periodic_sum(values: &[f64]) -> f64 {
    let h = 2.0 * PI / values.len() as f64;
    h * values.iter().sum::<f64>()
}

/// Composite Simpson rule with `n` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Trapezoid weights for `n` nodes on a closed interval with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 1 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// Linear interpolation of a `2 pi`-periodic profile sampled on
/// [`periodic_nodes`] at an arbitrary angle.
pub fn periodic_interpolate(profile: &[f64], s: f64) -> f64 {
    let n = profile.len();
    let h = 2.0 * PI / n as f64;
    let x = (s + PI).rem_euclid(2.0 * PI) / h;
    let k = x.floor() as usize % n;
    let frac = x - x.floor();
    profile[k] * (1.0 - frac) + profile[(k + 1) % n] * frac
}
