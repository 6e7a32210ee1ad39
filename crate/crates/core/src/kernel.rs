//! Gaussian influence kernel on a circle and its Fredholm eigenpairs.
//!
//! Restricted to the circle `X(s) = (R cos s, R sin s)`, the planar kernel
//! `b0 exp(-|x - y|^2 / 2 gamma^2)` becomes
//!
//! ```text
//! b(s, s') = b0 exp(-mu (1 - cos(s - s'))),    mu = R^2 / gamma^2
//! ```
//!
//! which is translation invariant, so its eigenfunctions are the Fourier
//! modes `v_j(s) = e^{ijs} / sqrt(2 pi)` with eigenvalues
//! `lambda_j = 2 pi b0 e^{-mu} I_|j|(mu)`.

use std::f64::consts::PI;

use crate::error::{invalid, require_positive, Error, Result};

/// Largest argument for which `I_n(x)` itself is representable.
const MAX_UNSCALED_ARG: f64 = 700.0;

/// Exponentially scaled modified Bessel function `e^{-x} I_n(x)`.
///
/// Uses the ascending series when `x <= 2n` and Miller's backward
/// recurrence normalised by `e^{-x} (I_0 + 2 sum_k I_k) = 1` otherwise. The
/// scaled value never overflows, which is what the eigenvalues need.
pub fn bessel_i_scaled(order: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(invalid("mu", format!("must be finite and >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(if order == 0 { 1.0 } else { 0.0 });
    }
    if x <= 2.0 * order as f64 {
        Ok(series_scaled(order, x))
    } else {
        Ok(miller_scaled(order, x))
    }
}

/// Modified Bessel function of the first kind `I_n(x)`.
pub fn bessel_i(order: u32, x: f64) -> Result<f64> {
    let scaled = bessel_i_scaled(order, x)?;
    if x > MAX_UNSCALED_ARG {
        return Err(Error::Overflow(format!(
            "I_{order}({x}) exceeds the f64 range; use bessel_i_scaled"
        )));
    }
    let v = scaled * x.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("I_{order}({x})")))
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn series_scaled(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let ln_first = n as f64 * half.ln() - ln_factorial(n) - x;
    let q = half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    (ln_first + sum.ln()).exp()
}

fn miller_scaled(n: u32, x: f64) -> f64 {
    let significant = (9.0 * x.sqrt()).ceil() as u32 + 10;
    let mut m = n.max(significant) + significant + 30;
    m += m % 2;
    let mut above = 0.0; // i_{k+1}
    let mut cur = 1e-280; // i_k
    let mut sum = 0.0;
    let mut wanted = 0.0;
    for k in (1..=m).rev() {
        if k == n {
            wanted = cur;
        }
        sum += 2.0 * cur;
        let below = (2.0 * k as f64 / x) * cur + above;
        above = cur;
        cur = below;
        if cur > 1e250 {
            above *= 1e-250;
            cur *= 1e-250;
            sum *= 1e-250;
            wanted *= 1e-250;
        }
    }
    if n == 0 {
        wanted = cur;
    }
    sum += cur;
    wanted / sum
}

/// Map an angle onto `[-pi, pi)`.
pub fn canonical_angle(s: f64) -> f64 {
    let r = (s + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        -PI
    } else {
        r
    }
}

/// Gaussian influence kernel restricted to a circle of radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleKernelParams {
    pub b0: f64,
    pub gamma: f64,
    pub radius: f64,
}

/// Fredholm eigenpair `(j, lambda_j)` of the circle kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub j: i64,
    pub lambda: f64,
}

impl CircleKernelParams {
    pub fn new(b0: f64, gamma: f64, radius: f64) -> Result<Self> {
        require_positive("b0", b0)?;
        require_positive("gamma", gamma)?;
        require_positive("R", radius)?;
        Ok(CircleKernelParams { b0, gamma, radius })
    }

    /// `mu = R^2 / gamma^2`.
    pub fn mu(&self) -> f64 {
        let r = self.radius / self.gamma;
        r * r
    }

    /// `b0 exp(-mu (1 - cos(s - s')))`.
    pub fn kernel_value(&self, s: f64, s_prime: f64) -> f64 {
        self.kernel_of_difference(canonical_angle(s - s_prime))
    }

    /// Kernel as a function of the angular separation only.
    pub fn kernel_of_difference(&self, d: f64) -> f64 {
        // 1 - cos d = 2 sin^2(d/2), which keeps precision for small d
        let h = (0.5 * d).sin();
        self.b0 * (-2.0 * self.mu() * h * h).exp()
    }

    /// `lambda_j = 2 pi b0 e^{-mu} I_|j|(mu)`.
    pub fn eigenvalue(&self, j: i64) -> f64 {
        let order = j.unsigned_abs().min(u32::MAX as u64) as u32;
        // mu > 0 and finite by construction, so the scaled Bessel cannot fail
        let scaled = bessel_i_scaled(order, self.mu()).unwrap_or(0.0);
        2.0 * PI * self.b0 * scaled
    }

    pub fn eigenpair(&self, j: i64) -> EigenPair {
        EigenPair {
            j,
            lambda: self.eigenvalue(j),
        }
    }

    /// Eigenvalues `lambda_{-J} ..= lambda_J`, indexed by `j + J`.
    pub fn eigenvalues(&self, truncation: usize) -> Vec<f64> {
        let jt = truncation as i64;
        (-jt..=jt).map(|j| self.eigenvalue(j)).collect()
    }

    /// `ceil(8 mu) + 20`: past `j ~ mu` the Bessel tail decays faster than
    /// exponentially, so this truncation resolves the kernel to roundoff.
    pub fn default_truncation(&self) -> usize {
        (8.0 * self.mu()).ceil() as usize + 20
    }

    /// `sum_{|j| <= J} lambda_j v_j(s) v_j^*(s')`.
    pub fn spectral_reconstruction(&self, s: f64, s_prime: f64, truncation: usize) -> f64 {
        let d = canonical_angle(s - s_prime);
        // lambda_j = lambda_{-j}: pair the terms into cosines
        let mut acc = self.eigenvalue(0);
        for j in 1..=truncation as i64 {
            acc += 2.0 * self.eigenvalue(j) * (j as f64 * d).cos();
        }
        acc / (2.0 * PI)
    }
}
