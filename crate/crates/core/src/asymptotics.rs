//! Large-time (quasi-steady-state) asymptotics on the circle.
//!
//! For initial data `rho_phi(s) = beta00 v_0 + rho~(s) / T` the solution is
//! expanded in `1/T` around the homogeneous logistic solution. The first
//! correction keeps every Fourier mode separate:
//!
//! ```text
//! beta1_j(t) = beta_1j e^{(a - D j^2) t} / den(t)^{1 + lambda_j / lambda_0},
//! den(t)     = 1 + kappa lambda_0 beta00 (a sqrt(2 pi))^{-1} (e^{at} - 1),
//! ```
//!
//! and the composite density is `v_0 beta_0(t) + (T sqrt(2 pi))^{-1} sum_j
//! beta1_j(t) e^{ijs}`. The fast variable is always `theta = a t`.
//!
//! Two independent routes to the same first-order coefficients are provided
//! as checks: expanding the exponential representation of the solution
//! ([`AsymptoticExpansion::appendix_a_check`]) and solving the first-order
//! equation for `rho^{(1)}` mode by mode
//! ([`AsymptoticExpansion::appendix_b_solution`]).

use num_complex::Complex64;

use crate::error::{invalid, require_positive, Error, Result};
use crate::exact::HomogeneousModel;
use crate::kernel::CircleKernelParams;
use crate::quadrature::simpson;
use crate::spectral::{project_samples, DEFAULT_PROJECTION_POINTS};
use crate::{SQRT_2PI, V0};

/// `beta_1j = (2 pi)^{-1/2} int rho~(s) e^{-ijs} ds`, trapezoid rule on
/// `n_quad` periodic points; indexed by `j + J`.
pub fn beta1_initial<F: Fn(f64) -> f64>(
    rho_tilde: F,
    truncation: usize,
    n_quad: usize,
) -> Result<Vec<Complex64>> {
    let nodes = crate::quadrature::periodic_nodes(n_quad.max(1));
    let samples: Vec<f64> = nodes.iter().map(|&s| rho_tilde(s)).collect();
    Ok(project_samples(&samples, truncation)?.coefficients().to_vec())
}

#[derive(Debug, Clone)]
pub struct AsymptoticExpansion {
    /// Large time parameter.
    pub big_t: f64,
    pub beta00: f64,
    /// First-order initial coefficients, indexed by `j + J`.
    pub beta1: Vec<Complex64>,
    pub kernel: CircleKernelParams,
    pub a: f64,
    pub kappa: f64,
    pub diffusion: f64,
    truncation: usize,
    lambdas: Vec<f64>,
    zero_order: HomogeneousModel,
}

impl AsymptoticExpansion {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        big_t: f64,
        beta00: f64,
        beta1: Vec<Complex64>,
        kernel: CircleKernelParams,
        a: f64,
        kappa: f64,
        diffusion: f64,
    ) -> Result<Self> {
        require_positive("T", big_t)?;
        require_positive("kappa", kappa)?;
        if !(diffusion >= 0.0) || !diffusion.is_finite() {
            return Err(invalid("D", format!("must be >= 0, got {diffusion}")));
        }
        if beta1.len() % 2 == 0 {
            return Err(invalid("beta1", "need 2J+1 coefficients"));
        }
        let truncation = beta1.len() / 2;
        let zero_order = HomogeneousModel::from_kernel(a, kappa, &kernel, beta00)?;
        Ok(AsymptoticExpansion {
            big_t,
            beta00,
            beta1,
            kernel,
            a,
            kappa,
            diffusion,
            truncation,
            lambdas: kernel.eigenvalues(truncation),
            zero_order,
        })
    }

    /// Expansion for `rho_phi = beta00 v_0 + rho_tilde / T`, with `beta_1j`
    /// from [`beta1_initial`] on the default quadrature.
    #[allow(clippy::too_many_arguments)]
    pub fn from_perturbation<F: Fn(f64) -> f64>(
        big_t: f64,
        beta00: f64,
        rho_tilde: F,
        truncation: usize,
        kernel: CircleKernelParams,
        a: f64,
        kappa: f64,
        diffusion: f64,
    ) -> Result<Self> {
        let beta1 = beta1_initial(rho_tilde, truncation, DEFAULT_PROJECTION_POINTS)?;
        Self::new(big_t, beta00, beta1, kernel, a, kappa, diffusion)
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn zero_order(&self) -> &HomogeneousModel {
        &self.zero_order
    }

    fn lambda(&self, j: i64) -> f64 {
        self.lambdas[(j + self.truncation as i64) as usize]
    }

    fn beta1_coeff(&self, j: i64) -> Complex64 {
        self.beta1[(j + self.truncation as i64) as usize]
    }

    fn check_mode(&self, j: i64) -> Result<()> {
        if j.unsigned_abs() as usize > self.truncation {
            return Err(invalid(
                "j",
                format!("mode {j} outside truncation {}", self.truncation),
            ));
        }
        Ok(())
    }

    /// `(lambda_j + lambda_0) / lambda_0`.
    pub fn mode_exponent(&self, j: i64) -> f64 {
        (self.lambda(j) + self.lambda(0)) / self.lambda(0)
    }

    /// `a - D j^2`.
    pub fn mode_rate(&self, j: i64) -> f64 {
        self.a - self.diffusion * (j * j) as f64
    }

    /// First-order coefficient `beta1_j(t)`.
    pub fn beta1_evolution(&self, j: i64, t: f64) -> Result<Complex64> {
        self.check_mode(j)?;
        let ln_den = self.zero_order.ln_denominator(t);
        let g = (self.mode_rate(j) * t - self.mode_exponent(j) * ln_den).exp();
        Ok(self.beta1_coeff(j) * g)
    }

    /// Composite density `rho^{(0)} + rho^{(1)} / T` at `(t, s)`.
    pub fn composite_density(&self, t: f64, s: f64) -> Result<f64> {
        let jt = self.truncation as i64;
        let at = self.a * t;
        // e^{at} / den and den^{-p} are both bounded; combine them directly
        // while e^{at} is representable and switch to logarithms beyond that.
        let (growth_over_den, den) = if at <= 700.0 {
            let den = 1.0 + self.zero_order.logistic_coefficient() * at.exp_m1();
            (at.exp() / den, Some(den))
        } else {
            (
                (at - self.zero_order.ln_denominator(t)).exp(),
                None,
            )
        };
        let ln_den = self.zero_order.ln_denominator(t);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -jt..=jt {
            let p = self.lambda(j) / self.lambda(0);
            let damping = match den {
                Some(d) => d.powf(-p),
                None => (-p * ln_den).exp(),
            };
            let diffusive = (-self.diffusion * (j * j) as f64 * t).exp();
            acc += self.beta1_coeff(j)
                * Complex64::from_polar(growth_over_den * damping * diffusive, j as f64 * s);
        }
        let correction = acc / (self.big_t * SQRT_2PI);
        let rho = self.zero_order.rho0(t) + correction.re;
        if correction.im.abs() > 1e-10 * rho.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Inconsistent(format!(
                "composite density has imaginary part {:e}: beta1 is not conjugate symmetric",
                correction.im
            )));
        }
        Ok(rho)
    }

    pub fn composite_profile(&self, t: f64, s_grid: &[f64]) -> Result<Vec<f64>> {
        s_grid
            .iter()
            .map(|&s| self.composite_density(t, s))
            .collect()
    }

    /// Largest difference, over modes and the given times, between the
    /// first-order `v_j` coefficient of the expanded exponential
    /// representation,
    ///
    /// `(beta_0(t) / beta00) (beta_1j - beta00 v_0 kappa lambda_j int_0^t beta1_j)`,
    ///
    /// and [`Self::beta1_evolution`]. The time integral is evaluated by
    /// composite Simpson quadrature. The exponential representation has no
    /// diffusion term, so `D` must be zero.
    pub fn appendix_a_check(&self, t_grid: &[f64]) -> Result<f64> {
        if self.diffusion != 0.0 {
            return Err(invalid(
                "D",
                "the exponential representation holds only without diffusion",
            ));
        }
        let jt = self.truncation as i64;
        let mut worst: f64 = 0.0;
        for &t in t_grid {
            let ratio = self.zero_order.beta0(t) / self.beta00;
            let n = ((200.0 * t.abs()).ceil() as usize).max(200);
            for j in -jt..=jt {
                let b1 = self.beta1_coeff(j);
                if b1 == Complex64::new(0.0, 0.0) {
                    continue;
                }
                // beta1_j(t') = beta_1j g_j(t'), g_j real
                let integral = simpson(
                    |tp| {
                        let ln_den = self.zero_order.ln_denominator(tp);
                        (self.a * tp - self.mode_exponent(j) * ln_den).exp()
                    },
                    0.0,
                    t,
                    n,
                );
                let coeff = (b1
                    - b1 * (self.beta00 * V0 * self.kappa * self.lambda(j) * integral))
                    * ratio;
                let direct = self.beta1_evolution(j, t)?;
                worst = worst.max((coeff - direct).norm());
            }
        }
        Ok(worst)
    }

    /// `C_j(theta)` from the mode-by-mode solution of the first-order
    /// equation, `theta = a t`:
    ///
    /// `C_j(0) exp[theta - (1 + lambda_j/lambda_0) ln(1 + q (e^theta - 1)) - D j^2 theta / a]`,
    /// `q = kappa lambda_0 v_0 beta00 / a`.
    pub fn appendix_b_solution(&self, j: i64, theta: f64, c0: &[Complex64]) -> Result<Complex64> {
        self.check_mode(j)?;
        if c0.len() != self.beta1.len() {
            return Err(invalid("C0", "length must be 2J+1"));
        }
        let q = self.kappa * self.lambda(0) * V0 * self.beta00 / self.a;
        let ln_term = if theta < 1.0 {
            (q * theta.exp_m1()).ln_1p()
        } else {
            theta + (q + (1.0 - q) * (-theta).exp()).ln()
        };
        let exponent = theta
            - (1.0 + self.lambda(j) / self.lambda(0)) * ln_term
            - self.diffusion * (j * j) as f64 * theta / self.a;
        Ok(c0[(j + self.truncation as i64) as usize] * exponent.exp())
    }

    /// Density assembled from [`Self::appendix_b_solution`] at time `t`.
    pub fn appendix_b_density(&self, t: f64, s: f64, c0: &[Complex64]) -> Result<f64> {
        let theta = self.a * t;
        let q = self.kappa * self.lambda(0) * V0 * self.beta00 / self.a;
        let zero = V0 * self.beta00 / ((-theta).exp() + q * (-(-theta).exp_m1()));
        let jt = self.truncation as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -jt..=jt {
            acc += self.appendix_b_solution(j, theta, c0)? * Complex64::from_polar(1.0, j as f64 * s);
        }
        Ok(zero + acc.re / (self.big_t * SQRT_2PI))
    }
}
