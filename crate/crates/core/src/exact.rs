//! Spatially homogeneous solution on the circle.
//!
//! With symmetric initial data only the zero Fourier mode is excited and it
//! obeys the logistic equation
//!
//! ```text
//! d beta_0 / dt = a beta_0 - kappa lambda_0 beta_0^2 / sqrt(2 pi)
//! ```
//!
//! whose solution, the derived density `rho_0 = v_0 beta_0`, its limit
//! `a / (kappa lambda_0)` and the characteristic times are collected here.
//!
//! All expressions are written through `ln den(t)`, where
//! `den(t) = 1 + c (e^{at} - 1)` and `c = kappa lambda_0 beta_00 / (a sqrt(2 pi))`,
//! so nothing overflows for large `at`.

use crate::error::{require_positive, Error, Result};
use crate::kernel::CircleKernelParams;
use crate::{SQRT_2PI, V0};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousModel {
    /// Growth rate.
    pub a: f64,
    /// Nonlocal coupling.
    pub kappa: f64,
    /// Zero-mode eigenvalue of the kernel.
    pub lambda0: f64,
    /// Initial zero-mode coefficient.
    pub beta00: f64,
}

impl HomogeneousModel {
    pub fn new(a: f64, kappa: f64, lambda0: f64, beta00: f64) -> Result<Self> {
        require_positive("a", a)?;
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(crate::error::invalid(
                "kappa",
                format!("must be finite and >= 0, got {kappa}"),
            ));
        }
        require_positive("lambda0", lambda0)?;
        require_positive("beta00", beta00)?;
        Ok(HomogeneousModel {
            a,
            kappa,
            lambda0,
            beta00,
        })
    }

    /// Model whose `lambda_0` comes from the circle kernel.
    pub fn from_kernel(a: f64, kappa: f64, kernel: &CircleKernelParams, beta00: f64) -> Result<Self> {
        Self::new(a, kappa, kernel.eigenvalue(0), beta00)
    }

    /// `c = kappa lambda_0 beta_00 / (a sqrt(2 pi))`.
    pub fn logistic_coefficient(&self) -> f64 {
        self.kappa * self.lambda0 * self.beta00 / (self.a * SQRT_2PI)
    }

    /// `kappa lambda_0 v_0 beta_00`; the solution grows iff `a` exceeds it.
    pub fn competition_rate(&self) -> f64 {
        self.kappa * self.lambda0 * V0 * self.beta00
    }

    /// `ln(1 + c (e^{at} - 1))`.
    pub fn ln_denominator(&self, t: f64) -> f64 {
        let at = self.a * t;
        let c = self.logistic_coefficient();
        if at < 1.0 {
            (c * at.exp_m1()).ln_1p()
        } else {
            at + (c + (1.0 - c) * (-at).exp()).ln()
        }
    }

    pub fn beta0(&self, t: f64) -> f64 {
        let at = self.a * t;
        if at < 1.0 {
            self.beta00 * (at - self.ln_denominator(t)).exp()
        } else {
            let c = self.logistic_coefficient();
            self.beta00 / (c + (1.0 - c) * (-at).exp())
        }
    }

    pub fn rho0(&self, t: f64) -> f64 {
        V0 * self.beta0(t)
    }

    pub fn rho0_dt(&self, t: f64) -> f64 {
        let num = V0 * self.beta00 * (self.a - self.competition_rate());
        let at = self.a * t;
        if at < 1.0 {
            num * (at - 2.0 * self.ln_denominator(t)).exp()
        } else {
            let c = self.logistic_coefficient();
            let d = c + (1.0 - c) * (-at).exp();
            num * (-at).exp() / (d * d)
        }
    }

    /// `a / (kappa lambda_0)`.
    pub fn rho_lim(&self) -> Result<f64> {
        if self.kappa == 0.0 {
            return Err(Error::NoSolution(
                "kappa = 0: pure exponential growth has no finite limit".into(),
            ));
        }
        Ok(self.a / (self.kappa * self.lambda0))
    }

    /// Time at which the growth rate `rho0_dt` peaks. Exists only when
    /// `a > 2 kappa lambda_0 v_0 beta_00`; otherwise the rate is largest at
    /// `t = 0`.
    pub fn t_max(&self) -> Result<f64> {
        if !(self.a > 2.0 * self.competition_rate()) {
            return Err(Error::NoSolution(format!(
                "a = {} <= 2 kappa lambda0 v0 beta00 = {}: rate is maximal at t = 0",
                self.a,
                2.0 * self.competition_rate()
            )));
        }
        let ratio = self.rho_lim()? * SQRT_2PI / self.beta00;
        Ok((ratio - 1.0).ln() / self.a)
    }

    /// Time `T_c` with `rho0(T_c) = alpha rho_lim`.
    ///
    /// Growing solutions approach the limit from below and need
    /// `0 < alpha < 1`; decaying ones need `alpha > 1`.
    pub fn t_quasi_steady(&self, alpha: f64) -> Result<f64> {
        let rate = self.competition_rate();
        let growing = self.a > rate;
        let ok = if growing {
            alpha > 0.0 && alpha < 1.0
        } else if self.a < rate {
            alpha > 1.0 && alpha.is_finite()
        } else {
            false
        };
        if !ok {
            return Err(Error::NoSolution(format!(
                "alpha = {alpha} is not reachable: solution {} towards the limit",
                if growing {
                    "increases"
                } else if self.a < rate {
                    "decreases"
                } else {
                    "is already at"
                }
            )));
        }
        let ratio = self.rho_lim()? * SQRT_2PI / self.beta00;
        let arg = alpha / (1.0 - alpha) * (ratio - 1.0);
        if !(arg > 0.0) {
            return Err(Error::NoSolution(format!(
                "logarithm argument {arg} is not positive"
            )));
        }
        Ok(arg.ln() / self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: f64) -> HomogeneousModel {
        let k = CircleKernelParams::new(1.0, 1.0, 1.0).unwrap();
        HomogeneousModel::from_kernel(a, 0.2, &k, 1.0).unwrap()
    }

    #[test]
    fn initial_values() {
        let m = model(1.0);
        assert_eq!(m.beta0(0.0), 1.0);
        assert!((m.rho0(0.0) - V0).abs() < 1e-16);
    }

    #[test]
    fn no_coupling_is_exponential() {
        let k = CircleKernelParams::new(1.0, 1.0, 1.0).unwrap();
        let m = HomogeneousModel::from_kernel(0.7, 0.0, &k, 2.0).unwrap();
        for t in [0.5f64, 3.0, 10.0] {
            let e = 2.0 * (0.7 * t).exp();
            assert!((m.beta0(t) - e).abs() < 1e-12 * e);
        }
        assert!(matches!(m.rho_lim(), Err(Error::NoSolution(_))));
    }

    #[test]
    fn limit_identity_exact() {
        let m = model(1.0);
        let l = m.rho_lim().unwrap();
        assert!((l * m.kappa * m.lambda0 - m.a).abs() < 1e-15);
    }

    #[test]
    fn no_overflow_far_out() {
        let m = model(1.0);
        let lim = m.rho_lim().unwrap();
        let r = m.rho0(2000.0);
        assert!((r - lim).abs() < 1e-14 * lim);
        assert!(m.rho0_dt(2000.0).abs() < 1e-300);
    }

    #[test]
    fn rejects_nonpositive_growth() {
        let k = CircleKernelParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(HomogeneousModel::from_kernel(0.0, 0.2, &k, 1.0).is_err());
        assert!(HomogeneousModel::from_kernel(-1.0, 0.2, &k, 1.0).is_err());
        assert!(HomogeneousModel::from_kernel(1.0, -0.2, &k, 1.0).is_err());
    }

    #[test]
    fn t_max_only_in_fast_growth_regime() {
        assert!(model(1.0).t_max().is_ok());
        assert!(matches!(model(0.1).t_max(), Err(Error::NoSolution(_))));
    }

    #[test]
    fn t_quasi_steady_regimes() {
        assert!(model(1.0).t_quasi_steady(0.95).is_ok());
        assert!(model(1.0).t_quasi_steady(1.05).is_err());
        assert!(model(0.1).t_quasi_steady(1.05).is_ok());
        assert!(model(0.1).t_quasi_steady(0.95).is_err());
        assert!(model(1.0).t_quasi_steady(1.0).is_err());
    }
}
