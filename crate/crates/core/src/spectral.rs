//! Truncated Fourier-coefficient system for the SLD on the circle.
//!
//! Expanding `rho(t, s) = sum_j beta_j(t) v_j(s)` in the kernel eigenfunctions
//! `v_j(s) = e^{ijs} / sqrt(2 pi)` turns the integro-differential equation
//! into
//!
//! ```text
//! d beta_j / dt = (a - D j^2) beta_j
//!               - kappa / sqrt(2 pi) sum_l lambda_l beta_{j-l} beta_l
//! ```
//!
//! The system is truncated to `|j| <= J`. Products whose index falls outside
//! the band are dropped (Galerkin projection), never aliased back, which keeps
//! the single-mode logistic solution an exact solution of the truncated
//! system.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::kernel::CircleKernelParams;
use crate::ode::{step_plan, Rk4};
use crate::quadrature::periodic_nodes;
use crate::{SQRT_2PI, V0};

/// Quadrature points used by [`project_initial`].
pub const DEFAULT_PROJECTION_POINTS: usize = 2048;

/// Any coefficient above this magnitude aborts integration.
pub const BLOW_UP: f64 = 1e12;

/// Coefficients `beta_j`, `|j| <= J`, at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    truncation: usize,
    beta: Vec<Complex64>,
    pub t: f64,
}

impl SpectralState {
    pub fn zeros(truncation: usize) -> Self {
        SpectralState {
            truncation,
            beta: vec![Complex64::new(0.0, 0.0); 2 * truncation + 1],
            t: 0.0,
        }
    }

    /// State with `beta_j = coefficients[j + J]`.
    pub fn from_coefficients(coefficients: Vec<Complex64>, t: f64) -> Result<Self> {
        if coefficients.len() % 2 == 0 {
            return Err(invalid(
                "beta",
                format!("need 2J+1 coefficients, got {}", coefficients.len()),
            ));
        }
        Ok(SpectralState {
            truncation: coefficients.len() / 2,
            beta: coefficients,
            t,
        })
    }

    /// The homogeneous state `beta_j = beta00 delta_{j0}`.
    pub fn homogeneous(beta00: f64, truncation: usize) -> Self {
        let mut s = Self::zeros(truncation);
        s.beta[truncation] = Complex64::new(beta00, 0.0);
        s
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.beta
    }

    pub fn get(&self, j: i64) -> Complex64 {
        let jt = self.truncation as i64;
        if j.abs() > jt {
            Complex64::new(0.0, 0.0)
        } else {
            self.beta[(j + jt) as usize]
        }
    }

    pub fn set(&mut self, j: i64, value: Complex64) {
        let jt = self.truncation as i64;
        assert!(j.abs() <= jt, "mode {j} outside truncation {jt}");
        self.beta[(j + jt) as usize] = value;
    }

    /// Largest `|beta_j - conj(beta_{-j})|`; zero for real densities.
    pub fn reality_defect(&self) -> f64 {
        let jt = self.truncation as i64;
        (0..=jt)
            .map(|j| (self.get(j) - self.get(-j).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Average each `(beta_j, conj(beta_{-j}))` pair; returns the defect that
    /// was removed.
    pub fn enforce_reality(&mut self) -> f64 {
        let defect = self.reality_defect();
        let jt = self.truncation as i64;
        for j in 1..=jt {
            let avg = (self.get(j) + self.get(-j).conj()) * 0.5;
            self.set(j, avg);
            self.set(-j, avg.conj());
        }
        let b0 = self.get(0);
        self.set(0, Complex64::new(b0.re, 0.0));
        defect
    }
}

/// Mode growth rates `a - D j^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusiveRates {
    pub a: f64,
    pub diffusion: f64,
}

impl DiffusiveRates {
    pub fn new(a: f64, diffusion: f64) -> Result<Self> {
        require_finite("a", a)?;
        if !(diffusion >= 0.0) || !diffusion.is_finite() {
            return Err(invalid("D", format!("must be >= 0, got {diffusion}")));
        }
        Ok(DiffusiveRates { a, diffusion })
    }

    pub fn rate(&self, j: i64) -> f64 {
        self.a - self.diffusion * (j * j) as f64
    }
}

/// The full coefficient system: rates, coupling and kernel eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    pub rates: DiffusiveRates,
    pub kappa: f64,
    pub kernel: CircleKernelParams,
    truncation: usize,
    lambdas: Vec<f64>,
}

impl SpectralSystem {
    pub fn new(
        rates: DiffusiveRates,
        kappa: f64,
        kernel: CircleKernelParams,
        truncation: usize,
    ) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(invalid("kappa", format!("must be >= 0, got {kappa}")));
        }
        Ok(SpectralSystem {
            rates,
            kappa,
            kernel,
            truncation,
            lambdas: kernel.eigenvalues(truncation),
        })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn lambda(&self, j: i64) -> f64 {
        self.lambdas[(j + self.truncation as i64) as usize]
    }

    fn check_state(&self, state: &SpectralState) -> Result<()> {
        if state.truncation != self.truncation {
            return Err(invalid(
                "state",
                format!(
                    "truncation {} does not match system truncation {}",
                    state.truncation, self.truncation
                ),
            ));
        }
        Ok(())
    }

    /// Coefficient derivatives `d beta_j / dt`.
    pub fn rhs(&self, state: &SpectralState) -> Result<Vec<Complex64>> {
        self.check_state(state)?;
        let mut out = vec![Complex64::new(0.0, 0.0); state.beta.len()];
        self.rhs_into(&state.beta, &mut out);
        Ok(out)
    }

    fn rhs_into(&self, beta: &[Complex64], out: &mut [Complex64]) {
        let jt = self.truncation as i64;
        let c = self.kappa / SQRT_2PI;
        // weighted[l] = lambda_l beta_l
        let weighted: Vec<Complex64> = beta
            .iter()
            .zip(&self.lambdas)
            .map(|(b, l)| b * *l)
            .collect();
        for j in -jt..=jt {
            let lo = (j - jt).max(-jt);
            let hi = (j + jt).min(jt);
            let mut conv = Complex64::new(0.0, 0.0);
            for l in lo..=hi {
                conv += beta[(j - l + jt) as usize] * weighted[(l + jt) as usize];
            }
            let idx = (j + jt) as usize;
            out[idx] = beta[idx] * self.rates.rate(j) - conv * c;
        }
    }

    /// Fixed-step RK4 from `state0` to `t_end`. Every step is recorded. The
    /// reality constraint is re-imposed after each step and the largest
    /// correction is kept in [`Trajectory::max_reality_drift`].
    pub fn integrate(&self, state0: &SpectralState, t_end: f64, dt: f64) -> Result<Trajectory> {
        self.check_state(state0)?;
        require_positive("dt", dt)?;
        if !(t_end >= state0.t) || !t_end.is_finite() {
            return Err(invalid(
                "t_end",
                format!("must not precede the initial time {}, got {t_end}", state0.t),
            ));
        }
        let (steps, h) = step_plan(t_end - state0.t, dt);
        let mut state = state0.clone();
        let mut drift = state.enforce_reality();
        let mut traj = Trajectory {
            truncation: self.truncation,
            times: Vec::with_capacity(steps + 1),
            betas: Vec::with_capacity(steps + 1),
            max_reality_drift: 0.0,
        };
        traj.times.push(state.t);
        traj.betas.push(state.beta.clone());
        let mut rk = Rk4::<Complex64>::new(state.beta.len());
        let t0 = state.t;
        for n in 0..steps {
            rk.step::<_, Error>(state.t, &mut state.beta, h, |_, y, dy| {
                self.rhs_into(y, dy);
                Ok(())
            })?;
            state.t = if n + 1 == steps { t_end } else { t0 + (n + 1) as f64 * h };
            drift = drift.max(state.enforce_reality());
            if let Some(bad) = state
                .beta
                .iter()
                .find(|b| !b.re.is_finite() || !b.im.is_finite() || b.norm() > BLOW_UP)
            {
                return Err(Error::Aborted {
                    t: state.t,
                    reason: format!("coefficient blow-up: |beta| = {}", bad.norm()),
                });
            }
            traj.times.push(state.t);
            traj.betas.push(state.beta.clone());
        }
        traj.max_reality_drift = drift;
        Ok(traj)
    }

    /// Exponential representation of the solution at the last time of
    /// `trajectory`:
    ///
    /// `rho(t, s) = rho_phi(s) exp[a t - kappa sum_j lambda_j v_j(s) int_0^t beta_j]`,
    ///
    /// with the time integrals taken by the trapezoid rule over the stored
    /// steps. Only valid without diffusion.
    pub fn exponential_form<F: Fn(f64) -> f64>(
        &self,
        trajectory: &Trajectory,
        rho_phi: F,
        s_grid: &[f64],
    ) -> Result<Vec<f64>> {
        if self.rates.diffusion != 0.0 {
            return Err(invalid(
                "D",
                "the exponential representation holds only without diffusion",
            ));
        }
        if trajectory.truncation != self.truncation {
            return Err(invalid("trajectory", "truncation mismatch"));
        }
        let integrals = trajectory.time_integrals();
        let jt = self.truncation as i64;
        let t = trajectory.t_end() - trajectory.times[0];
        Ok(s_grid
            .iter()
            .map(|&s| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in -jt..=jt {
                    let v = Complex64::from_polar(V0, j as f64 * s);
                    acc += integrals[(j + jt) as usize] * v * self.lambda(j);
                }
                rho_phi(s) * (self.rates.a * t - self.kappa * acc.re).exp()
            })
            .collect())
    }
}

/// Recorded coefficient history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    truncation: usize,
    pub times: Vec<f64>,
    pub betas: Vec<Vec<Complex64>>,
    pub max_reality_drift: f64,
}

impl Trajectory {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, index: usize) -> SpectralState {
        SpectralState {
            truncation: self.truncation,
            beta: self.betas[index].clone(),
            t: self.times[index],
        }
    }

    pub fn last(&self) -> SpectralState {
        self.state(self.len() - 1)
    }

    /// Recorded state whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> SpectralState {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.state(i)
    }

    /// Trapezoid integrals `int beta_j dt` over the whole trajectory.
    pub fn time_integrals(&self) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); 2 * self.truncation + 1];
        for w in 1..self.times.len() {
            let h = self.times[w] - self.times[w - 1];
            for (k, a) in acc.iter_mut().enumerate() {
                *a += (self.betas[w][k] + self.betas[w - 1][k]) * (0.5 * h);
            }
        }
        acc
    }

    /// CSV with header `t,j,re_beta,im_beta`, one row per mode and recorded
    /// time; `stride` thins the time axis.
    pub fn write_csv<W: Write>(&self, out: &mut W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let jt = self.truncation as i64;
        let last = self.times.len() - 1;
        let rows = self
            .times
            .iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0 || *i == last)
            .flat_map(|(i, &t)| {
                (-jt..=jt).map(move |j| {
                    let b = self.betas[i][(j + jt) as usize];
                    [t, j as f64, b.re, b.im]
                })
            });
        crate::csv::write_rows(out, &["t", "j", "re_beta", "im_beta"], rows)
    }
}

/// `beta_0j = int v_j^*(s) rho_phi(s) ds` by the trapezoid rule on
/// `n_quad` periodic points.
pub fn project_initial<F: Fn(f64) -> f64>(
    rho_phi: F,
    truncation: usize,
    n_quad: usize,
) -> Result<SpectralState> {
    let nodes = periodic_nodes(n_quad.max(1));
    let samples: Vec<f64> = nodes.iter().map(|&s| rho_phi(s)).collect();
    project_samples(&samples, truncation)
}

/// Projection of samples given on [`periodic_nodes`].
pub fn project_samples(samples: &[f64], truncation: usize) -> Result<SpectralState> {
    if samples.is_empty() {
        return Err(invalid("rho_phi", "no samples"));
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(invalid("rho_phi", format!("non-finite sample {bad}")));
    }
    let n = samples.len();
    let nodes = periodic_nodes(n);
    let h = 2.0 * PI / n as f64;
    let mut state = SpectralState::zeros(truncation);
    let jt = truncation as i64;
    for j in 0..=jt {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&s, &v) in nodes.iter().zip(samples) {
            acc += Complex64::from_polar(v, -(j as f64) * s);
        }
        let b = acc * (h * V0);
        state.set(j, b);
        state.set(-j, b.conj());
    }
    let b0 = state.get(0);
    state.set(0, Complex64::new(b0.re, 0.0));
    Ok(state)
}

/// `rho(s_k) = sum_j beta_j v_j(s_k)`. Fails if the imaginary part exceeds
/// `1e-10 max |rho|`, i.e. if the coefficients are not conjugate symmetric.
pub fn reconstruct(state: &SpectralState, s_grid: &[f64]) -> Result<Vec<f64>> {
    let jt = state.truncation as i64;
    let mut re = Vec::with_capacity(s_grid.len());
    let mut worst_im: f64 = 0.0;
    for &s in s_grid {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -jt..=jt {
            acc += state.get(j) * Complex64::from_polar(V0, j as f64 * s);
        }
        worst_im = worst_im.max(acc.im.abs());
        re.push(acc.re);
    }
    let scale = re.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst_im > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Inconsistent(format!(
            "reconstructed density has imaginary part {worst_im:e} (max |rho| = {scale:e})"
        )));
    }
    Ok(re)
}

/// An orthonormal family `v_j` on an interval, indexed by `|j| <= max_index`.
pub trait OrthonormalBasis {
    fn domain(&self) -> (f64, f64);
    fn max_index(&self) -> i64;
    fn eval(&self, j: i64, s: f64) -> Complex64;
    /// Whether the domain is periodic (selects the quadrature rule).
    fn periodic(&self) -> bool;
}

/// `v_j(s) = e^{ijs} / sqrt(2 pi)` on `[-pi, pi)`.
#[derive(Debug, Clone, Copy)]
pub struct FourierBasis {
    pub max_index: i64,
}

impl OrthonormalBasis for FourierBasis {
    fn domain(&self) -> (f64, f64) {
        (-PI, PI)
    }
    fn max_index(&self) -> i64 {
        self.max_index
    }
    fn eval(&self, j: i64, s: f64) -> Complex64 {
        Complex64::from_polar(V0, j as f64 * s)
    }
    fn periodic(&self) -> bool {
        true
    }
}

fn quadrature_nodes<B: OrthonormalBasis>(basis: &B, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = basis.domain();
    if basis.periodic() {
        let h = (hi - lo) / n as f64;
        ((0..n).map(|k| lo + k as f64 * h).collect(), vec![h; n])
    } else {
        let h = (hi - lo) / (n - 1) as f64;
        (
            (0..n).map(|k| lo + k as f64 * h).collect(),
            crate::quadrature::trapezoid_weights(n, h),
        )
    }
}

/// Coefficients `Omega_{j j'}^{j''}` of the product `v_j^* v_{j'}` in the
/// family `{v_{j''}^*}`, i.e. `int v_j^* v_{j'} v_{j''} ds`, for every
/// `|j''| <= max_index`. The basis is first checked for orthonormality on the
/// same quadrature; a Gram residual above `1e-8` is rejected.
pub fn omega_coefficients<B: OrthonormalBasis>(
    j: i64,
    j_prime: i64,
    basis: &B,
    n_quad: usize,
) -> Result<Vec<(i64, Complex64)>> {
    if n_quad < 2 {
        return Err(invalid("n_quad", "need at least two points"));
    }
    let (nodes, weights) = quadrature_nodes(basis, n_quad);
    let k = basis.max_index();
    let table: Vec<Vec<Complex64>> = (-k..=k)
        .map(|m| nodes.iter().map(|&s| basis.eval(m, s)).collect())
        .collect();
    let row = |m: i64| &table[(m + k) as usize];
    let inner = |p: &[Complex64], q: &[Complex64]| -> Complex64 {
        p.iter()
            .zip(q)
            .zip(&weights)
            .map(|((a, b), w)| a.conj() * b * *w)
            .sum()
    };
    let mut gram_residual: f64 = 0.0;
    for a in -k..=k {
        for b in -k..=k {
            let g = inner(row(a), row(b));
            let target = if a == b { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((g - target).norm());
        }
    }
    if gram_residual > 1e-8 {
        return Err(Error::Inconsistent(format!(
            "basis is not orthonormal: Gram residual {gram_residual:e}"
        )));
    }
    if j.abs() > k || j_prime.abs() > k {
        return Err(invalid("j", format!("indices must satisfy |j| <= {k}")));
    }
    let product: Vec<Complex64> = row(j)
        .iter()
        .zip(row(j_prime))
        .map(|(a, b)| a.conj() * b)
        .collect();
    Ok((-k..=k)
        .map(|m| {
            let c: Complex64 = product
                .iter()
                .zip(row(m))
                .zip(&weights)
                .map(|((p, v), w)| p * v * *w)
                .sum();
            (m, c)
        })
        .collect())
}
