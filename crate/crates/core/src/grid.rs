//! Method-of-lines solver for the nonlocal FKPP equation on the circle,
//!
//! ```text
//! rho_t = D rho_ss + a rho - kappa rho(s) int b(s, s') rho(s') ds',
//! ```
//!
//! on a uniform periodic grid `s_k = -pi + 2 pi k / N`. The integral is a
//! rectangle-rule circular convolution, evaluated either by a direct double
//! loop or through an FFT.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::analysis::{count_peaks, homogeneity, DEFAULT_PROMINENCE};
use crate::csv::write_rows;
use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::exec::ExecMode;
use crate::kernel::CircleKernelParams;
use crate::ode::{step_plan, Rk4};
use crate::quadrature::periodic_nodes;

/// Default number of grid nodes.
pub const DEFAULT_NODES: usize = 512;
/// Relative size below which negative densities count as roundoff.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;
const BLOW_UP: f64 = 1e12;
const BACKEND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Direct,
    Fast,
}

impl Backend {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "direct" => Ok(Backend::Direct),
            "fast" | "fft" => Ok(Backend::Fast),
            other => Err(invalid("backend", format!("unknown backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
    /// RK4 on the reaction terms followed by a backward-Euler diffusion
    /// solve.
    Imex,
}

impl Scheme {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "euler" => Ok(Scheme::Euler),
            "rk4" => Ok(Scheme::Rk4),
            "imex" => Ok(Scheme::Imex),
            other => Err(invalid("scheme", format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub s: Vec<f64>,
    pub rho: Vec<f64>,
    pub t: f64,
}

impl GridState {
    pub fn new(rho: Vec<f64>, t: f64) -> Result<Self> {
        if rho.len() < 4 {
            return Err(invalid("N", "need at least 4 nodes"));
        }
        for &v in &rho {
            require_finite("rho", v)?;
        }
        Ok(GridState {
            s: periodic_nodes(rho.len()),
            rho,
            t,
        })
    }

    pub fn n(&self) -> usize {
        self.rho.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n() as f64
    }

    /// `m = (2 pi / N) sum_k rho_k`.
    pub fn total_mass(&self) -> f64 {
        self.spacing() * self.rho.iter().sum::<f64>()
    }

    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        let rows = self.s.iter().zip(&self.rho).map(|(&s, &r)| [s, r]);
        write_rows(&mut out, &["s", "rho"], rows)
    }
}

/// Initial profiles on the periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `beta00 v_0`.
    Homogeneous { beta00: f64 },
    /// `background + amplitude exp(-s^2 / width)`.
    GaussianBump {
        background: f64,
        amplitude: f64,
        width: f64,
    },
    /// Indicator of `|s| < half_width`. Each node takes the fraction of its
    /// cell inside the interval, so a node sitting on a jump gets 1/2.
    Cutoff { half_width: f64 },
    FromSamples(Vec<f64>),
}

impl InitialCondition {
    pub const KINDS: [&'static str; 4] = ["homogeneous", "gaussian_bump", "cutoff", "from_samples"];

    /// Small perturbation of a homogeneous state, `beta00 v_0 + exp(-s^2/0.6) / T`.
    pub fn perturbed(beta00: f64, big_t: f64) -> Self {
        InitialCondition::GaussianBump {
            background: beta00 * crate::V0,
            amplitude: 1.0 / big_t,
            width: 0.6,
        }
    }

    pub fn sample(&self, n: usize) -> Result<GridState> {
        let s = periodic_nodes(n);
        let h = 2.0 * PI / n as f64;
        let rho = match self {
            InitialCondition::Homogeneous { beta00 } => {
                require_positive("beta00", *beta00)?;
                vec![beta00 * crate::V0; n]
            }
            InitialCondition::GaussianBump {
                background,
                amplitude,
                width,
            } => {
                require_positive("width", *width)?;
                require_finite("background", *background)?;
                require_finite("amplitude", *amplitude)?;
                s.iter()
                    .map(|x| background + amplitude * (-x * x / width).exp())
                    .collect()
            }
            InitialCondition::Cutoff { half_width } => {
                require_positive("half_width", *half_width)?;
                let w = *half_width;
                s.iter()
                    .map(|x| {
                        let lo = (x - 0.5 * h).max(-w);
                        let hi = (x + 0.5 * h).min(w);
                        ((hi - lo) / h).clamp(0.0, 1.0)
                    })
                    .collect()
            }
            InitialCondition::FromSamples(v) => {
                if v.len() != n {
                    return Err(invalid(
                        "samples",
                        format!("expected {n} samples, got {}", v.len()),
                    ));
                }
                v.clone()
            }
        };
        GridState::new(rho, 0.0)
    }
}

/// Nonlocal term `I_k = (2 pi / N) sum_l b(s_k, s_l) rho_l`.
pub fn nonlocal_term(rho: &[f64], kernel: &CircleKernelParams, backend: Backend) -> Result<Vec<f64>> {
    let conv = Convolution::new(rho.len(), kernel)?;
    let mut out = vec![0.0; rho.len()];
    conv.apply(rho, backend, ExecMode::Reference, &mut out);
    Ok(out)
}

struct Convolution {
    h: f64,
    /// `b` at node offsets `m h`, `m = 0..N`.
    stencil: Vec<f64>,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Convolution {
    fn new(n: usize, kernel: &CircleKernelParams) -> Result<Self> {
        if n < 4 {
            return Err(invalid("N", "need at least 4 nodes"));
        }
        let h = 2.0 * PI / n as f64;
        let stencil: Vec<f64> = (0..n)
            .map(|m| kernel.kernel_of_difference(m as f64 * h))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let mut spectrum: Vec<Complex64> = stencil.iter().map(|&g| Complex64::new(g, 0.0)).collect();
        forward.process(&mut spectrum);
        Ok(Convolution {
            h,
            stencil,
            spectrum,
            forward,
            inverse,
        })
    }

    fn apply(&self, rho: &[f64], backend: Backend, mode: ExecMode, out: &mut [f64]) {
        let n = rho.len();
        match backend {
            Backend::Direct => mode.fill(out, |k| {
                let mut acc = 0.0;
                for (l, &r) in rho.iter().enumerate() {
                    acc += self.stencil[(k + n - l) % n] * r;
                }
                self.h * acc
            }),
            Backend::Fast => {
                let mut buf: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
                self.forward.process(&mut buf);
                for (b, g) in buf.iter_mut().zip(&self.spectrum) {
                    *b *= g;
                }
                self.inverse.process(&mut buf);
                let scale = self.h / n as f64;
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re * scale;
                }
            }
        }
    }
}

/// Solve the periodic system `(1 + 2r) x_k - r (x_{k-1} + x_{k+1}) = d_k`
/// in place (Sherman-Morrison reduction to two tridiagonal solves).
fn solve_cyclic(r: f64, d: &mut [f64]) {
    let n = d.len();
    let (lower, diag, upper) = (-r, 1.0 + 2.0 * r, -r);
    let (alpha, beta) = (lower, upper); // corner entries A[n-1][0], A[0][n-1]
    let gamma = -diag;
    let mut bb = vec![diag; n];
    bb[0] = diag - gamma;
    bb[n - 1] = diag - alpha * beta / gamma;
    let thomas = |rhs: &mut [f64]| {
        let mut c = vec![0.0; n];
        c[0] = upper / bb[0];
        rhs[0] /= bb[0];
        for i in 1..n {
            let m = bb[i] - lower * c[i - 1];
            c[i] = upper / m;
            rhs[i] = (rhs[i] - lower * rhs[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i] * rhs[i + 1];
        }
    };
    thomas(d);
    let mut z = vec![0.0; n];
    z[0] = gamma;
    z[n - 1] = alpha;
    thomas(&mut z);
    let fact = (d[0] + beta * d[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (x, zi) in d.iter_mut().zip(&z) {
        *x -= fact * zi;
    }
}

/// Time stepper for one grid and one parameter set.
pub struct GridSolver {
    pub kernel: CircleKernelParams,
    pub a: f64,
    pub kappa: f64,
    pub diffusion: f64,
    pub backend: Backend,
    pub scheme: Scheme,
    pub mode: ExecMode,
    /// Recompute every fast nonlocal term with the direct backend and fail
    /// on disagreement.
    pub self_check: bool,
    /// Number of negative values within roundoff that were set to zero.
    pub clamped: usize,
    /// Steps of [`GridSolver::run`] that had to be split to respect the
    /// stability bound.
    pub split_steps: usize,
    n: usize,
    conv: Convolution,
    rk: Rk4<f64>,
    nonlocal: Vec<f64>,
}

impl GridSolver {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        kernel: CircleKernelParams,
        a: f64,
        kappa: f64,
        diffusion: f64,
        backend: Backend,
        scheme: Scheme,
    ) -> Result<Self> {
        require_finite("a", a)?;
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(invalid("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        if !(diffusion >= 0.0) || !diffusion.is_finite() {
            return Err(invalid("D", format!("must be finite and >= 0, got {diffusion}")));
        }
        Ok(GridSolver {
            kernel,
            a,
            kappa,
            diffusion,
            backend,
            scheme,
            mode: ExecMode::from_env(),
            self_check: false,
            clamped: 0,
            split_steps: 0,
            n,
            conv: Convolution::new(n, &kernel)?,
            rk: Rk4::new(n),
            nonlocal: vec![0.0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    fn check_grid(&self, state: &GridState) -> Result<()> {
        if state.n() != self.n {
            return Err(invalid(
                "N",
                format!("state has {} nodes, solver {}", state.n(), self.n),
            ));
        }
        Ok(())
    }

    pub fn nonlocal_term(&self, state: &GridState) -> Result<Vec<f64>> {
        self.check_grid(state)?;
        let mut out = vec![0.0; self.n];
        self.conv.apply(&state.rho, self.backend, self.mode, &mut out);
        if self.self_check && self.backend == Backend::Fast {
            self.compare_backends(&state.rho, &out)?;
        }
        Ok(out)
    }

    fn compare_backends(&self, rho: &[f64], fast: &[f64]) -> Result<()> {
        let mut direct = vec![0.0; self.n];
        self.conv.apply(rho, Backend::Direct, self.mode, &mut direct);
        let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = direct
            .iter()
            .zip(fast)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        if diff > BACKEND_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Inconsistent(format!(
                "fast and direct nonlocal terms differ by {diff:e} (scale {scale:e})"
            )));
        }
        Ok(())
    }

    /// Largest admissible time step for the current state:
    /// `0.8 min(ds^2 / 2D, 1 / (a + kappa lambda_0 max rho))`, without the
    /// diffusive part for the imex scheme.
    pub fn stability_bound(&self, state: &GridState) -> f64 {
        let max_rho = state.rho.iter().fold(0.0f64, |m, &v| m.max(v));
        let reaction = 1.0 / (self.a.abs() + self.kappa * self.kernel.eigenvalue(0) * max_rho);
        let h = self.spacing();
        let diffusive = if self.diffusion > 0.0 && self.scheme != Scheme::Imex {
            h * h / (2.0 * self.diffusion)
        } else {
            f64::INFINITY
        };
        0.8 * reaction.min(diffusive)
    }

    /// Advance `state` by `dt`.
    pub fn step(&mut self, state: &mut GridState, dt: f64) -> Result<()> {
        self.check_grid(state)?;
        require_positive("dt", dt)?;
        let bound = self.stability_bound(state);
        if dt > bound {
            return Err(Error::Unstable { dt, bound });
        }
        let with_diffusion = self.scheme != Scheme::Imex;
        let n = self.n;
        let h2 = self.spacing() * self.spacing();
        let (a, kappa, diff) = (self.a, self.kappa, self.diffusion);
        let backend = self.backend;
        let mode = self.mode;
        let self_check = self.self_check && backend == Backend::Fast;
        let conv = &self.conv;
        let nonlocal = &mut self.nonlocal;
        let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            conv.apply(y, backend, mode, nonlocal);
            if self_check {
                let mut direct = vec![0.0; n];
                conv.apply(y, Backend::Direct, mode, &mut direct);
                let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let d = direct
                    .iter()
                    .zip(nonlocal.iter())
                    .fold(0.0f64, |m, (x, z)| m.max((x - z).abs()));
                if d > BACKEND_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::Inconsistent(format!(
                        "fast and direct nonlocal terms differ by {d:e}"
                    )));
                }
            }
            let nl = &*nonlocal;
            mode.fill(dy, |k| {
                let mut v = y[k] * (a - kappa * nl[k]);
                if with_diffusion && diff > 0.0 {
                    let lap = y[(k + 1) % n] - 2.0 * y[k] + y[(k + n - 1) % n];
                    v += diff * lap / h2;
                }
                v
            });
            Ok(())
        };
        match self.scheme {
            Scheme::Euler => {
                let mut dy = vec![0.0; n];
                rhs(state.t, &state.rho, &mut dy)?;
                for (r, d) in state.rho.iter_mut().zip(&dy) {
                    *r += dt * d;
                }
            }
            Scheme::Rk4 | Scheme::Imex => {
                self.rk.step(state.t, &mut state.rho, dt, &mut rhs)?;
                if self.scheme == Scheme::Imex && diff > 0.0 {
                    solve_cyclic(diff * dt / h2, &mut state.rho);
                }
            }
        }
        state.t += dt;
        self.sanitize(state)
    }

    fn sanitize(&mut self, state: &mut GridState) -> Result<()> {
        let mut max = 0.0f64;
        for &v in &state.rho {
            if !v.is_finite() || v.abs() > BLOW_UP {
                return Err(Error::Aborted {
                    t: state.t,
                    reason: format!("density left the finite range ({v:e})"),
                });
            }
            max = max.max(v);
        }
        let floor = -NEGATIVE_TOLERANCE * max;
        for v in state.rho.iter_mut() {
            if *v < 0.0 {
                if *v < floor {
                    return Err(Error::Aborted {
                        t: state.t,
                        reason: format!("negative density {v:e} below roundoff floor {floor:e}"),
                    });
                }
                *v = 0.0;
                self.clamped += 1;
            }
        }
        Ok(())
    }

    /// One step of `dt`, split into equal substeps if `dt` exceeds the
    /// current stability bound.
    fn advance(&mut self, state: &mut GridState, dt: f64) -> Result<()> {
        let bound = self.stability_bound(state);
        if dt <= bound {
            return self.step(state, dt);
        }
        if !(bound > 1e-12 * dt) {
            return Err(Error::Aborted {
                t: state.t,
                reason: format!("stability bound collapsed to {bound:e}"),
            });
        }
        self.split_steps += 1;
        let k = (dt / bound).ceil() as usize;
        let h = dt / k as f64;
        for _ in 0..k {
            self.advance(state, h)?;
        }
        Ok(())
    }

    /// Integrate to `t_end`, landing exactly on each of `sample_times`
    /// (which must be increasing and within `[state.t, t_end]`) and
    /// recording a snapshot there. Steps are at most `dt` and shrink when
    /// the stability bound requires it.
    pub fn run(
        &mut self,
        state: &mut GridState,
        t_end: f64,
        dt: f64,
        sample_times: &[f64],
    ) -> Result<GridRun> {
        self.check_grid(state)?;
        require_positive("dt", dt)?;
        let mut targets: Vec<f64> = sample_times.to_vec();
        if targets.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("sample_times", "must be strictly increasing"));
        }
        if targets.first().map_or(false, |&t| t < state.t) || targets.last().map_or(false, |&t| t > t_end) {
            return Err(invalid("sample_times", "must lie within the integration window"));
        }
        if targets.last() != Some(&t_end) {
            targets.push(t_end);
        }
        let mut run = GridRun::default();
        let record = |run: &mut GridRun, st: &GridState, wanted: bool| {
            if wanted {
                run.snapshots.push(st.clone());
            }
        };
        let wanted = |t: f64| sample_times.contains(&t);
        if targets.first() == Some(&state.t) {
            record(&mut run, state, true);
        }
        let start = state.t;
        let mut prev = start;
        for &target in &targets {
            if target == start {
                continue;
            }
            let (steps, h) = step_plan(target - prev, dt);
            for _ in 0..steps {
                self.advance(state, h)?;
            }
            state.t = target;
            prev = target;
            record(&mut run, state, wanted(target));
        }
        run.clamped = self.clamped;
        Ok(run)
    }
}

/// Snapshots from [`GridSolver::run`].
#[derive(Debug, Clone, Default)]
pub struct GridRun {
    pub snapshots: Vec<GridState>,
    pub clamped: usize,
}

impl GridRun {
    pub fn last(&self) -> Option<&GridState> {
        self.snapshots.last()
    }

    pub fn at(&self, t: f64) -> Option<&GridState> {
        self.snapshots.iter().find(|s| s.t == t)
    }

    /// Time series `t,mass,homogeneity,n_peaks` over the snapshots.
    pub fn write_series<W: Write>(&self, mut out: W) -> Result<()> {
        let rows = self.snapshots.iter().map(|s| {
            [
                s.t,
                s.total_mass(),
                homogeneity(&s.rho),
                count_peaks(&s.rho, DEFAULT_PROMINENCE) as f64,
            ]
        });
        write_rows(&mut out, &["t", "mass", "homogeneity", "n_peaks"], rows)
    }
}
