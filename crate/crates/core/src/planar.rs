//! Planar diffusion-reaction equation with nonlocal Gaussian competition,
//!
//! ```text
//! u_t = D lap u + a u - kappa u(x) int b(x, y) u(y) dy,
//! b(x, y) = b0 exp(-|x - y|^2 / 2 gamma^2),
//! ```
//!
//! on the square `[-L, L]^2` with zero-flux boundaries, plus the moment and
//! marginalisation tools used to compare it with the density on a circle.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::csv::write_rows;
use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::exec::ExecMode;
use crate::grid::Backend;
use crate::manifold::ManifoldState;
use crate::ode::step_plan;
use crate::quadrature::trapezoid_weights;

pub const DEFAULT_HALF_WIDTH: f64 = 3.0;
pub const DEFAULT_NODES: usize = 128;
/// Mass fraction near the boundary above which an extraction is untrusted.
pub const BOUNDARY_MASS_LIMIT: f64 = 0.01;

/// Density on the node-centred grid `x_i = -L + i h`, `h = 2L / (n - 1)`,
/// stored row-major: `u[iy * n + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub half_width: f64,
    pub n: usize,
    pub u: Vec<f64>,
    pub t: f64,
    pub diffusion: f64,
}

impl Field2D {
    pub fn new(half_width: f64, n: usize, u: Vec<f64>, diffusion: f64) -> Result<Self> {
        require_positive("L", half_width)?;
        if n < 4 {
            return Err(invalid("n", "need at least 4 nodes per axis"));
        }
        if u.len() != n * n {
            return Err(invalid("u", format!("expected {} values, got {}", n * n, u.len())));
        }
        if !(diffusion >= 0.0) || !diffusion.is_finite() {
            return Err(invalid("D", format!("must be finite and >= 0, got {diffusion}")));
        }
        for &v in &u {
            require_finite("u", v)?;
        }
        Ok(Field2D {
            half_width,
            n,
            u,
            t: 0.0,
            diffusion,
        })
    }

    /// Sample `f(x, y)` at the nodes.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(half_width: f64, n: usize, diffusion: f64, f: F) -> Result<Self> {
        let h = 2.0 * half_width / (n.max(2) - 1) as f64;
        let mut u = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                u.push(f(-half_width + ix as f64 * h, -half_width + iy as f64 * h));
            }
        }
        Self::new(half_width, n, u, diffusion)
    }

    /// Ring `rho(theta) exp(-(r - R)^2 / 2 sigma^2) / (sigma sqrt(2 pi) R)`,
    /// whose radial marginal is close to `rho` for `sigma << R`.
    pub fn ring<F: Fn(f64) -> f64>(
        half_width: f64,
        n: usize,
        diffusion: f64,
        radius: f64,
        sigma: f64,
        rho: F,
    ) -> Result<Self> {
        require_positive("R", radius)?;
        require_positive("sigma", sigma)?;
        let norm = 1.0 / (sigma * (2.0 * PI).sqrt() * radius);
        Self::from_fn(half_width, n, diffusion, |x, y| {
            let r = x.hypot(y);
            let d = (r - radius) / sigma;
            rho(y.atan2(x)) * (-0.5 * d * d).exp() * norm
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n, self.spacing())
    }

    /// Bilinear interpolation; zero outside the square.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let h = self.spacing();
        let fx = (x + self.half_width) / h;
        let fy = (y + self.half_width) / h;
        let last = (self.n - 1) as f64;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= last && fy <= last) {
            return 0.0;
        }
        let ix = (fx.floor() as usize).min(self.n - 2);
        let iy = (fy.floor() as usize).min(self.n - 2);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |i: usize, j: usize| self.u[j * self.n + i];
        (1.0 - tx) * (1.0 - ty) * at(ix, iy)
            + tx * (1.0 - ty) * at(ix + 1, iy)
            + (1.0 - tx) * ty * at(ix, iy + 1)
            + tx * ty * at(ix + 1, iy + 1)
    }

    /// Flat CSV `x,y,u`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.n;
        let rows = (0..n * n).map(|k| [self.coord(k % n), self.coord(k / n), self.u[k]]);
        write_rows(&mut out, &["x", "y", "u"], rows)
    }
}

/// Zero moment `m_u` and first normalised moment `x_u` (2D trapezoid).
pub fn moments(field: &Field2D) -> Result<(f64, [f64; 2])> {
    let w = field.weights();
    let n = field.n;
    let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
    for iy in 0..n {
        for ix in 0..n {
            let v = w[ix] * w[iy] * field.u[iy * n + ix];
            m += v;
            mx += v * field.coord(ix);
            my += v * field.coord(iy);
        }
    }
    if !(m > 0.0) {
        return Err(invalid("u", "zero mass has no first moment"));
    }
    Ok((m, [mx / m, my / m]))
}

/// Gaussian influence function in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel2d {
    pub b0: f64,
    pub gamma: f64,
}

impl GaussianKernel2d {
    pub fn new(b0: f64, gamma: f64) -> Result<Self> {
        require_positive("b0", b0)?;
        require_positive("gamma", gamma)?;
        Ok(GaussianKernel2d { b0, gamma })
    }

    /// One-dimensional factor `exp(-d^2 / 2 gamma^2)`.
    fn factor(&self, d: f64) -> f64 {
        let z = d / self.gamma;
        (-0.5 * z * z).exp()
    }
}

/// Separable linear convolution with the 1D Gaussian factor along one axis.
struct AxisConvolution {
    n: usize,
    stencil: Vec<f64>,
    padded: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl AxisConvolution {
    fn new(n: usize, h: f64, kernel: &GaussianKernel2d) -> Self {
        let stencil: Vec<f64> = (0..n).map(|m| kernel.factor(m as f64 * h)).collect();
        let padded = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); padded];
        for m in 0..n {
            spectrum[m] = Complex64::new(stencil[m], 0.0);
            if m > 0 {
                spectrum[padded - m] = Complex64::new(stencil[m], 0.0);
            }
        }
        forward.process(&mut spectrum);
        AxisConvolution {
            n,
            stencil,
            padded,
            spectrum,
            forward,
            inverse,
        }
    }

    /// `out[i] = sum_k g(|i - k| h) line[k]`.
    fn apply(&self, line: &[f64], backend: Backend, out: &mut [f64]) {
        let n = self.n;
        match backend {
            Backend::Direct => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, &v) in line.iter().enumerate() {
                        acc += self.stencil[i.abs_diff(k)] * v;
                    }
                    *o = acc;
                }
            }
            Backend::Fast => {
                let mut buf = vec![Complex64::new(0.0, 0.0); self.padded];
                for (b, &v) in buf.iter_mut().zip(line) {
                    b.re = v;
                }
                self.forward.process(&mut buf);
                for (b, g) in buf.iter_mut().zip(&self.spectrum) {
                    *b *= g;
                }
                self.inverse.process(&mut buf);
                let scale = 1.0 / self.padded as f64;
                for (o, b) in out.iter_mut().zip(&buf[..n]) {
                    *o = b.re * scale;
                }
            }
        }
    }
}

/// Explicit stepper for [`Field2D`].
pub struct PlanarSolver {
    pub kernel: GaussianKernel2d,
    pub a: f64,
    pub kappa: f64,
    pub backend: Backend,
    pub mode: ExecMode,
    /// Number of negative values within roundoff that were set to zero.
    pub clamped: usize,
    half_width: f64,
    n: usize,
    conv: AxisConvolution,
    weights: Vec<f64>,
}

impl PlanarSolver {
    pub fn new(
        half_width: f64,
        n: usize,
        kernel: GaussianKernel2d,
        a: f64,
        kappa: f64,
        backend: Backend,
    ) -> Result<Self> {
        require_positive("L", half_width)?;
        require_finite("a", a)?;
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(invalid("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        if n < 4 {
            return Err(invalid("n", "need at least 4 nodes per axis"));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        Ok(PlanarSolver {
            kernel,
            a,
            kappa,
            backend,
            mode: ExecMode::from_env(),
            clamped: 0,
            half_width,
            n,
            conv: AxisConvolution::new(n, h, &kernel),
            weights: trapezoid_weights(n, h),
        })
    }

    fn check_field(&self, field: &Field2D) -> Result<()> {
        if field.n != self.n || field.half_width != self.half_width {
            return Err(invalid("field", "grid does not match the solver"));
        }
        Ok(())
    }

    /// `N(x) = int b(x, y) u(y) dy` at every node.
    pub fn nonlocal_term(&self, field: &Field2D) -> Result<Vec<f64>> {
        self.check_field(field)?;
        Ok(self.convolve(&field.u))
    }

    fn convolve(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let w = &self.weights;
        // along x within each row, then along y within each column
        let mut rows = vec![0.0; n * n];
        self.mode.fill_chunks(&mut rows, n, |iy, out| {
            let line: Vec<f64> = (0..n).map(|ix| w[ix] * u[iy * n + ix]).collect();
            self.conv.apply(&line, self.backend, out);
        });
        let mut cols = vec![0.0; n * n]; // transposed: cols[ix * n + iy]
        self.mode.fill_chunks(&mut cols, n, |ix, out| {
            let line: Vec<f64> = (0..n).map(|iy| w[iy] * rows[iy * n + ix]).collect();
            self.conv.apply(&line, self.backend, out);
        });
        let b0 = self.kernel.b0;
        let mut result = vec![0.0; n * n];
        self.mode.fill(&mut result, |k| b0 * cols[(k % n) * n + k / n]);
        result
    }

    /// `0.8 min(h^2 / 4D, 1 / (a + kappa max N))`.
    pub fn stability_bound(&self, field: &Field2D, nonlocal: &[f64]) -> f64 {
        let h = field.spacing();
        let max_n = nonlocal.iter().fold(0.0f64, |m, &v| m.max(v));
        let reaction = 1.0 / (self.a.abs() + self.kappa * max_n);
        let diffusive = if field.diffusion > 0.0 {
            h * h / (4.0 * field.diffusion)
        } else {
            f64::INFINITY
        };
        0.8 * reaction.min(diffusive)
    }

    /// One explicit Euler step.
    pub fn step(&mut self, field: &mut Field2D, dt: f64) -> Result<()> {
        self.check_field(field)?;
        require_positive("dt", dt)?;
        let nl = self.convolve(&field.u);
        let bound = self.stability_bound(field, &nl);
        if dt > bound {
            return Err(Error::Unstable { dt, bound });
        }
        let n = self.n;
        let h2 = field.spacing() * field.spacing();
        let d = field.diffusion;
        let (a, kappa) = (self.a, self.kappa);
        let u = &field.u;
        // reflecting ghost nodes: u_{-1} = u_1, u_n = u_{n-2}
        let nb = |i: usize, di: isize| -> usize {
            let j = i as isize + di;
            if j < 0 {
                1
            } else if j >= n as isize {
                n - 2
            } else {
                j as usize
            }
        };
        let mut next = vec![0.0; n * n];
        self.mode.fill(&mut next, |k| {
            let (ix, iy) = (k % n, k / n);
            let c = u[k];
            let lap = u[iy * n + nb(ix, -1)] + u[iy * n + nb(ix, 1)] + u[nb(iy, -1) * n + ix]
                + u[nb(iy, 1) * n + ix]
                - 4.0 * c;
            c + dt * (d * lap / h2 + c * (a - kappa * nl[k]))
        });
        let max = next.iter().fold(0.0f64, |m, &v| m.max(v));
        for v in next.iter_mut() {
            if !v.is_finite() {
                return Err(Error::Aborted {
                    t: field.t + dt,
                    reason: "non-finite density".into(),
                });
            }
            if *v < 0.0 {
                if *v < -1e-10 * max {
                    return Err(Error::Aborted {
                        t: field.t + dt,
                        reason: format!("negative density {v:e}"),
                    });
                }
                *v = 0.0;
                self.clamped += 1;
            }
        }
        field.u = next;
        field.t += dt;
        Ok(())
    }

    /// Step to `t_end` with at most `dt` per step, landing exactly on it.
    pub fn run(&mut self, field: &mut Field2D, t_end: f64, dt: f64) -> Result<()> {
        if t_end < field.t {
            return Err(invalid("t_end", "must not precede the field time"));
        }
        if t_end == field.t {
            return Ok(());
        }
        let (steps, h) = step_plan(t_end - field.t, dt);
        for _ in 0..steps {
            self.step(field, h)?;
        }
        field.t = t_end;
        Ok(())
    }

    /// `int [a - kappa N(x)] u(x) dx`, the instantaneous mass rate.
    pub fn mass_rate(&self, field: &Field2D) -> Result<f64> {
        let nl = self.nonlocal_term(field)?;
        let n = self.n;
        let mut acc = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let k = iy * n + ix;
                acc += self.weights[ix] * self.weights[iy] * field.u[k] * (self.a - self.kappa * nl[k]);
            }
        }
        Ok(acc)
    }
}

/// Radial marginal of a planar field on an angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub s: Vec<f64>,
    pub rho: Vec<f64>,
    /// Mass fraction outside the disc of radius `L - 2h`.
    pub boundary_fraction: f64,
    pub trusted: bool,
}

impl Extraction {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let rows = self.s.iter().zip(&self.rho).map(|(&s, &r)| [s, r]);
        write_rows(&mut out, &["s", "rho"], rows)
    }
}

/// `rho(s_k) = int_0^L u(r cos s_k, r sin s_k) r dr` on `n_angles` periodic
/// angles, by the trapezoid rule on a radial step of `h / 2` with bilinear
/// interpolation.
pub fn extract_sld(field: &Field2D, n_angles: usize) -> Result<Extraction> {
    if n_angles < 4 {
        return Err(invalid("n_angles", "need at least 4 angles"));
    }
    let h = field.spacing();
    let r_max = field.half_width;
    let steps = (2.0 * r_max / h).ceil() as usize;
    let dr = r_max / steps as f64;
    let s = crate::quadrature::periodic_nodes(n_angles);
    let rho: Vec<f64> = s
        .iter()
        .map(|&angle| {
            let (c, sn) = (angle.cos(), angle.sin());
            let mut acc = 0.0;
            for i in 0..=steps {
                let r = i as f64 * dr;
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                acc += w * r * field.interpolate(r * c, r * sn);
            }
            acc * dr
        })
        .collect();
    let (total, _) = moments(field)?;
    let weights = field.weights();
    let inner = field.half_width - 2.0 * h;
    let n = field.n;
    let mut outer = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            if field.coord(ix).hypot(field.coord(iy)) >= inner {
                outer += weights[ix] * weights[iy] * field.u[iy * n + ix];
            }
        }
    }
    let boundary_fraction = outer / total;
    Ok(Extraction {
        s,
        rho,
        boundary_fraction,
        trusted: boundary_fraction <= BOUNDARY_MASS_LIMIT,
    })
}

/// `|A_u - A_rho|` (Euclidean norm over the components of `A`), where
/// `A_u = m_u^{-1} int A(x) u dx` and `A_rho = m_rho^{-1} int A(X(s)) rho ds`.
pub fn concentration_check<A>(field: &Field2D, observable: A, manifold: &ManifoldState) -> Result<f64>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    if manifold.dim != 2 {
        return Err(invalid("manifold", "planar comparison needs points in R^2"));
    }
    let w = field.weights();
    let n = field.n;
    let mut field_avg: Vec<f64> = Vec::new();
    let mut m_u = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let weight = w[ix] * w[iy] * field.u[iy * n + ix];
            let value = observable(&[field.coord(ix), field.coord(iy)]);
            if field_avg.is_empty() {
                field_avg = vec![0.0; value.len()];
            }
            for (acc, v) in field_avg.iter_mut().zip(&value) {
                *acc += weight * v;
            }
            m_u += weight;
        }
    }
    let mut sld_avg: Vec<f64> = vec![0.0; field_avg.len()];
    let mut m_rho = 0.0;
    for k in 0..manifold.len() {
        let weight = manifold.weights()[k] * manifold.rho[k];
        for (acc, v) in sld_avg.iter_mut().zip(observable(manifold.point(k))) {
            *acc += weight * v;
        }
        m_rho += weight;
    }
    if !(m_u > 0.0) || !(m_rho > 0.0) {
        return Err(invalid("mass", "both densities need positive mass"));
    }
    Ok(field_avg
        .iter()
        .zip(&sld_avg)
        .map(|(a, b)| (a / m_u - b / m_rho).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// The default observable: both coordinates.
pub fn position(x: &[f64]) -> Vec<f64> {
    x.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(n: usize, cx: f64, amp: f64, sigma: f64) -> Field2D {
        Field2D::from_fn(3.0, n, 0.0, |x, y| {
            amp * (-((x - cx).powi(2) + y * y) / (2.0 * sigma * sigma)).exp()
        })
        .unwrap()
    }

    #[test]
    fn gaussian_blob_moments() {
        let f = blob(128, 0.5, 2.0, 0.3);
        let (m, c) = moments(&f).unwrap();
        assert!((m - 2.0 * PI * 2.0 * 0.09).abs() < 1e-6);
        assert!((c[0] - 0.5).abs() < 1e-6 && c[1].abs() < 1e-12);
    }

    #[test]
    fn zero_field_rejected() {
        let f = Field2D::new(1.0, 8, vec![0.0; 64], 0.0).unwrap();
        assert!(moments(&f).is_err());
    }

    #[test]
    fn reflecting_laplacian_conserves_mass() {
        let mut f = blob(32, 2.5, 1.0, 0.4);
        f.diffusion = 0.2;
        let k = GaussianKernel2d::new(1.0, 1.0).unwrap();
        let mut solver = PlanarSolver::new(3.0, 32, k, 0.0, 0.0, Backend::Fast).unwrap();
        let (m0, _) = moments(&f).unwrap();
        solver.run(&mut f, 0.5, 0.01).unwrap();
        let (m1, _) = moments(&f).unwrap();
        assert!((m1 - m0).abs() < 1e-12 * m0);
    }

    #[test]
    fn pure_growth() {
        let mut f = blob(16, 0.0, 1.0, 0.5);
        let u0 = f.u.clone();
        let k = GaussianKernel2d::new(1.0, 1.0).unwrap();
        let mut solver = PlanarSolver::new(3.0, 16, k, 1.0, 0.0, Backend::Direct).unwrap();
        solver.run(&mut f, 1.0, 0.001).unwrap();
        // explicit Euler: (1 + dt)^steps
        let g = 1.001f64.powi(1000);
        for (a, b) in f.u.iter().zip(&u0) {
            assert!((a - b * g).abs() < 1e-10 * a.max(1e-300));
        }
    }

    #[test]
    fn backends_agree() {
        let f = blob(40, 0.3, 1.0, 0.7);
        let k = GaussianKernel2d::new(1.0, 0.8).unwrap();
        let d = PlanarSolver::new(3.0, 40, k, 1.0, 0.2, Backend::Direct).unwrap();
        let q = PlanarSolver::new(3.0, 40, k, 1.0, 0.2, Backend::Fast).unwrap();
        let a = d.nonlocal_term(&f).unwrap();
        let b = q.nonlocal_term(&f).unwrap();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(*v));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn separable_ring_extracts_constant() {
        let f = Field2D::ring(3.0, 200, 0.0, 1.0, 0.1, |_| 0.5).unwrap();
        let e = extract_sld(&f, 64).unwrap();
        assert!(e.trusted);
        for r in &e.rho {
            assert!((r - 0.5).abs() < 5e-3 * 0.5, "{r}");
        }
    }

    #[test]
    fn boundary_mass_flagged() {
        let f = blob(64, 2.9, 1.0, 0.3);
        assert!(!extract_sld(&f, 32).unwrap().trusted);
    }

    #[test]
    fn unit_observable_has_no_deviation() {
        let f = Field2D::ring(3.0, 64, 0.0, 1.0, 0.1, |s| 1.0 + 0.2 * s.cos()).unwrap();
        let m = ManifoldState::circle(64, 1.0, |s| 2.0 + s.sin()).unwrap();
        assert_eq!(concentration_check(&f, |_| vec![1.0], &m).unwrap(), 0.0);
    }

    #[test]
    fn stability_violation_rejected() {
        let mut f = blob(64, 0.0, 1.0, 0.5);
        f.diffusion = 1.0;
        let k = GaussianKernel2d::new(1.0, 1.0).unwrap();
        let mut solver = PlanarSolver::new(3.0, 64, k, 1.0, 0.2, Backend::Fast).unwrap();
        assert!(matches!(solver.step(&mut f, 0.1), Err(Error::Unstable { .. })));
    }
}
