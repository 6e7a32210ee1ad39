//! Einstein-Ehrenfest system on a sampled one-parameter manifold in `R^n`:
//!
//! ```text
//! rho_t(s) = rho(s) [a(X(s), t) - kappa int b(X(s), X(s')) rho(s') ds']
//! X_t(s)   = V(X(s), t) + kappa int W(X(s), X(s'), t) rho(s') ds'
//! ```
//!
//! Integrals use the rectangle rule on periodic parameter grids and the
//! trapezoid rule otherwise.

use std::io::Write;

use crate::csv::write_rows;
use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::exec::ExecMode;
use crate::ode::{step_plan, Rk4};
use crate::quadrature::{periodic_nodes, trapezoid_weights};

const BLOW_UP: f64 = 1e12;

pub type GrowthFn = Box<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type InfluenceFn = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type VelocityFn = Box<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;
pub type InteractionFn = Box<dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync>;

/// Growth rate, influence function and convection fields of the system.
pub struct ConvectionSpec {
    /// `a(x, t)`.
    pub growth: GrowthFn,
    pub kappa: f64,
    /// `b(x, y)`.
    pub influence: InfluenceFn,
    /// Local drift `V(x, t)`, written into the output slice.
    pub velocity: Option<VelocityFn>,
    /// Nonlocal drift `W(x, y, t)`, written into the output slice.
    pub interaction: Option<InteractionFn>,
}

/// Scalars for the named built-in fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinParams {
    pub a: f64,
    pub kappa: f64,
    pub b0: f64,
    pub gamma: f64,
    pub k0: f64,
}

impl ConvectionSpec {
    pub const GROWTH: [&'static str; 1] = ["constant"];
    pub const INFLUENCE: [&'static str; 2] = ["gaussian", "none"];
    pub const VELOCITY: [&'static str; 2] = ["none", "linear_drag"];

    /// Constant growth, Gaussian influence, optional linear drag
    /// `V = -k0 x` and no nonlocal drift.
    pub fn gaussian(a: f64, kappa: f64, b0: f64, gamma: f64, k0: f64) -> Result<Self> {
        let p = BuiltinParams {
            a,
            kappa,
            b0,
            gamma,
            k0,
        };
        let velocity = if k0 != 0.0 { "linear_drag" } else { "none" };
        Self::from_names("constant", "gaussian", velocity, &p)
    }

    /// Assemble a spec from built-in names.
    pub fn from_names(growth: &str, influence: &str, velocity: &str, p: &BuiltinParams) -> Result<Self> {
        require_finite("a", p.a)?;
        require_finite("kappa", p.kappa)?;
        require_finite("k0", p.k0)?;
        let a = p.a;
        let growth: GrowthFn = match growth {
            "constant" => Box::new(move |_x, _t| a),
            other => return Err(invalid("growth", format!("unknown growth '{other}'"))),
        };
        let influence: InfluenceFn = match influence {
            "gaussian" => {
                require_positive("b0", p.b0)?;
                require_positive("gamma", p.gamma)?;
                let (b0, g2) = (p.b0, 2.0 * p.gamma * p.gamma);
                Box::new(move |x, y| {
                    let d2: f64 = x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
                    b0 * (-d2 / g2).exp()
                })
            }
            "none" => Box::new(|_x, _y| 0.0),
            other => return Err(invalid("influence", format!("unknown influence '{other}'"))),
        };
        let k0 = p.k0;
        let velocity: Option<VelocityFn> = match velocity {
            "none" => None,
            "linear_drag" => Some(Box::new(move |x, _t, out| {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -k0 * xi;
                }
            })),
            other => return Err(invalid("velocity", format!("unknown velocity '{other}'"))),
        };
        Ok(ConvectionSpec {
            growth,
            kappa: p.kappa,
            influence,
            velocity,
            interaction: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldState {
    pub s: Vec<f64>,
    /// Points `X(s_k)`, flattened: sample `k` occupies `x[k*dim..(k+1)*dim]`.
    pub x: Vec<f64>,
    pub dim: usize,
    pub rho: Vec<f64>,
    pub t: f64,
    pub periodic: bool,
    weights: Vec<f64>,
}

impl ManifoldState {
    pub fn new(s: Vec<f64>, x: Vec<f64>, dim: usize, rho: Vec<f64>, periodic: bool) -> Result<Self> {
        let n = s.len();
        if n < 4 {
            return Err(invalid("s", "need at least 4 samples"));
        }
        if dim == 0 || x.len() != n * dim || rho.len() != n {
            return Err(invalid(
                "X",
                format!("need {n} points of dimension {dim} and {n} densities"),
            ));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("s", "samples must be strictly increasing"));
        }
        for &v in x.iter().chain(&rho) {
            require_finite("state", v)?;
        }
        if rho.iter().any(|&r| r < 0.0) {
            return Err(invalid("rho", "densities must be nonnegative"));
        }
        let weights = if periodic {
            let h = s[1] - s[0];
            vec![h; n]
        } else {
            trapezoid_weights(n, (s[n - 1] - s[0]) / (n - 1) as f64)
        };
        let state = ManifoldState {
            s,
            x,
            dim,
            rho,
            t: 0.0,
            periodic,
            weights,
        };
        state.check_continuity()?;
        Ok(state)
    }

    /// Circle `X(s) = (R cos s, R sin s)` on the periodic grid.
    pub fn circle<F: Fn(f64) -> f64>(n: usize, radius: f64, rho_phi: F) -> Result<Self> {
        require_positive("R", radius)?;
        let s = periodic_nodes(n);
        let x = s.iter().flat_map(|&v| [radius * v.cos(), radius * v.sin()]).collect();
        let rho = s.iter().map(|&v| rho_phi(v)).collect();
        Self::new(s, x, 2, rho, true)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_continuity(&self) -> Result<()> {
        let n = self.len();
        let pairs = if self.periodic { n } else { n - 1 };
        let mut gaps: Vec<f64> = (0..pairs)
            .map(|k| {
                let (p, q) = (self.point(k), self.point((k + 1) % n));
                p.iter().zip(q).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
            })
            .collect();
        let worst = gaps.iter().fold(0.0f64, |m, &g| m.max(g));
        gaps.sort_by(|a, b| a.total_cmp(b));
        let median = gaps[gaps.len() / 2];
        if worst > 4.0 * median && worst > 0.0 {
            return Err(Error::Inconsistent(format!(
                "manifold samples are not continuous: gap {worst:e} vs median {median:e}"
            )));
        }
        Ok(())
    }

    /// Mass `m = int rho ds` and first moment `m^{-1} int X rho ds`.
    pub fn initial_correspondence(&self) -> Result<(f64, Vec<f64>)> {
        let mass: f64 = self.rho.iter().zip(&self.weights).map(|(r, w)| r * w).sum();
        if !(mass > 0.0) {
            return Err(invalid("rho", "zero mass has no first moment"));
        }
        let mut mean = vec![0.0; self.dim];
        for k in 0..self.len() {
            let w = self.weights[k] * self.rho[k];
            for (m, xi) in mean.iter_mut().zip(self.point(k)) {
                *m += w * xi;
            }
        }
        for m in mean.iter_mut() {
            *m /= mass;
        }
        Ok((mass, mean))
    }
}

/// Right-hand side at `(x, rho, t)`; `drho` has `n` entries and `dx` `n*dim`.
#[allow(clippy::too_many_arguments)]
fn rhs_into(
    spec: &ConvectionSpec,
    weights: &[f64],
    dim: usize,
    x: &[f64],
    rho: &[f64],
    t: f64,
    mode: ExecMode,
    drho: &mut [f64],
    dx: &mut [f64],
) -> Result<()> {
    let n = rho.len();
    let pt = |k: usize| &x[k * dim..(k + 1) * dim];
    mode.fill(drho, |k| {
        let xk = pt(k);
        let mut acc = 0.0;
        for l in 0..n {
            acc += weights[l] * (spec.influence)(xk, pt(l)) * rho[l];
        }
        rho[k] * ((spec.growth)(xk, t) - spec.kappa * acc)
    });
    mode.fill_chunks(dx, dim, |k, out| {
        let xk = pt(k);
        out.iter_mut().for_each(|o| *o = 0.0);
        if let Some(v) = &spec.velocity {
            v(xk, t, out);
        }
        if let Some(w) = &spec.interaction {
            let mut tmp = vec![0.0; dim];
            let mut acc = vec![0.0; dim];
            for l in 0..n {
                w(xk, pt(l), t, &mut tmp);
                for (a, v) in acc.iter_mut().zip(&tmp) {
                    *a += weights[l] * v * rho[l];
                }
            }
            for (o, a) in out.iter_mut().zip(&acc) {
                *o += spec.kappa * a;
            }
        }
    });
    if let Some(bad) = drho.iter().chain(dx.iter()).find(|v| !v.is_finite()) {
        return Err(Error::Aborted {
            t,
            reason: format!("non-finite rate {bad} from the convection spec"),
        });
    }
    Ok(())
}

/// Density rates and point velocities of the system at `state`.
pub fn ee_rhs(state: &ManifoldState, spec: &ConvectionSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut drho = vec![0.0; state.len()];
    let mut dx = vec![0.0; state.x.len()];
    rhs_into(
        spec,
        &state.weights,
        state.dim,
        &state.x,
        &state.rho,
        state.t,
        ExecMode::from_env(),
        &mut drho,
        &mut dx,
    )?;
    Ok((drho, dx))
}

#[derive(Debug, Clone, Default)]
pub struct ManifoldTrajectory {
    pub states: Vec<ManifoldState>,
}

impl ManifoldTrajectory {
    pub fn last(&self) -> Option<&ManifoldState> {
        self.states.last()
    }

    /// Long-format CSV `t,s,x1..xn,rho`, one row per sample per stored time.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.states.first().map_or(0, |s| s.dim);
        let mut header: Vec<String> = vec!["t".into(), "s".into()];
        header.extend((1..=dim).map(|i| format!("x{i}")));
        header.push("rho".into());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = self.states.iter().flat_map(|st| {
            (0..st.len()).map(move |k| {
                let mut row = vec![st.t, st.s[k]];
                row.extend_from_slice(st.point(k));
                row.push(st.rho[k]);
                row
            })
        });
        write_rows(&mut out, &header_refs, rows)
    }
}

/// Fixed-step RK4 for the coupled system; stores every `record_every`-th
/// step plus the initial and final states.
pub fn integrate(
    state0: &ManifoldState,
    spec: &ConvectionSpec,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<ManifoldTrajectory> {
    require_positive("dt", dt)?;
    if !(t_end >= state0.t) {
        return Err(invalid("t_end", "must not precede the initial time"));
    }
    let n = state0.len();
    let dim = state0.dim;
    let mode = ExecMode::from_env();
    let mut y: Vec<f64> = state0.rho.iter().chain(&state0.x).copied().collect();
    let mut rk = Rk4::new(y.len());
    let (steps, h) = step_plan(t_end - state0.t, dt);
    let every = record_every.max(1);
    let mut traj = ManifoldTrajectory {
        states: vec![state0.clone()],
    };
    let weights = state0.weights.clone();
    let mut t = state0.t;
    for i in 0..steps {
        rk.step(t, &mut y, h, |tt, yy: &[f64], dy: &mut [f64]| {
            let (rho, x) = yy.split_at(n);
            let (drho, dx) = dy.split_at_mut(n);
            rhs_into(spec, &weights, dim, x, rho, tt, mode, drho, dx)
        })?;
        t = if i + 1 == steps { t_end } else { state0.t + (i + 1) as f64 * h };
        let max = y[..n].iter().fold(0.0f64, |m, &v| m.max(v));
        if let Some(bad) = y.iter().find(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(Error::Aborted {
                t,
                reason: format!("state left the finite range ({bad:e})"),
            });
        }
        for r in y[..n].iter_mut() {
            if *r < 0.0 {
                if *r < -1e-10 * max {
                    return Err(Error::Aborted {
                        t,
                        reason: format!("negative density {r:e}"),
                    });
                }
                *r = 0.0;
            }
        }
        if (i + 1) % every == 0 || i + 1 == steps {
            let mut st = state0.clone();
            st.rho.copy_from_slice(&y[..n]);
            st.x.copy_from_slice(&y[n..]);
            st.t = t;
            traj.states.push(st);
        }
    }
    Ok(traj)
}

/// Radius of each sample of a planar manifold.
pub fn radii(state: &ManifoldState) -> Vec<f64> {
    (0..state.len())
        .map(|k| state.point(k).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fig7_state(n: usize) -> ManifoldState {
        ManifoldState::circle(n, 1.0, |s| (-s * s / 0.6).exp()).unwrap()
    }

    #[test]
    fn frozen_without_convection() {
        let st = fig7_state(32);
        let spec = ConvectionSpec::gaussian(1.0, 0.2, 1.0, 1.0, 0.0).unwrap();
        let (_, dx) = ee_rhs(&st, &spec).unwrap();
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_drag_velocity() {
        let st = fig7_state(16);
        let spec = ConvectionSpec::gaussian(1.0, 0.2, 1.0, 1.0, 0.03).unwrap();
        let (_, dx) = ee_rhs(&st, &spec).unwrap();
        for (v, x) in dx.iter().zip(&st.x) {
            assert_eq!(*v, -0.03 * x);
        }
    }

    #[test]
    fn pure_growth() {
        let st = fig7_state(16);
        let p = BuiltinParams {
            a: 0.5,
            kappa: 0.2,
            b0: 1.0,
            gamma: 1.0,
            k0: 0.0,
        };
        let spec = ConvectionSpec::from_names("constant", "none", "none", &p).unwrap();
        let traj = integrate(&st, &spec, 2.0, 0.01, 1000).unwrap();
        let last = traj.last().unwrap();
        for (r, r0) in last.rho.iter().zip(&st.rho) {
            assert!((r - r0 * 1f64.exp()).abs() < 1e-9 * r.max(1e-300));
        }
        assert_eq!(last.x, st.x);
    }

    #[test]
    fn constant_density_has_centred_moment() {
        let st = ManifoldState::circle(64, 2.0, |_| 1.0).unwrap();
        let (m, xbar) = st.initial_correspondence().unwrap();
        assert!((m - 2.0 * PI).abs() < 1e-12);
        assert!(xbar.iter().all(|v| v.abs() < 1e-14));
        let empty = ManifoldState::circle(64, 2.0, |_| 0.0).unwrap();
        assert!(empty.initial_correspondence().is_err());
    }

    #[test]
    fn detects_discontinuous_samples() {
        let s: Vec<f64> = (0..8).map(|k| k as f64).collect();
        let mut x: Vec<f64> = s.clone();
        x[7] = 100.0;
        assert!(ManifoldState::new(s, x, 1, vec![1.0; 8], false).is_err());
    }

    #[test]
    fn open_interval_uses_trapezoid() {
        let s: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let x = s.clone();
        let st = ManifoldState::new(s, x, 1, vec![1.0; 11], false).unwrap();
        let (m, xbar) = st.initial_correspondence().unwrap();
        assert!((m - 1.0).abs() < 1e-14);
        assert!((xbar[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn unknown_builtin_rejected() {
        let p = BuiltinParams {
            a: 1.0,
            kappa: 0.2,
            b0: 1.0,
            gamma: 1.0,
            k0: 0.0,
        };
        assert!(ConvectionSpec::from_names("logistic", "gaussian", "none", &p).is_err());
        assert!(ConvectionSpec::from_names("constant", "tophat", "none", &p).is_err());
        assert!(ConvectionSpec::from_names("constant", "gaussian", "swirl", &p).is_err());
    }
}
