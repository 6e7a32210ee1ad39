//! Flat `key = value` scenario files with dotted section prefixes.
//!
//! Every key has a default, so a file only lists what differs. Unknown keys
//! are rejected with their line number; values are checked when the raw map
//! is turned into a [`ScenarioConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use fkpp_core::grid::{Backend, Scheme};

use crate::error::{CliError, Result};

/// Recognised keys, their defaults and a one-line description. An empty
/// default means "derived from other fields".
pub const KEYS: &[(&str, &str, &str)] = &[
    ("solver", "grid", "exact | spectral | grid | manifold | planar2d | asymptotic"),
    ("model.a", "1", "linear growth rate"),
    ("model.b0", "1", "kernel amplitude"),
    ("model.kappa", "0.2", "competition strength"),
    ("model.gamma", "1", "kernel range"),
    ("model.R", "1", "circle radius"),
    ("model.D", "0", "diffusion coefficient"),
    ("model.k0", "0", "linear drag rate (manifold solver)"),
    ("model.T", "10", "large-time parameter"),
    ("model.beta00", "1", "zero-mode initial coefficient"),
    ("numerics.N", "512", "grid nodes on the circle"),
    ("numerics.J", "10", "Fourier truncation order"),
    ("numerics.dt", "", "time step; solver default when empty"),
    ("numerics.t_end", "200", "final time"),
    ("numerics.scheme", "", "euler | rk4 | imex; imex when D > 0, rk4 otherwise"),
    ("numerics.backend", "fast", "direct | fast"),
    ("numerics.snapshots", "", "comma separated output times; t_end is always added"),
    ("initial.kind", "perturbed", "homogeneous | perturbed | gaussian_bump | cutoff"),
    ("initial.background", "0", "gaussian_bump: constant part"),
    ("initial.amplitude", "1", "gaussian_bump: bump height"),
    ("initial.width", "0.6", "bump profile exp(-s^2 / width)"),
    ("initial.half_width", "2", "cutoff: support [-w, w]"),
    ("exact.alpha", "0.95", "quasi-steady-state level"),
    ("exact.points", "1001", "samples of the exact curve"),
    ("exact.curve", "rho0", "plotted curve: rho0 | rho0_dt | abs_rho0_dt"),
    ("planar.L", "3", "half width of the square domain"),
    ("planar.n", "128", "nodes per axis"),
    ("planar.sigma", "0.1", "initial ring thickness"),
    ("planar.angles", "256", "angles for marginal extraction"),
    ("analysis.prominence", "0.05", "peak prominence relative to the mean"),
    ("output.dir", "out", "bundle directory"),
    ("output.reference", "none", "none | exact | asymptotic (grid and spectral solvers)"),
    ("output.plot", "false", "write a gnuplot script"),
    ("output.ring", "false", "also write s,x,y,rho ring files"),
    ("compare.linf", "0.1", "relative L-infinity tolerance"),
    ("compare.l2", "0.1", "relative L2 tolerance"),
    ("sweep.axis", "", "key to vary; runs a sweep when set"),
    ("sweep.values", "", "comma separated values for sweep.axis"),
];

fn default_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, d, _)| *d)
}

/// Raw key/value pairs, keyed in sorted order so rendering is stable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::validation(format!("line {}", i + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| match e {
                    CliError::Validation { path, reason } => {
                        CliError::validation(path, format!("{reason} (line {})", i + 1))
                    }
                    other => other,
                })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if default_of(key).is_none() {
            return Err(CliError::validation(key, "unknown key"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply `key=value` overrides.
    pub fn apply<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::validation(o, "override must look like key=value"))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        match self.entries.get(key) {
            Some(v) => v,
            None => default_of(key).unwrap_or(""),
        }
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Every key with its effective value, in the file format.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, _, _) in KEYS {
            out.push_str(&format!("{k} = {}\n", self.get(k)));
        }
        out
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key);
        let x: f64 = v
            .parse()
            .map_err(|_| CliError::validation(key, format!("expected a number, got `{v}`")))?;
        if !x.is_finite() {
            return Err(CliError::validation(key, "must be finite"));
        }
        Ok(x)
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let x = self.f64(key)?;
        if x <= 0.0 {
            return Err(CliError::validation(key, format!("must be positive, got {x}")));
        }
        Ok(x)
    }

    fn non_negative(&self, key: &str) -> Result<f64> {
        let x = self.f64(key)?;
        if x < 0.0 {
            return Err(CliError::validation(key, format!("must be >= 0, got {x}")));
        }
        Ok(x)
    }

    fn usize(&self, key: &str, min: usize) -> Result<usize> {
        let v = self.get(key);
        let n: usize = v
            .parse()
            .map_err(|_| CliError::validation(key, format!("expected a non-negative integer, got `{v}`")))?;
        if n < min {
            return Err(CliError::validation(key, format!("must be at least {min}, got {n}")));
        }
        Ok(n)
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(CliError::validation(key, format!("expected true or false, got `{v}`"))),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        split_list(self.get(key))
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| CliError::validation(key, format!("`{v}` is not a number")))
            })
            .collect()
    }
}

pub(crate) fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Exact,
    Spectral,
    Grid,
    Manifold,
    Planar2d,
    Asymptotic,
}

impl SolverKind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "exact" => SolverKind::Exact,
            "spectral" => SolverKind::Spectral,
            "grid" | "simulate" => SolverKind::Grid,
            "manifold" => SolverKind::Manifold,
            "planar2d" => SolverKind::Planar2d,
            "asymptotic" => SolverKind::Asymptotic,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::Spectral => "spectral",
            SolverKind::Grid => "grid",
            SolverKind::Manifold => "manifold",
            SolverKind::Planar2d => "planar2d",
            SolverKind::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub a: f64,
    pub b0: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub radius: f64,
    pub diffusion: f64,
    pub k0: f64,
    pub big_t: f64,
    pub beta00: f64,
}

/// Initial density as a function of the angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Initial {
    Homogeneous,
    /// `beta00 v_0 + exp(-s^2 / width) / T`.
    Perturbed { width: f64 },
    GaussianBump { background: f64, amplitude: f64, width: f64 },
    Cutoff { half_width: f64 },
}

impl Initial {
    pub fn eval(&self, model: &Model, s: f64) -> f64 {
        let v0 = fkpp_core::V0;
        match *self {
            Initial::Homogeneous => model.beta00 * v0,
            Initial::Perturbed { width } => model.beta00 * v0 + (-s * s / width).exp() / model.big_t,
            Initial::GaussianBump {
                background,
                amplitude,
                width,
            } => background + amplitude * (-s * s / width).exp(),
            Initial::Cutoff { half_width } => {
                if s.abs() < half_width {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// The matching grid initial condition (the cutoff uses cell coverage).
    pub fn grid(&self, model: &Model) -> fkpp_core::grid::InitialCondition {
        use fkpp_core::grid::InitialCondition as Ic;
        match *self {
            Initial::Homogeneous => Ic::Homogeneous { beta00: model.beta00 },
            Initial::Perturbed { width } => Ic::GaussianBump {
                background: model.beta00 * fkpp_core::V0,
                amplitude: 1.0 / model.big_t,
                width,
            },
            Initial::GaussianBump {
                background,
                amplitude,
                width,
            } => Ic::GaussianBump {
                background,
                amplitude,
                width,
            },
            Initial::Cutoff { half_width } => Ic::Cutoff { half_width },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    None,
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub n: usize,
    pub truncation: usize,
    pub dt: Option<f64>,
    pub t_end: f64,
    pub scheme: Scheme,
    pub backend: Backend,
    /// Increasing, ends with `t_end`.
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planar {
    pub half_width: f64,
    pub n: usize,
    pub sigma: f64,
    pub angles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: String,
    pub values: Vec<String>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub solver: SolverKind,
    pub model: Model,
    pub numerics: Numerics,
    pub initial: Initial,
    pub alpha: f64,
    pub exact_points: usize,
    pub exact_curve: String,
    pub planar: Planar,
    pub prominence: f64,
    pub out_dir: PathBuf,
    pub reference: Reference,
    pub plot: bool,
    pub ring: bool,
    pub tol_linf: f64,
    pub tol_l2: f64,
    pub sweep: Option<Sweep>,
    /// The raw map the scenario was built from, for the manifest.
    pub raw: Config,
}

impl ScenarioConfig {
    pub fn from_config(raw: &Config) -> Result<Self> {
        let solver_name = raw.get("solver");
        let solver = SolverKind::parse(solver_name)
            .ok_or_else(|| CliError::validation("solver", format!("unknown solver `{solver_name}`")))?;
        let model = Model {
            a: raw.f64("model.a")?,
            b0: raw.positive("model.b0")?,
            kappa: raw.non_negative("model.kappa")?,
            gamma: raw.positive("model.gamma")?,
            radius: raw.positive("model.R")?,
            diffusion: raw.non_negative("model.D")?,
            k0: raw.f64("model.k0")?,
            big_t: raw.positive("model.T")?,
            beta00: raw.positive("model.beta00")?,
        };
        let scheme = match raw.get("numerics.scheme") {
            "" if model.diffusion > 0.0 => Scheme::Imex,
            "" => Scheme::Rk4,
            name => Scheme::parse(name).map_err(|e| CliError::validation("numerics.scheme", e.to_string()))?,
        };
        let backend = Backend::parse(raw.get("numerics.backend"))
            .map_err(|e| CliError::validation("numerics.backend", e.to_string()))?;
        let dt = match raw.get("numerics.dt") {
            "" => None,
            _ => Some(raw.positive("numerics.dt")?),
        };
        let t_end = raw.positive("numerics.t_end")?;
        let mut snapshots = raw.list("numerics.snapshots")?;
        if snapshots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::validation("numerics.snapshots", "times must be strictly increasing"));
        }
        if snapshots.iter().any(|&t| t < 0.0 || t > t_end) {
            return Err(CliError::validation("numerics.snapshots", format!("times must lie in [0, {t_end}]")));
        }
        if snapshots.last() != Some(&t_end) {
            snapshots.push(t_end);
        }
        let numerics = Numerics {
            n: raw.usize("numerics.N", 8)?,
            truncation: raw.usize("numerics.J", 0)?,
            dt,
            t_end,
            scheme,
            backend,
            snapshots,
        };
        let width = raw.positive("initial.width")?;
        let initial = match raw.get("initial.kind") {
            "homogeneous" => Initial::Homogeneous,
            "perturbed" => Initial::Perturbed { width },
            "gaussian_bump" => Initial::GaussianBump {
                background: raw.non_negative("initial.background")?,
                amplitude: raw.f64("initial.amplitude")?,
                width,
            },
            "cutoff" => Initial::Cutoff {
                half_width: raw.positive("initial.half_width")?,
            },
            other => return Err(CliError::validation("initial.kind", format!("unknown kind `{other}`"))),
        };
        let reference = match raw.get("output.reference") {
            "none" => Reference::None,
            "exact" => Reference::Exact,
            "asymptotic" => Reference::Asymptotic,
            other => return Err(CliError::validation("output.reference", format!("unknown reference `{other}`"))),
        };
        let planar = Planar {
            half_width: raw.positive("planar.L")?,
            n: raw.usize("planar.n", 8)?,
            sigma: raw.positive("planar.sigma")?,
            angles: raw.usize("planar.angles", 8)?,
        };
        let sweep = match raw.get("sweep.axis") {
            "" => None,
            axis => {
                if axis.starts_with("sweep.") || axis.starts_with("output.") || axis == "solver" {
                    return Err(CliError::validation("sweep.axis", format!("`{axis}` cannot be swept")));
                }
                if default_of(axis).is_none() {
                    return Err(CliError::validation("sweep.axis", format!("unknown key `{axis}`")));
                }
                let values: Vec<String> = split_list(raw.get("sweep.values")).map(str::to_string).collect();
                if values.is_empty() {
                    return Err(CliError::validation("sweep.values", "a sweep needs at least one value"));
                }
                for v in &values {
                    if v.parse::<f64>().map_or(true, |x| !x.is_finite()) {
                        return Err(CliError::validation("sweep.values", format!("`{v}` is not a number")));
                    }
                }
                Some(Sweep {
                    axis: axis.to_string(),
                    values,
                })
            }
        };
        let cfg = ScenarioConfig {
            solver,
            model,
            numerics,
            initial,
            alpha: raw.positive("exact.alpha")?,
            exact_points: raw.usize("exact.points", 2)?,
            exact_curve: match raw.get("exact.curve") {
                c @ ("rho0" | "rho0_dt" | "abs_rho0_dt") => c.to_string(),
                other => return Err(CliError::validation("exact.curve", format!("unknown curve `{other}`"))),
            },
            planar,
            prominence: raw.non_negative("analysis.prominence")?,
            out_dir: PathBuf::from(raw.get("output.dir")),
            reference,
            plot: raw.bool("output.plot")?,
            ring: raw.bool("output.ring")?,
            tol_linf: raw.positive("compare.linf")?,
            tol_l2: raw.positive("compare.l2")?,
            sweep,
            raw: raw.clone(),
        };
        cfg.check_solver()?;
        Ok(cfg)
    }

    /// Checks that depend on the chosen solver.
    fn check_solver(&self) -> Result<()> {
        let m = &self.model;
        let needs_growth = matches!(self.solver, SolverKind::Exact | SolverKind::Asymptotic)
            || self.reference != Reference::None;
        if needs_growth && m.a <= 0.0 {
            return Err(CliError::validation("model.a", "the closed forms need a > 0"));
        }
        if needs_growth && m.kappa <= 0.0 {
            return Err(CliError::validation("model.kappa", "the closed forms need kappa > 0"));
        }
        match self.solver {
            SolverKind::Asymptotic => self.check_asymptotic_initial("initial.kind")?,
            SolverKind::Grid | SolverKind::Spectral if self.reference == Reference::Asymptotic => {
                self.check_asymptotic_initial("output.reference")?
            }
            SolverKind::Planar2d => {
                let p = &self.planar;
                if m.radius + 4.0 * p.sigma >= p.half_width {
                    return Err(CliError::validation(
                        "planar.L",
                        format!("ring of radius {} and width {} does not fit", m.radius, p.sigma),
                    ));
                }
            }
            _ => {}
        }
        if self.reference != Reference::None && !matches!(self.solver, SolverKind::Grid | SolverKind::Spectral) {
            return Err(CliError::validation("output.reference", "only the grid and spectral solvers take a reference"));
        }
        if m.k0 != 0.0 && self.solver != SolverKind::Manifold {
            return Err(CliError::validation("model.k0", "drag is only supported by the manifold solver"));
        }
        Ok(())
    }

    fn check_asymptotic_initial(&self, path: &str) -> Result<()> {
        match self.initial {
            Initial::Homogeneous | Initial::Perturbed { .. } => Ok(()),
            _ => Err(CliError::validation(
                path,
                "the asymptotic formula needs a homogeneous or perturbed initial condition",
            )),
        }
    }

    /// The time step, or the solver's default when none was given.
    pub fn dt(&self) -> f64 {
        if let Some(dt) = self.numerics.dt {
            return dt;
        }
        let d = self.model.diffusion;
        match self.solver {
            SolverKind::Grid if self.numerics.scheme != Scheme::Imex && d > 0.0 => {
                let h = 2.0 * std::f64::consts::PI / self.numerics.n as f64;
                (0.4 * h * h / d).min(0.05)
            }
            SolverKind::Planar2d => {
                let h = 2.0 * self.planar.half_width / (self.planar.n - 1) as f64;
                if d > 0.0 {
                    (0.2 * h * h / d).min(0.01)
                } else {
                    0.01
                }
            }
            _ => 0.05,
        }
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw.render())
    }
}

/// Map a core parameter name onto the config key that sets it.
pub fn key_for_parameter(name: &str) -> String {
    let key = match name {
        "a" | "b0" | "kappa" | "gamma" | "R" | "D" | "k0" | "T" | "beta00" => return format!("model.{name}"),
        "dt" | "t_end" => return format!("numerics.{name}"),
        "n" => "numerics.N",
        "truncation" => "numerics.J",
        "half_width" | "width" => return format!("initial.{name}"),
        "alpha" => "exact.alpha",
        "L" => "planar.L",
        "sigma" => "planar.sigma",
        "n_angles" => "planar.angles",
        other => other,
    };
    key.to_string()
}
