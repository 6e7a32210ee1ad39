//! Scenario execution: one solver run per bundle directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fkpp_core::analysis::{count_peaks, homogeneity, support_extent};
use fkpp_core::asymptotics::AsymptoticExpansion;
use fkpp_core::csv::write_rows;
use fkpp_core::exact::HomogeneousModel;
use fkpp_core::grid::GridSolver;
use fkpp_core::manifold::{integrate, radii, ConvectionSpec, ManifoldState, ManifoldTrajectory};
use fkpp_core::planar::{concentration_check, extract_sld, moments, Field2D, GaussianKernel2d, PlanarSolver};
use fkpp_core::quadrature::periodic_nodes;
use fkpp_core::spectral::{
    project_initial, reconstruct, DiffusiveRates, SpectralState, SpectralSystem, DEFAULT_PROJECTION_POINTS,
};
use fkpp_core::{CircleKernelParams, ExecMode};

use crate::compare::{compare, snapshot_name};
use crate::config::{Config, Initial, Reference, ScenarioConfig, SolverKind};
use crate::error::{CliError, Result};
use crate::plot;

/// Profile values above this fraction of the maximum count as support.
pub const SUPPORT_FRACTION: f64 = 0.05;

/// Step of the fixed-circle companion run in the planar solver.
const SLD_DT: f64 = 0.05;

/// Diagnostics are recorded on this many equal intervals of `[0, t_end]`.
const DIAGNOSTIC_INTERVALS: usize = 100;

/// What a run leaves behind besides its files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub t_end: f64,
    pub s: Vec<f64>,
    /// Density at `t_end` on `s`.
    pub profile: Vec<f64>,
    pub mass: f64,
    pub n_peaks: usize,
    pub homogeneity: f64,
    /// Largest `|s|` where the profile exceeds [`SUPPORT_FRACTION`] of its max.
    pub support: f64,
    /// Largest absolute deviation from the reference over snapshots with `t > 0`.
    pub reference_abs: Option<f64>,
    /// Relative L-infinity deviation from the reference at `t_end`.
    pub reference_rel: Option<f64>,
    /// Free-form facts for the manifest.
    pub notes: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: RunSummary,
}

/// Collects the files written into one bundle directory.
pub(crate) struct BundleWriter {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl BundleWriter {
    pub(crate) fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(BundleWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub(crate) fn csv<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut out = BufWriter::new(file);
        write(&mut out)?;
        out.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    pub(crate) fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub(crate) fn into_parts(self) -> (PathBuf, Vec<PathBuf>) {
        (self.dir, self.files)
    }

    pub(crate) fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn profile(&mut self, t: f64, s: &[f64], rho: &[f64]) -> Result<()> {
        self.csv(&snapshot_name(t), |out| {
            write_rows(out, &["s", "rho"], s.iter().zip(rho).map(|(&a, &b)| [a, b]))?;
            Ok(())
        })
    }

    fn ring(&mut self, t: f64, radius: f64, s: &[f64], rho: &[f64]) -> Result<()> {
        self.csv(&format!("ring_t{t}.csv"), |out| {
            let rows = s
                .iter()
                .zip(rho)
                .map(|(&s, &r)| [s, radius * s.cos(), radius * s.sin(), r]);
            write_rows(out, &["s", "x", "y", "rho"], rows)?;
            Ok(())
        })
    }
}

/// Run a scenario, or a sweep if the scenario names one.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    if cfg.sweep.is_some() {
        let table = crate::sweep::sweep(cfg)?;
        return Ok(table.outcome);
    }
    run_single(cfg)
}

/// Run one scenario into `cfg.out_dir`, ignoring any sweep settings.
pub fn run_single(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut bundle = BundleWriter::create(&cfg.out_dir)?;
    let mut summary = match cfg.solver {
        SolverKind::Exact => run_exact(cfg, &mut bundle)?,
        SolverKind::Spectral => run_spectral(cfg, &mut bundle)?,
        SolverKind::Grid => run_grid(cfg, &mut bundle)?,
        SolverKind::Manifold => run_manifold(cfg, &mut bundle)?,
        SolverKind::Planar2d => run_planar(cfg, &mut bundle)?,
        SolverKind::Asymptotic => run_asymptotic(cfg, &mut bundle)?,
    };
    if cfg.reference != Reference::None {
        compare_with_reference(cfg, &mut bundle, &mut summary)?;
    }
    if cfg.plot {
        let script = plot::script(cfg, &bundle.files);
        bundle.text("plot.gp", &script)?;
    }
    let manifest = manifest(&cfg.raw, &bundle.files, &summary, start.elapsed().as_secs_f64());
    bundle.text("manifest.txt", &manifest)?;
    Ok(RunOutcome {
        dir: bundle.dir,
        files: bundle.files,
        summary,
    })
}

/// The resolved configuration as loadable `key = value` lines, preceded by
/// comment lines with the version, execution mode, wall time and results.
pub(crate) fn manifest(raw: &Config, files: &[PathBuf], summary: &RunSummary, wall: f64) -> String {
    let mut m = String::new();
    m.push_str(&format!("# fkpp {}\n", env!("CARGO_PKG_VERSION")));
    m.push_str(&format!("# mode = {}\n", ExecMode::from_env().name()));
    m.push_str(&format!("# wall_time_s = {wall:.3}\n"));
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    m.push_str(&format!("# files = {}\n", names.join(" ")));
    m.push_str(&format!("# n_peaks = {}\n", summary.n_peaks));
    m.push_str(&format!("# homogeneity = {:e}\n", summary.homogeneity));
    m.push_str(&format!("# mass = {:e}\n", summary.mass));
    for (k, v) in &summary.notes {
        m.push_str(&format!("# {k} = {v}\n"));
    }
    m.push_str(&raw.render());
    m
}

fn kernel(cfg: &ScenarioConfig) -> Result<CircleKernelParams> {
    let m = &cfg.model;
    Ok(CircleKernelParams::new(m.b0, m.gamma, m.radius)?)
}

/// Snapshot times merged with a uniform diagnostic grid.
fn output_times(cfg: &ScenarioConfig) -> Vec<f64> {
    let t_end = cfg.numerics.t_end;
    let mut times: Vec<f64> = (0..=DIAGNOSTIC_INTERVALS)
        .map(|k| t_end * k as f64 / DIAGNOSTIC_INTERVALS as f64)
        .collect();
    times.extend_from_slice(&cfg.numerics.snapshots);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * t_end);
    // keep the exact snapshot values where a near-duplicate was dropped
    for t in times.iter_mut() {
        if let Some(&snap) = cfg
            .numerics
            .snapshots
            .iter()
            .find(|&&s| (s - *t).abs() <= 1e-9 * t_end)
        {
            *t = snap;
        }
    }
    times
}

fn is_snapshot(cfg: &ScenarioConfig, t: f64) -> bool {
    cfg.numerics.snapshots.contains(&t)
}

fn summarize(cfg: &ScenarioConfig, s: Vec<f64>, profile: Vec<f64>) -> Result<RunSummary> {
    let h = 2.0 * std::f64::consts::PI / profile.len() as f64;
    Ok(RunSummary {
        t_end: cfg.numerics.t_end,
        mass: h * profile.iter().sum::<f64>(),
        n_peaks: count_peaks(&profile, cfg.prominence),
        homogeneity: homogeneity(&profile),
        support: support_extent(&profile, &s, SUPPORT_FRACTION)?,
        s,
        profile,
        reference_abs: None,
        reference_rel: None,
        notes: Vec::new(),
    })
}

fn diagnostics_header() -> [&'static str; 4] {
    ["t", "mass", "homogeneity", "n_peaks"]
}

fn diagnostics_row(cfg: &ScenarioConfig, t: f64, profile: &[f64]) -> [f64; 4] {
    let h = 2.0 * std::f64::consts::PI / profile.len() as f64;
    [
        t,
        h * profile.iter().sum::<f64>(),
        homogeneity(profile),
        count_peaks(profile, cfg.prominence) as f64,
    ]
}

fn run_exact(cfg: &ScenarioConfig, bundle: &mut BundleWriter) -> Result<RunSummary> {
    let m = &cfg.model;
    let model = HomogeneousModel::from_kernel(m.a, m.kappa, &kernel(cfg)?, m.beta00)?;
    let t_end = cfg.numerics.t_end;
    let points = cfg.exact_points;
    bundle.csv("curve.csv", |out| {
        let rows = (0..points).map(|k| {
            let t = t_end * k as f64 / (points - 1) as f64;
            [t, model.rho0(t), model.rho0_dt(t)]
        });
        write_rows(out, &["t", "rho0", "rho0_dt"], rows)?;
        Ok(())
    })?;
    let t_c = model.t_quasi_steady(cfg.alpha).map_err(|e| match e {
        fkpp_core::Error::NoSolution(reason) | fkpp_core::Error::InvalidParameter { reason, .. } => {
            CliError::validation("exact.alpha", reason)
        }
        other => other.into(),
    })?;
    // no interior growth maximum in the decaying regime
    let t_max = model.t_max().unwrap_or(f64::NAN);
    let rho_lim = model.rho_lim()?;
    bundle.csv("markers.csv", |out| {
        write_rows(
            out,
            &["alpha", "t_c", "rho_at_t_c", "t_max", "rho_lim"],
            [[cfg.alpha, t_c, model.rho0(t_c), t_max, rho_lim]],
        )?;
        Ok(())
    })?;
    let s = periodic_nodes(cfg.numerics.n);
    for &t in &cfg.numerics.snapshots {
        bundle.profile(t, &s, &vec![model.rho0(t); s.len()])?;
    }
    let mut summary = summarize(cfg, s.clone(), vec![model.rho0(t_end); s.len()])?;
    summary.notes.push(("t_c".into(), format!("{t_c}")));
    summary.notes.push(("rho_lim".into(), format!("{rho_lim}")));
    Ok(summary)
}

fn run_spectral(cfg: &ScenarioConfig, bundle: &mut BundleWriter) -> Result<RunSummary> {
    let m = &cfg.model;
    let jt = cfg.numerics.truncation;
    let system = SpectralSystem::new(DiffusiveRates::new(m.a, m.diffusion)?, m.kappa, kernel(cfg)?, jt)?;
    let mut state = project_initial(|s| cfg.initial.eval(m, s), jt, DEFAULT_PROJECTION_POINTS)?;
    let s = periodic_nodes(cfg.numerics.n);
    let dt = cfg.dt();
    let mut kept: Vec<SpectralState> = Vec::new();
    let mut diag = Vec::new();
    let mut drift: f64 = 0.0;
    for t in output_times(cfg) {
        if t > state.t {
            let traj = system.integrate(&state, t, dt)?;
            drift = drift.max(traj.max_reality_drift);
            state = traj.last();
        }
        let profile = reconstruct(&state, &s)?;
        diag.push(diagnostics_row(cfg, t, &profile));
        if is_snapshot(cfg, t) {
            bundle.profile(t, &s, &profile)?;
            if cfg.ring {
                bundle.ring(t, m.radius, &s, &profile)?;
            }
            kept.push(state.clone());
        }
    }
    bundle.csv("coefficients.csv", |out| {
        let rows = kept.iter().flat_map(|st| {
            (-(jt as i64)..=jt as i64).map(move |j| {
                let b = st.get(j);
                [st.t, j as f64, b.re, b.im]
            })
        });
        write_rows(out, &["t", "j", "re_beta", "im_beta"], rows)?;
        Ok(())
    })?;
    bundle.csv("diagnostics.csv", |out| {
        write_rows(out, &diagnostics_header(), &diag)?;
        Ok(())
    })?;
    let profile = reconstruct(&state, &s)?;
    let mut summary = summarize(cfg, s, profile)?;
    summary.notes.push(("max_reality_drift".into(), format!("{drift:e}")));
    Ok(summary)
}

fn run_grid(cfg: &ScenarioConfig, bundle: &mut BundleWriter) -> Result<RunSummary> {
    let m = &cfg.model;
    let num = &cfg.numerics;
    let mut solver = GridSolver::new(num.n, kernel(cfg)?, m.a, m.kappa, m.diffusion, num.backend, num.scheme)?;
    let mut state = cfg.initial.grid(m).sample(num.n)?;
    let times = output_times(cfg);
    let run = solver.run(&mut state, num.t_end, cfg.dt(), &times)?;
    for snap in &run.snapshots {
        if is_snapshot(cfg, snap.t) {
            bundle.profile(snap.t, &snap.s, &snap.rho)?;
            if cfg.ring {
                bundle.ring(snap.t, m.radius, &snap.s, &snap.rho)?;
            }
        }
    }
    bundle.csv("diagnostics.csv", |out| {
        run.write_series(out)?;
        Ok(())
    })?;
    let mut summary = summarize(cfg, state.s.clone(), state.rho.clone())?;
    summary.notes.push(("clamped_nodes".into(), run.clamped.to_string()));
    summary.notes.push(("split_steps".into(), solver.split_steps.to_string()));
    summary.notes.push(("scheme".into(), format!("{:?}", num.scheme).to_lowercase()));
    summary.notes.push(("dt".into(), format!("{}", cfg.dt())));
    Ok(summary)
}

fn expansion(cfg: &ScenarioConfig) -> Result<AsymptoticExpansion> {
    let m = &cfg.model;
    let width = match cfg.initial {
        Initial::Perturbed { width } => Some(width),
        _ => None,
    };
    Ok(AsymptoticExpansion::from_perturbation(
        m.big_t,
        m.beta00,
        |s| width.map_or(0.0, |w| (-s * s / w).exp()),
        cfg.numerics.truncation,
        kernel(cfg)?,
        m.a,
        m.kappa,
        m.diffusion,
    )?)
}

fn run_asymptotic(cfg: &ScenarioConfig, bundle: &mut BundleWriter) -> Result<RunSummary> {
    let exp = expansion(cfg)?;
    let s = periodic_nodes(cfg.numerics.n);
    let mut diag = Vec::new();
    for t in output_times(cfg) {
        let profile = exp.composite_profile(t, &s)?;
        diag.push(diagnostics_row(cfg, t, &profile));
        if is_snapshot(cfg, t) {
            bundle.profile(t, &s, &profile)?;
            if cfg.ring {
                bundle.ring(t, cfg.model.radius, &s, &profile)?;
            }
        }
    }
    let jt = exp.truncation() as i64;
    let modes = (0..=jt)
        .map(|j| Ok([j as f64, exp.beta1_evolution(j, 0.0)?.re, exp.mode_exponent(j), exp.mode_rate(j)]))
        .collect::<Result<Vec<_>>>()?;
    bundle.csv("modes.csv", |out| {
        write_rows(out, &["j", "beta1", "exponent", "rate"], &modes)?;
        Ok(())
    })?;
    bundle.csv("diagnostics.csv", |out| {
        write_rows(out, &diagnostics_header(), &diag)?;
        Ok(())
    })?;
    let profile = exp.composite_profile(cfg.numerics.t_end, &s)?;
    summarize(cfg, s, profile)
}

fn run_manifold(cfg: &ScenarioConfig, bundle: &mut BundleWriter) -> Result<RunSummary> {
    let m = &cfg.model;
    let spec = ConvectionSpec::gaussian(m.a, m.kappa, m.b0, m.gamma, m.k0)?;
    let mut state = ManifoldState::circle(cfg.numerics.n, m.radius, |_| 0.0)?;
    state.rho = cfg.initial.grid(m).sample(cfg.numerics.n)?.rho;
    let dt = cfg.dt();
    let mut kept = ManifoldTrajectory::default();
    let mut diag = Vec::new();
    for t in output_times(cfg) {
        if t > state.t {
            let traj = integrate(&state, &spec, t, dt, usize::MAX)?;
            state = traj.last().cloned().expect("integration keeps the final state");
        }
        let r = radii(&state);
        let mean_radius = r.iter().sum::<f64>() / r.len() as f64;
        let d = diagnostics_row(cfg, t, &state.rho);
        diag.push([d[0], d[1], d[2], d[3], mean_radius]);
        if is_snapshot(cfg, t) {
            bundle.csv(&snapshot_name(t), |out| {
                let rows = (0..state.len()).map(|k| {
                    let p = state.point(k);
                    [state.s[k], p[0], p[1], state.rho[k]]
                });
                write_rows(out, &["s", "x1", "x2", "rho"], rows)?;
                Ok(())
            })?;
            kept.states.push(state.clone());
        }
    }
    bundle.csv("trajectory.csv", |out| {
        kept.write_csv(out)?;
        Ok(())
    })?;
    bundle.csv("diagnostics.csv", |out| {
        write_rows(out, &["t", "mass", "homogeneity", "n_peaks", "mean_radius"], &diag)?;
        Ok(())
    })?;
    let r = radii(&state);
    let spread = r.iter().fold(0.0f64, |acc, &v| acc.max((v - r[0]).abs()));
    let mut summary = summarize(cfg, state.s.clone(), state.rho.clone())?;
    summary.notes.push(("final_radius".into(), format!("{}", r[0])));
    summary.notes.push(("radius_spread".into(), format!("{spread:e}")));
    Ok(summary)
}

/// Observable for the concentration check: position and squared radius.
fn planar_observable(x: &[f64]) -> Vec<f64> {
    vec![x[0], x[1], x[0] * x[0] + x[1] * x[1]]
}

fn run_planar(cfg: &ScenarioConfig, bundle: &mut BundleWriter) -> Result<RunSummary> {
    let m = &cfg.model;
    let p = &cfg.planar;
    let k2 = GaussianKernel2d::new(m.b0, m.gamma)?;
    let mut solver = PlanarSolver::new(p.half_width, p.n, k2, m.a, m.kappa, cfg.numerics.backend)?;
    let profile = |s: f64| cfg.initial.eval(m, s);
    let mut field = Field2D::ring(p.half_width, p.n, m.diffusion, m.radius, p.sigma, profile)?;
    // the same density evolved on the fixed circle, for the deviation measures
    let spec = ConvectionSpec::gaussian(m.a, m.kappa, m.b0, m.gamma, 0.0)?;
    let mut sld = ManifoldState::circle(p.angles, m.radius, profile)?;
    let dt = cfg.dt();
    let mut diag = Vec::new();
    let mut last = None;
    for t in output_times(cfg) {
        solver.run(&mut field, t, dt)?;
        if t > sld.t {
            let traj = integrate(&sld, &spec, t, SLD_DT, usize::MAX)?;
            sld = traj.last().cloned().expect("integration keeps the final state");
        }
        let ex = extract_sld(&field, p.angles)?;
        let (mass, centre) = moments(&field)?;
        let deviation = concentration_check(&field, planar_observable, &sld)?;
        let sld_l2 = fkpp_core::analysis::rel_l2(&ex.rho, &sld.rho)?;
        diag.push([t, mass, centre[0], centre[1], deviation, sld_l2, ex.boundary_fraction]);
        if is_snapshot(cfg, t) {
            bundle.profile(t, &ex.s, &ex.rho)?;
            bundle.csv(&format!("field_t{t}.csv"), |out| {
                field.write_csv(out)?;
                Ok(())
            })?;
        }
        last = Some(ex);
    }
    bundle.csv("diagnostics.csv", |out| {
        write_rows(
            out,
            &["t", "mass", "cx", "cy", "deviation", "sld_l2", "boundary_fraction"],
            &diag,
        )?;
        Ok(())
    })?;
    let ex = last.expect("at least one output time");
    let final_row = diag.last().copied().unwrap_or_default();
    let mut summary = summarize(cfg, ex.s.clone(), ex.rho.clone())?;
    summary.notes.push(("deviation".into(), format!("{:e}", final_row[4])));
    summary.notes.push(("sld_l2".into(), format!("{:e}", final_row[5])));
    summary.notes.push(("trusted".into(), ex.trusted.to_string()));
    summary.notes.push(("clamped_nodes".into(), solver.clamped.to_string()));
    Ok(summary)
}

/// Write the reference snapshots under `reference/` and the comparison table.
fn compare_with_reference(cfg: &ScenarioConfig, bundle: &mut BundleWriter, summary: &mut RunSummary) -> Result<()> {
    let ref_dir = bundle.dir.join("reference");
    let mut refs = BundleWriter::create(&ref_dir)?;
    let s = summary.s.clone();
    match cfg.reference {
        Reference::Exact => {
            let m = &cfg.model;
            let model = HomogeneousModel::from_kernel(m.a, m.kappa, &kernel(cfg)?, m.beta00)?;
            for &t in &cfg.numerics.snapshots {
                refs.profile(t, &s, &vec![model.rho0(t); s.len()])?;
            }
        }
        Reference::Asymptotic => {
            let exp = expansion(cfg)?;
            for &t in &cfg.numerics.snapshots {
                refs.profile(t, &s, &exp.composite_profile(t, &s)?)?;
            }
        }
        Reference::None => return Ok(()),
    }
    let report = compare(&bundle.dir, &ref_dir, cfg.tol_linf, cfg.tol_l2)?;
    bundle.csv("comparison.csv", |out| report.write_csv(out))?;
    bundle.files.extend(refs.files);
    summary.reference_abs = Some(
        report
            .rows
            .iter()
            .filter(|r| r.t > 0.0)
            .fold(0.0f64, |acc, r| acc.max(r.abs_linf)),
    );
    summary.reference_rel = report.at(cfg.numerics.t_end).map(|r| r.rel_linf);
    let pass_at_end = report
        .at(cfg.numerics.t_end)
        .map_or(false, |r| report.row_passes(r));
    summary.notes.push(("reference_pass".into(), pass_at_end.to_string()));
    Ok(())
}
