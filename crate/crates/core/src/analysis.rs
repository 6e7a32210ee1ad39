//! Profile diagnostics shared by the solvers: peaks, homogeneity, norms,
//! steady-state detection and empirical convergence order.

use crate::error::{invalid, Result};

/// Default relative prominence for [`count_peaks`].
pub const DEFAULT_PROMINENCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileDiagnostics {
    pub n_peaks: usize,
    /// `(max - min) / mean`.
    pub homogeneity: f64,
    /// Rectangle-rule integral over the periodic grid.
    pub mass: f64,
    pub linf: f64,
    pub l2: f64,
}

impl ProfileDiagnostics {
    /// Diagnostics of a profile on a uniform periodic grid of `[-pi, pi)`.
    pub fn periodic(profile: &[f64], prominence: f64) -> Self {
        let h = 2.0 * std::f64::consts::PI / profile.len().max(1) as f64;
        ProfileDiagnostics {
            n_peaks: count_peaks(profile, prominence),
            homogeneity: homogeneity(profile),
            mass: h * profile.iter().sum::<f64>(),
            linf: profile.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            l2: (h * profile.iter().map(|v| v * v).sum::<f64>()).sqrt(),
        }
    }
}

fn mean(profile: &[f64]) -> f64 {
    profile.iter().sum::<f64>() / profile.len() as f64
}

/// Number of local maxima of a periodic profile whose prominence exceeds
/// `prominence * mean(profile)`.
///
/// Plateaus count once. The prominence of a maximum is its height above the
/// higher of the two lowest points met when walking away from it in either
/// direction until ground higher than the peak is reached.
pub fn count_peaks(profile: &[f64], prominence: f64) -> usize {
    if profile.len() < 3 {
        return 0;
    }
    // collapse runs of equal values so plateaus behave like single nodes
    let mut runs: Vec<f64> = Vec::with_capacity(profile.len());
    for &v in profile {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    while runs.len() > 1 && runs.first() == runs.last() {
        runs.pop();
    }
    let m = runs.len();
    if m < 3 {
        return if m == 2 && prominence * mean(profile) < (runs[0] - runs[1]).abs() {
            1
        } else {
            0
        };
    }
    let threshold = prominence * mean(profile);
    let at = |i: isize| runs[i.rem_euclid(m as isize) as usize];
    let mut count = 0;
    for i in 0..m as isize {
        let h = at(i);
        if !(at(i - 1) < h && at(i + 1) < h) {
            continue;
        }
        let walk = |dir: isize| {
            let mut lowest = h;
            for k in 1..m as isize {
                let v = at(i + dir * k);
                if v > h {
                    break;
                }
                lowest = lowest.min(v);
            }
            lowest
        };
        let base = walk(-1).max(walk(1));
        if h - base > threshold {
            count += 1;
        }
    }
    count
}

/// `(max - min) / mean`; zero for a constant profile.
pub fn homogeneity(profile: &[f64]) -> f64 {
    if profile.is_empty() {
        return 0.0;
    }
    let (lo, hi) = profile
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi == lo {
        return 0.0;
    }
    (hi - lo) / mean(profile)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(invalid(
            "profile",
            format!("length mismatch: {} vs {}", a.len(), b.len()),
        ));
    }
    Ok(())
}

/// `max|a - reference| / max|reference|`.
pub fn rel_linf(a: &[f64], reference: &[f64]) -> Result<f64> {
    check_lengths(a, reference)?;
    let diff = a
        .iter()
        .zip(reference)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Discrete relative L2 distance on a uniform grid.
pub fn rel_l2(a: &[f64], reference: &[f64]) -> Result<f64> {
    check_lengths(a, reference)?;
    let diff: f64 = a.iter().zip(reference).map(|(x, y)| (x - y) * (x - y)).sum();
    let scale: f64 = reference.iter().map(|v| v * v).sum();
    Ok(if scale > 0.0 {
        (diff / scale).sqrt()
    } else {
        diff.sqrt()
    })
}

/// Largest `|s_k|` over nodes where the profile exceeds `fraction * max`.
pub fn support_extent(profile: &[f64], s: &[f64], fraction: f64) -> Result<f64> {
    check_lengths(profile, s)?;
    let top = profile.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    Ok(profile
        .iter()
        .zip(s)
        .filter(|(v, _)| **v > fraction * top)
        .fold(0.0f64, |m, (_, s)| m.max(s.abs())))
}

/// Outcome of [`steady_state_time`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteadyState {
    Reached(f64),
    /// Tolerance never met; carries the last observed `max_k |rho_t|`.
    NeverReached { final_rate: f64 },
}

impl SteadyState {
    pub fn time(&self) -> Option<f64> {
        match *self {
            SteadyState::Reached(t) => Some(t),
            SteadyState::NeverReached { .. } => None,
        }
    }
}

/// First stored time at which `max_k |rho_t(t, s_k)|`, estimated by a
/// backward difference, falls below `tol`. A trajectory that is already
/// steady over its first interval reports its initial time.
pub fn steady_state_time(times: &[f64], profiles: &[Vec<f64>], tol: f64) -> Result<SteadyState> {
    if times.len() != profiles.len() || times.len() < 2 {
        return Err(invalid(
            "trajectory",
            "need at least two snapshots with one time each",
        ));
    }
    let mut rate = f64::INFINITY;
    for i in 1..times.len() {
        check_lengths(&profiles[i], &profiles[i - 1])?;
        let dt = times[i] - times[i - 1];
        if !(dt > 0.0) {
            return Err(invalid("times", "must be strictly increasing"));
        }
        rate = profiles[i]
            .iter()
            .zip(&profiles[i - 1])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / dt;
        if rate < tol {
            let t = if i == 1 { times[0] } else { times[i] };
            return Ok(SteadyState::Reached(t));
        }
    }
    Ok(SteadyState::NeverReached { final_rate: rate })
}

/// `ln(e_coarse / e_fine) / ln(ratio)`.
pub fn richardson_order(e_coarse: f64, e_fine: f64, ratio: f64) -> Result<f64> {
    if !(e_coarse > 0.0) || !(e_fine > 0.0) {
        return Err(invalid(
            "error",
            format!("errors must be positive, got {e_coarse} and {e_fine}"),
        ));
    }
    if !(ratio > 1.0) {
        return Err(invalid("ratio", format!("must exceed 1, got {ratio}")));
    }
    Ok((e_coarse / e_fine).ln() / ratio.ln())
}
