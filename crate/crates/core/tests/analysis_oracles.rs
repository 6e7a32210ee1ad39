//! Steady-state detection against the closed-form quasi-steady time.

use fkpp_core::analysis::{steady_state_time, SteadyState};
use fkpp_core::exact::HomogeneousModel;
use fkpp_core::CircleKernelParams;

fn model(kappa: f64) -> HomogeneousModel {
    let k = CircleKernelParams::new(1.0, 1.0, 1.0).unwrap();
    HomogeneousModel::from_kernel(1.0, kappa, &k, 1.0).unwrap()
}

#[test]
fn detector_agrees_with_formula() {
    let m = model(0.2);
    let dt = 0.1;
    let times: Vec<f64> = (0..=200).map(|k| k as f64 * dt).collect();
    let profiles: Vec<Vec<f64>> = times.iter().map(|&t| vec![m.rho0(t); 16]).collect();
    let alpha = 0.95;
    // rho_t ~ a (rho_lim - rho) near the limit
    let tol = m.a * m.rho_lim().unwrap() * (1.0 - alpha);
    let found = steady_state_time(&times, &profiles, tol).unwrap().time().unwrap();
    let formula = m.t_quasi_steady(alpha).unwrap();
    assert!((found - formula).abs() <= dt, "{found} vs {formula}");
}

#[test]
fn pure_growth_never_steady() {
    let m = model(0.0);
    let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.2).collect();
    let profiles: Vec<Vec<f64>> = times.iter().map(|&t| vec![m.rho0(t); 8]).collect();
    assert!(matches!(
        steady_state_time(&times, &profiles, 1e-3).unwrap(),
        SteadyState::NeverReached { .. }
    ));
}
