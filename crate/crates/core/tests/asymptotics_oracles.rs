//! First-order corrections against ODE residuals, Bessel ratios and the
//! coefficient system.

use std::f64::consts::PI;

use fkpp_core::asymptotics::{beta1_initial, AsymptoticExpansion};
use fkpp_core::kernel::bessel_i;
use fkpp_core::quadrature::{periodic_nodes, simpson};
use fkpp_core::spectral::{project_initial, reconstruct, DiffusiveRates, SpectralSystem};
use fkpp_core::{CircleKernelParams, V0};
use num_complex::Complex64;

fn kernel() -> CircleKernelParams {
    CircleKernelParams::new(1.0, 1.0, 1.0).unwrap()
}

fn bump(s: f64) -> f64 {
    (-s * s / 0.6).exp()
}

fn expansion(big_t: f64, d: f64) -> AsymptoticExpansion {
    AsymptoticExpansion::from_perturbation(big_t, 1.0, bump, 10, kernel(), 1.0, 0.2, d).unwrap()
}

#[test]
fn beta1_zero_mode_matches_integral() {
    let b = beta1_initial(bump, 10, 2048).unwrap();
    let oracle = simpson(bump, -PI, PI, 20_000) / (2.0 * PI).sqrt();
    assert!((b[10].re - oracle).abs() < 1e-12);
    // Gaussian integral scale: sqrt(0.6 pi) erf(pi / sqrt 0.6) / sqrt(2 pi)
    assert!((b[10].re - 0.5477225521873771).abs() < 1e-9);
    assert!(beta1_initial(|_| 0.0, 4, 64).unwrap().iter().all(|c| c.norm() == 0.0));
}

#[test]
fn beta1_solves_its_linear_equation() {
    let e = expansion(10.0, 0.0);
    let z = e.zero_order();
    let h = 1e-4;
    for j in [0i64, 1, 3, 7] {
        let lj = kernel().eigenvalue(j);
        for t in [0.5, 2.0, 6.0] {
            let fd = (e.beta1_evolution(j, t + h).unwrap() - e.beta1_evolution(j, t - h).unwrap()) / (2.0 * h);
            let b = e.beta1_evolution(j, t).unwrap();
            let rhs = b * 1.0 - b * (0.2 * (lj + z.lambda0) * V0 * z.beta0(t));
            assert!((fd - rhs).norm() < 1e-7, "j={j} t={t}");
        }
    }
}

#[test]
fn mode_exponent_matches_bessel_ratio() {
    let e = expansion(10.0, 0.0);
    for j in 0..=10i64 {
        let ratio = bessel_i(j as u32, 1.0).unwrap() / bessel_i(0, 1.0).unwrap();
        let want = 1.0 + ratio;
        assert!((e.mode_exponent(j) - want).abs() < 1e-12 * want);
    }
}

#[test]
fn diffusion_damps_every_mode() {
    let zero = expansion(10.0, 0.0);
    let small = expansion(10.0, 0.005);
    let large = expansion(10.0, 0.5);
    for j in [1i64, 2, 5] {
        for t in [1.0, 4.0, 12.0] {
            let a = zero.beta1_evolution(j, t).unwrap().norm();
            let b = small.beta1_evolution(j, t).unwrap().norm();
            let c = large.beta1_evolution(j, t).unwrap().norm();
            assert!(c < b && b < a, "j={j} t={t}");
        }
    }
}

#[test]
fn corrections_die_out_with_diffusion() {
    let e = expansion(10.0, 0.1);
    let lim = e.zero_order().rho_lim().unwrap();
    let s = periodic_nodes(64);
    let profile = e.composite_profile(1000.0, &s).unwrap();
    for r in profile {
        assert!((r - lim).abs() < 1e-12 * lim);
    }
}

#[test]
fn zero_order_recovered_exactly() {
    let e = AsymptoticExpansion::new(10.0, 1.0, vec![Complex64::new(0.0, 0.0)], kernel(), 1.0, 0.2, 0.0)
        .unwrap();
    for t in [0.0, 2.0, 50.0] {
        assert_eq!(e.composite_density(t, 0.4).unwrap(), e.zero_order().rho0(t));
    }
}

#[test]
fn exponential_representation_reproduces_first_order() {
    let e = expansion(10.0, 0.0);
    let worst = e.appendix_a_check(&[0.5, 1.0, 3.0, 10.0]).unwrap();
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn mode_by_mode_route_equals_composite() {
    for d in [0.0, 0.1] {
        let e = expansion(10.0, d);
        let s = periodic_nodes(512);
        for t in [1.0, 10.0, 100.0] {
            for &x in &s {
                let a = e.composite_density(t, x).unwrap();
                let b = e.appendix_b_density(t, x, &e.beta1).unwrap();
                assert!((a - b).abs() < 1e-12, "D={d} t={t} s={x}");
            }
        }
    }
}

/// `max |composite - coefficient solution|` at the given times.
fn composite_vs_spectral(big_t: f64, d: f64, times: &[f64]) -> f64 {
    let rho_phi = move |s: f64| V0 + bump(s) / big_t;
    let jt = 24;
    let sys = SpectralSystem::new(DiffusiveRates::new(1.0, d).unwrap(), 0.2, kernel(), jt).unwrap();
    let st = project_initial(rho_phi, jt, 2048).unwrap();
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let traj = sys.integrate(&st, t_end, 0.005).unwrap();
    let e = AsymptoticExpansion::from_perturbation(big_t, 1.0, bump, jt, kernel(), 1.0, 0.2, d).unwrap();
    let s = periodic_nodes(128);
    let mut worst: f64 = 0.0;
    for &t in times {
        let num = reconstruct(&traj.nearest(t), &s).unwrap();
        let asy = e.composite_profile(t, &s).unwrap();
        for (a, b) in num.iter().zip(&asy) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

#[test]
fn composite_error_scales_as_inverse_square_of_t() {
    let e10 = composite_vs_spectral(10.0, 0.1, &[1.0, 5.0]);
    let e20 = composite_vs_spectral(20.0, 0.1, &[1.0, 5.0]);
    let ratio = e10 / e20;
    assert!((3.2..=4.8).contains(&ratio), "ratio {ratio} ({e10}, {e20})");
}
