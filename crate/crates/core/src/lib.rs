//! Nonlocal Fisher–KPP dynamics reduced to a concentration manifold.
//!
//! The crate collects the pieces needed to study the semiclassically limited
//! distribution (SLD) `rho(t, s)` of a population density concentrated near a
//! curve `X(t, s)`:
//!
//! * [`kernel`]: the Gaussian influence kernel restricted to a circle, its
//!   Fredholm eigenpairs `lambda_j = 2 pi b0 e^{-mu} I_j(mu)` and the modified
//!   Bessel functions behind them.
//! * [`exact`]: the spatially homogeneous logistic solution and the derived
//!   time scales (growth maximum, quasi-steady-state time).
//! * [`spectral`]: the truncated Fourier-coefficient system for the SLD on the
//!   circle, with optional diffusion.
//! * [`asymptotics`]: first-order large-time corrections and the composite
//!   quasi-steady-state density.
//! * [`grid`]: a method-of-lines solver on a periodic grid, the numerical
//!   reference for everything above.
//! * [`manifold`]: the coupled evolution of `X(t, s)` and `rho(t, s)` with
//!   local and nonlocal convection.
//! * [`planar`]: a small 2D solver plus moment and marginal extraction, used to
//!   check that planar solutions concentrate on the circle.
//! * [`analysis`]: peak counts, homogeneity, norms and convergence orders.

pub mod analysis;
pub mod asymptotics;
pub mod csv;
pub mod error;
pub mod exact;
pub mod exec;
pub mod grid;
pub mod kernel;
pub mod manifold;
mod ode;
pub mod planar;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use kernel::CircleKernelParams;

/// `1 / sqrt(2 pi)`, the value of the constant eigenfunction `v_0`.
pub const V0: f64 = 0.398_942_280_401_432_7;

/// `sqrt(2 pi)`.
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
