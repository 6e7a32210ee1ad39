//! Classical fixed-step RK4 on flat state vectors.

use std::ops::{Add, Mul};

pub(crate) struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T> Rk4<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    pub(crate) fn new(len: usize) -> Self {
        let z = vec![T::default(); len];
        Rk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advance `y` in place by one step of size `dt`. `f(t, y, dy)` writes
    /// the right-hand side into `dy`.
    pub(crate) fn step<F, E>(&mut self, t: f64, y: &mut [T], dt: f64, mut f: F) -> Result<(), E>
    where
        F: FnMut(f64, &[T], &mut [T]) -> Result<(), E>,
    {
        let n = y.len();
        f(t, y, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = y[i] + self.k1[i] * (0.5 * dt);
        }
        f(t + 0.5 * dt, &self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = y[i] + self.k2[i] * (0.5 * dt);
        }
        f(t + 0.5 * dt, &self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = y[i] + self.k3[i] * dt;
        }
        f(t + dt, &self.tmp, &mut self.k4)?;
        let w = dt / 6.0;
        for i in 0..n {
            y[i] = y[i] + (self.k1[i] + self.k2[i] * 2.0 + self.k3[i] * 2.0 + self.k4[i]) * w;
        }
        Ok(())
    }
}

/// Number of fixed steps covering `[0, t_end]` with nominal size `dt`; the
/// step is shrunk so the last one lands on `t_end` exactly.
pub(crate) fn step_plan(t_end: f64, dt: f64) -> (usize, f64) {
    if t_end <= 0.0 {
        return (0, dt);
    }
    let n = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    (n, t_end / n as f64)
}
