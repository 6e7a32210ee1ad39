//! Reference (sequential) versus parallel execution.
//!
//! Parallel paths only split work across grid nodes; every node's sum is still
//! accumulated sequentially in a fixed order, so both modes give bitwise equal
//! results. The reference mode exists so runs can be pinned to one thread.

use rayon::prelude::*;

/// Name of the environment variable read by [`ExecMode::from_env`].
pub const MODE_ENV: &str = "FKPP_MODE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[default]
    Reference,
    Parallel,
}

impl ExecMode {
    /// `FKPP_MODE=parallel` selects the parallel mode; anything else, or an
    /// unset variable, selects the reference mode.
    pub fn from_env() -> Self {
        match std::env::var(MODE_ENV) {
            Ok(v) if v.eq_ignore_ascii_case("parallel") => ExecMode::Parallel,
            _ => ExecMode::Reference,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExecMode::Reference => "reference",
            ExecMode::Parallel => "parallel",
        }
    }

    /// Fill `out[i] = f(i)`.
    pub(crate) fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        match self {
            ExecMode::Reference => out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
            ExecMode::Parallel => out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
        }
    }

    /// Fill fixed-size chunks: `f(i, &mut out[i*chunk..(i+1)*chunk])`.
    pub(crate) fn fill_chunks<F>(self, out: &mut [f64], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        match self {
            ExecMode::Reference => out
                .chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
            ExecMode::Parallel => out
                .par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
        }
    }
}
