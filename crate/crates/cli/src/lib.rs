//! Scenario runner for the `fkpp-core` solvers.
//!
//! A scenario is a flat `key = value` file (see [`config::KEYS`]). Running it
//! writes a bundle directory of CSV files, a `manifest.txt` holding the
//! resolved configuration, and optionally a gnuplot script.

pub mod compare;
pub mod config;
pub mod error;
pub mod plot;
pub mod presets;
pub mod run;
pub mod sweep;

pub use compare::{compare, CompareReport};
pub use config::{Config, ScenarioConfig, SolverKind};
pub use error::{CliError, Result};
pub use run::{run, run_single, RunOutcome, RunSummary};
pub use sweep::{sweep, SweepTable};
