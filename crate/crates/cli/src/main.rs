use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use fkpp_cli::config::{Config, ScenarioConfig};
use fkpp_cli::{compare, presets, run, CliError, RunOutcome};

/// Nonlocal Fisher-KPP scenarios on a circle: closed forms, spectral, grid,
/// manifold and planar solvers.
///
/// Any `key = value` setting of a scenario file can be overridden on the
/// command line as `--model.gamma 1.5`, `--model.gamma=1.5` or
/// `model.gamma=1.5`. Set FKPP_MODE=parallel to spread grid work over threads.
#[derive(Parser)]
#[command(name = "fkpp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Homogeneous closed-form solution and its time scales.
    Exact(ScenarioArgs),
    /// Truncated Fourier-coefficient system.
    Spectral(ScenarioArgs),
    /// Method-of-lines solver on the periodic grid.
    Simulate(ScenarioArgs),
    /// Coupled curve and density evolution.
    Manifold(ScenarioArgs),
    /// Planar solver started from a thin ring, with marginal extraction.
    Planar2d(ScenarioArgs),
    /// Composite large-time asymptotic density.
    Asymptotic(ScenarioArgs),
    /// Compare the snapshots of two bundles; the second is the reference.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Relative L-infinity tolerance.
        #[arg(long, default_value_t = 0.1)]
        linf: f64,
        /// Relative L2 tolerance.
        #[arg(long, default_value_t = 0.1)]
        l2: f64,
        /// Also write the report as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario once per value of one key.
    Sweep {
        /// Key to vary, e.g. model.gamma.
        #[arg(long)]
        axis: String,
        /// Comma separated values.
        #[arg(long)]
        values: String,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run a committed scenario (fig1 .. fig8).
    Preset {
        /// Preset name; omit with --list.
        name: Option<String>,
        /// List the presets and exit.
        #[arg(long)]
        list: bool,
        /// Print the preset's scenario file instead of running it.
        #[arg(long)]
        show: bool,
        /// Overrides, as for the solver subcommands.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides: --key value, --key=value or key=value.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

/// Turn `--a.b 1 --c.d=2 e.f=3` into `["a.b=1", "c.d=2", "e.f=3"]`.
fn normalize_overrides(args: &[String]) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.strip_prefix("--") {
            Some(flag) if flag.contains('=') => out.push(flag.to_string()),
            Some(flag) => {
                let value = it
                    .next()
                    .ok_or_else(|| CliError::validation(flag, "missing value"))?;
                out.push(format!("{flag}={value}"));
            }
            None => out.push(arg.clone()),
        }
    }
    Ok(out)
}

fn scenario_config(args: &ScenarioArgs, solver: Option<&str>) -> anyhow::Result<Config> {
    let mut cfg = match &args.config {
        Some(path) => Config::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => Config::default(),
    };
    if let Some(solver) = solver {
        cfg.set("solver", solver)?;
    }
    cfg.apply(&normalize_overrides(&args.overrides)?)?;
    Ok(cfg)
}

fn report(outcome: &RunOutcome) {
    let s = &outcome.summary;
    println!("bundle: {}", outcome.dir.display());
    println!(
        "t = {}: peaks = {}, homogeneity = {:.3e}, mass = {:.6}",
        s.t_end, s.n_peaks, s.homogeneity, s.mass
    );
    if let (Some(abs), Some(rel)) = (s.reference_abs, s.reference_rel) {
        println!("reference: max abs deviation = {abs:.3e}, relative L-inf at t_end = {rel:.3e}");
    }
    for (k, v) in &s.notes {
        println!("{k} = {v}");
    }
}

fn execute(cfg: Config) -> anyhow::Result<()> {
    let scenario = ScenarioConfig::from_config(&cfg)?;
    if scenario.sweep.is_some() {
        let table = fkpp_cli::sweep(&scenario)?;
        println!("sweep over {}: {}", table.axis, table.outcome.dir.display());
        for e in &table.entries {
            let s = &e.outcome.summary;
            println!(
                "  {} = {}: peaks = {}, homogeneity = {:.3e}, mass = {:.6}, support = {:.3}",
                table.axis, e.value, s.n_peaks, s.homogeneity, s.mass, s.support
            );
        }
        if !table.orders.is_empty() {
            println!("  empirical orders: {:?}", table.orders);
        }
    } else {
        report(&run(&scenario)?);
    }
    Ok(())
}

fn real_main(cli: Cli) -> anyhow::Result<ExitCode> {
    let solver_run = |args: &ScenarioArgs, solver| -> anyhow::Result<ExitCode> {
        execute(scenario_config(args, Some(solver))?)?;
        Ok(ExitCode::SUCCESS)
    };
    match cli.command {
        Command::Exact(a) => solver_run(&a, "exact"),
        Command::Spectral(a) => solver_run(&a, "spectral"),
        Command::Simulate(a) => solver_run(&a, "grid"),
        Command::Manifold(a) => solver_run(&a, "manifold"),
        Command::Planar2d(a) => solver_run(&a, "planar2d"),
        Command::Asymptotic(a) => solver_run(&a, "asymptotic"),
        Command::Compare { a, b, linf, l2, out } => {
            let rep = compare(&a, &b, linf, l2)?;
            println!("t,abs_linf,rel_linf,rel_l2,pass");
            for r in &rep.rows {
                println!(
                    "{},{:e},{:e},{:e},{}",
                    r.t,
                    r.abs_linf,
                    r.rel_linf,
                    r.rel_l2,
                    if rep.row_passes(r) { "PASS" } else { "FAIL" }
                );
            }
            if let Some(path) = out {
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                rep.write_csv(std::io::BufWriter::new(file))?;
            }
            Ok(if rep.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sweep { axis, values, scenario } => {
            let mut cfg = scenario_config(&scenario, None)?;
            cfg.set("sweep.axis", &axis)?;
            cfg.set("sweep.values", &values)?;
            execute(cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset {
            name,
            list,
            show,
            overrides,
        } => {
            if list {
                for n in presets::names() {
                    println!("{n}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let name = name.ok_or_else(|| CliError::validation("preset", "name required (or --list)"))?;
            let mut cfg = presets::load(&name)?;
            cfg.apply(&normalize_overrides(&overrides)?)?;
            if show {
                print!("{}", cfg.render());
                return Ok(ExitCode::SUCCESS);
            }
            execute(cfg)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
