//! gnuplot scripts for a bundle. Run them from inside the bundle directory:
//! `gnuplot -p plot.gp`.

use std::path::PathBuf;

use crate::config::{ScenarioConfig, SolverKind};

const PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\nset grid\n";

fn names(files: &[PathBuf], prefix: &str) -> Vec<String> {
    files
        .iter()
        .filter(|p| p.parent().and_then(|d| d.file_name()).map_or(true, |d| d != "reference"))
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .filter(|n| n.starts_with(prefix) && n.ends_with(".csv"))
        .collect()
}

pub fn script(cfg: &ScenarioConfig, files: &[PathBuf]) -> String {
    let mut s = String::from(PREAMBLE);
    match cfg.solver {
        SolverKind::Exact => {
            let (col, label) = match cfg.exact_curve.as_str() {
                "rho0_dt" => ("3", "d rho_0 / dt"),
                "abs_rho0_dt" => ("(abs($3))", "|d rho_0 / dt|"),
                _ => ("2", "rho_0"),
            };
            s.push_str("set xlabel 't'\n");
            s.push_str(&format!("set ylabel '{label}'\n"));
            s.push_str("stats 'markers.csv' using 2 name 'TC' nooutput\n");
            s.push_str("set arrow from TC_max, graph 0 to TC_max, graph 1 nohead dashtype 2\n");
            s.push_str(&format!("plot 'curve.csv' using 1:{col} with lines title '{label}'\n"));
        }
        _ => {
            s.push_str("set xlabel 's'\nset ylabel 'rho'\n");
            let mut curves = Vec::new();
            for name in names(files, "snapshot_t") {
                let t = name.trim_start_matches("snapshot_t").trim_end_matches(".csv");
                let col = if cfg.solver == SolverKind::Manifold { "1:4" } else { "1:2" };
                curves.push(format!("'{name}' using {col} with lines title 't = {t}'"));
                if cfg.reference != crate::config::Reference::None {
                    curves.push(format!(
                        "'reference/{name}' using 1:2 with lines dashtype 2 title 'reference, t = {t}'"
                    ));
                }
            }
            s.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
            let rings = names(files, "ring_t");
            if !rings.is_empty() {
                s.push_str("pause -1\nset xlabel 'x'\nset ylabel 'y'\nset zlabel 'rho'\n");
                let curves: Vec<String> = rings
                    .iter()
                    .map(|n| format!("'{n}' using 2:3:4 with lines"))
                    .collect();
                s.push_str(&format!("splot {}\n", curves.join(", ")));
            }
        }
    }
    s
}
