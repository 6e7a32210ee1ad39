//! Committed scenario files, compiled into the binary.

use crate::config::Config;
use crate::error::{CliError, Result};

pub const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.cfg")),
    ("fig2", include_str!("../presets/fig2.cfg")),
    ("fig3", include_str!("../presets/fig3.cfg")),
    ("fig4", include_str!("../presets/fig4.cfg")),
    ("fig5", include_str!("../presets/fig5.cfg")),
    ("fig5a", include_str!("../presets/fig5a.cfg")),
    ("fig5b", include_str!("../presets/fig5b.cfg")),
    ("fig6", include_str!("../presets/fig6.cfg")),
    ("fig7", include_str!("../presets/fig7.cfg")),
    ("fig8", include_str!("../presets/fig8.cfg")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// The preset's config with `output.dir` defaulting to `out/<name>`.
pub fn load(name: &str) -> Result<Config> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let known: Vec<&str> = names().collect();
            CliError::validation("preset", format!("unknown preset `{name}` (known: {})", known.join(", ")))
        })?;
    let mut cfg = Config::parse(text)?;
    if !cfg.is_set("output.dir") {
        cfg.set("output.dir", &format!("out/{name}"))?;
    }
    Ok(cfg)
}
