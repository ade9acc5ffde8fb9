//! Experiment driver: load a map and an analysis from a config file, run it,
//! and write provenance-stamped reports.

pub mod analysis;
pub mod config;
pub mod error;
pub mod output;
pub mod suite;

use std::path::{Path, PathBuf};

use analysis::Outcome;
use config::{Config, Format};
use error::CliError;

/// Command-line overrides shared by `run` and `suite`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

pub struct Run {
    pub config: Config,
    pub outcome: Outcome,
    pub written: Vec<PathBuf>,
}

/// Loads, resolves and executes one config, then writes its reports.
pub fn run_config(path: &Path, opts: &RunOptions) -> Result<Run, CliError> {
    let mut config = Config::load(path)?;
    if let Some(seed) = opts.seed {
        config.override_seed(seed);
    }
    if let Some(format) = opts.format {
        config.output.format = format;
    }
    if let Some(out) = &opts.out {
        config.output.dir = out.display().to_string();
    }
    let outcome = analysis::execute(&config)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    let dir = PathBuf::from(&config.output.dir);
    let written = output::write_outputs(&config, &stem, &dir, config.output.format, &outcome)?;
    Ok(Run {
        config,
        outcome,
        written,
    })
}

/// One-screen summary of a finished run.
pub fn summary(run: &Run) -> String {
    let params: Vec<String> = run.config.map.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut s = format!(
        "map: {} {}\nanalysis: {}\nverdict: {}\n",
        run.config.map.family,
        if params.is_empty() { String::new() } else { format!("({})", params.join(", ")) },
        run.config.analysis.kind.name(),
        run.outcome.verdict
    );
    if let Some(m) = run.outcome.metric {
        s.push_str(&format!("{}: {m}\n", run.outcome.metric_name));
    }
    for line in &run.outcome.lines {
        s.push_str(&format!("  {line}\n"));
    }
    for p in &run.written {
        s.push_str(&format!("wrote {}\n", p.display()));
    }
    s
}
