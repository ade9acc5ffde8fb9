//! Report files: schema-versioned JSON and commented CSV, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tempfile::NamedTempFile;

use crate::analysis::Outcome;
use crate::config::{Config, Format};
use crate::error::CliError;

pub const REPORT_SCHEMA: &str = "intervalkit.report/1";
pub const SUITE_SCHEMA: &str = "intervalkit.suite/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    // Temporary files are created owner-only; reports are ordinary files.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(tmp.path(), std::fs::Permissions::from_mode(0o644)).map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

pub fn pretty_json<S: Serialize>(v: &S) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("JSON serialization");
    bytes.push(b'\n');
    bytes
}

/// Provenance lines shared by every text output.
fn provenance_lines(cfg: &Config) -> Vec<String> {
    vec![
        format!("schema: {REPORT_SCHEMA}"),
        format!("tool: intervalkit {VERSION}"),
        format!("seed: {}", cfg.analysis.seed.map_or("none".into(), |s| s.to_string())),
        format!("config: {}", serde_json::to_string(cfg).expect("config serializes")),
    ]
}

pub fn report_json(cfg: &Config, out: &Outcome) -> Value {
    json!({
        "schema": REPORT_SCHEMA,
        "tool": { "name": "intervalkit", "version": VERSION },
        "seed": cfg.analysis.seed,
        "config": cfg,
        "map": out.map,
        "summary": {
            "analysis": cfg.analysis.kind.name(),
            "verdict": out.verdict,
            "metric": { "name": out.metric_name, "value": out.metric },
            "lines": out.lines,
        },
        "report": out.report,
    })
}

/// Writes the requested report files for one run and returns their paths.
pub fn write_outputs(
    cfg: &Config,
    stem: &str,
    dir: &Path,
    format: Format,
    out: &Outcome,
) -> Result<Vec<PathBuf>, CliError> {
    let base = format!("{stem}.{}", cfg.analysis.kind.name());
    let mut written = Vec::new();
    if format.json() {
        let path = dir.join(format!("{base}.json"));
        write_atomic(&path, &pretty_json(&report_json(cfg, out)))?;
        written.push(path);
    }
    let header = provenance_lines(cfg);
    if format.csv() {
        let path = dir.join(format!("{base}.csv"));
        let mut buf = Vec::new();
        out.table.write_csv(&mut buf, &header).map_err(io_err(&path))?;
        write_atomic(&path, &buf)?;
        written.push(path);
    }
    for (suffix, body) in &out.extra {
        let path = dir.join(format!("{base}.{suffix}"));
        let mut buf = Vec::new();
        for line in &header {
            buf.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        buf.extend_from_slice(body);
        write_atomic(&path, &buf)?;
        written.push(path);
    }
    Ok(written)
}
