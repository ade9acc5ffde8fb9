//! Runs every config in a directory and aggregates the verdicts.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{pretty_json, write_atomic, SUITE_SCHEMA, VERSION};
use crate::{run_config, RunOptions};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub config: String,
    pub family: Option<String>,
    pub analysis: Option<String>,
    pub status: &'static str,
    pub verdict: Option<String>,
    pub metric_name: Option<&'static str>,
    pub metric: Option<f64>,
    /// `pass`, `fail`, or absent when the config states no expectation.
    pub expectation: Option<&'static str>,
    pub error: Option<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema: &'static str,
    pub tool: Tool,
    pub directory: String,
    pub seed_override: Option<u64>,
    pub rows: Vec<SuiteRow>,
    pub errors: usize,
    pub expectations_failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

fn check_expectation(cfg: &Config, verdict: &str, metric: Option<f64>) -> Option<&'static str> {
    let e = cfg.expect.as_ref()?;
    let mut ok = e.verdict.as_ref().is_none_or(|v| v == verdict);
    if let Some(lo) = e.metric_min {
        ok &= metric.is_some_and(|m| m >= lo);
    }
    if let Some(hi) = e.metric_max {
        ok &= metric.is_some_and(|m| m <= hi);
    }
    Some(if ok { "pass" } else { "fail" })
}

fn run_one(path: &Path, opts: &RunOptions) -> SuiteRow {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut row = SuiteRow {
        config: name,
        family: None,
        analysis: None,
        status: "error",
        verdict: None,
        metric_name: None,
        metric: None,
        expectation: None,
        error: None,
        outputs: Vec::new(),
    };
    match run_config(path, opts) {
        Ok(run) => {
            row.family = Some(run.config.map.family.clone());
            row.analysis = Some(run.config.analysis.kind.name().to_string());
            row.status = "ok";
            row.expectation = check_expectation(&run.config, &run.outcome.verdict, run.outcome.metric);
            row.verdict = Some(run.outcome.verdict);
            row.metric_name = Some(run.outcome.metric_name);
            row.metric = run.outcome.metric;
            row.outputs = run.written.iter().map(|p| p.display().to_string()).collect();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

pub fn run_suite(dir: &Path, opts: &RunOptions, workers: usize) -> Result<SuiteReport, CliError> {
    let files = config_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let rows: Vec<SuiteRow> = pool.install(|| files.par_iter().map(|f| run_one(f, opts)).collect());
    let errors = rows.iter().filter(|r| r.status == "error").count();
    let expectations_failed = rows.iter().filter(|r| r.expectation == Some("fail")).count();
    Ok(SuiteReport {
        schema: SUITE_SCHEMA,
        tool: Tool {
            name: "intervalkit",
            version: VERSION,
        },
        directory: dir.display().to_string(),
        seed_override: opts.seed,
        rows,
        errors,
        expectations_failed,
    })
}

fn metric_cell(r: &SuiteRow) -> String {
    match (r.metric_name, r.metric) {
        (Some(n), Some(m)) => format!("{n}={m:.6e}"),
        (Some(n), None) => format!("{n}=none"),
        _ => String::new(),
    }
}

/// Fixed-width text table, one row per config.
pub fn render_table(report: &SuiteReport) -> String {
    let header = ["config", "analysis", "status", "verdict", "expect", "metric"];
    let cells: Vec<[String; 6]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.config.clone(),
                r.analysis.clone().unwrap_or_default(),
                r.status.to_string(),
                r.verdict.clone().unwrap_or_else(|| r.error.clone().unwrap_or_default()),
                r.expectation.unwrap_or("-").to_string(),
                metric_cell(r),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |row: &[String]| {
        row.iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    for row in &cells {
        out.push_str(&line(row));
        out.push('\n');
    }
    out.push_str(&format!(
        "{} configs, {} errors, {} expectations failed\n",
        report.rows.len(),
        report.errors,
        report.expectations_failed
    ));
    out
}

pub fn write_suite(report: &SuiteReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let json_path = dir.join("suite.json");
    let table_path = dir.join("suite.txt");
    write_atomic(&json_path, &pretty_json(report))?;
    write_atomic(&table_path, render_table(report).as_bytes())?;
    Ok(vec![json_path, table_path])
}
