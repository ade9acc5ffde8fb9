//! Experiment configuration files.
//!
//! ```toml
//! [map]
//! family = "logistic"
//! [map.params]
//! mu = 4.0
//!
//! [analysis]
//! kind = "density"
//! k = 4096
//!
//! [output]
//! dir = "out"
//! format = "both"
//!
//! [expect]
//! verdict = "converged"
//! metric_max = 0.05
//! ```
//!
//! Unknown keys are rejected at every level. Keys an analysis does not use
//! are rejected too, so a typo in an optional key cannot go unnoticed.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub map: MapConfig,
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Orbit,
    Summability,
    Prop1,
    Prop2,
    Density,
    Lp,
    Bbc,
    Wander,
    Schwarzian,
    Order,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Orbit => "orbit",
            Kind::Summability => "summability",
            Kind::Prop1 => "prop1",
            Kind::Prop2 => "prop2",
            Kind::Density => "density",
            Kind::Lp => "lp",
            Kind::Bbc => "bbc",
            Kind::Wander => "wander",
            Kind::Schwarzian => "schwarzian",
            Kind::Order => "order",
        }
    }

    /// Optional keys each analysis accepts, besides `kind` and `precision`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Kind::Orbit | Kind::Summability => &["n", "side", "critical"],
            Kind::Prop1 => &["n", "eps", "critical"],
            Kind::Prop2 => &["n", "sizes", "trials", "seed"],
            Kind::Density => &["k", "max_iters", "tol", "test_fns", "starts", "seed", "operator"],
            Kind::Lp => &["p_grid", "k_grid", "max_iters", "tol"],
            Kind::Bbc => &["deltas", "samples", "horizon", "seed"],
            Kind::Wander => &["n", "interval", "trials", "seed"],
            Kind::Schwarzian => &["samples_per_branch"],
            Kind::Order => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum Precision {
    #[serde(rename = "f32")]
    F32,
    #[serde(rename = "f64")]
    F64,
    #[serde(rename = "double-double")]
    DoubleDouble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideChoice {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<Precision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<SideChoice>,
    /// Index into the critical set; all critical points when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fns: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_branch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    /// Also write the Ulam matrix as coordinate triplets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_format")]
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: default_format(),
        }
    }
}

fn default_dir() -> String {
    "intervalkit-out".into()
}

fn default_format() -> Format {
    Format::Both
}

/// Expected outcome, checked by `suite`. Never affects exit codes.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_max: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text).map_err(|reason| CliError::Config {
            path: path.display().to_string(),
            reason,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        cfg.resolve();
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if !intervalkit::map::FAMILIES.contains(&self.map.family.as_str()) {
            return Err(format!(
                "map.family: unknown family '{}' (expected one of {})",
                self.map.family,
                intervalkit::map::FAMILIES.join(", ")
            ));
        }
        let allowed = self.analysis.kind.keys();
        for key in self.analysis.present_keys() {
            if !allowed.contains(&key) {
                return Err(format!(
                    "analysis.{key}: not used by analysis '{}'",
                    self.analysis.kind.name()
                ));
            }
        }
        if let Some(e) = &self.expect {
            if let (Some(lo), Some(hi)) = (e.metric_min, e.metric_max) {
                if lo > hi {
                    return Err("expect.metric_min exceeds expect.metric_max".into());
                }
            }
        }
        Ok(())
    }

    /// Fills every key the analysis uses with its default, so the echoed
    /// configuration is complete.
    fn resolve(&mut self) {
        let a = &mut self.analysis;
        a.precision.get_or_insert(Precision::F64);
        match a.kind {
            Kind::Orbit | Kind::Summability => {
                a.n.get_or_insert(200);
                a.side.get_or_insert(SideChoice::Both);
            }
            Kind::Prop1 => {
                a.n.get_or_insert(20);
                a.eps.get_or_insert_with(|| vec![1e-2, 1e-3, 1e-4]);
                a.critical.get_or_insert(0);
            }
            Kind::Prop2 => {
                a.n.get_or_insert(10);
                a.sizes.get_or_insert_with(|| vec![1e-2, 1e-3, 1e-4]);
                a.trials.get_or_insert(10);
                a.seed.get_or_insert(0);
            }
            Kind::Density => {
                a.k.get_or_insert(1024);
                a.max_iters.get_or_insert(intervalkit::transfer::DEFAULT_MAX_ITERS);
                a.tol.get_or_insert(intervalkit::transfer::DEFAULT_TOLERANCE);
                a.test_fns.get_or_insert(8);
                a.starts.get_or_insert(1);
                a.seed.get_or_insert(0);
                a.operator.get_or_insert(false);
            }
            Kind::Lp => {
                a.p_grid.get_or_insert_with(|| vec![1.2, 1.5, 1.8, 2.0, 2.5]);
                a.k_grid.get_or_insert_with(|| vec![256, 1024, 4096]);
                a.max_iters.get_or_insert(intervalkit::transfer::DEFAULT_MAX_ITERS);
                a.tol.get_or_insert(intervalkit::transfer::DEFAULT_TOLERANCE);
            }
            Kind::Bbc => {
                a.deltas.get_or_insert_with(|| vec![1e-1, 1e-2, 1e-3]);
                a.samples.get_or_insert(10_000);
                a.horizon.get_or_insert(1_000);
                a.seed.get_or_insert(0);
            }
            Kind::Wander => {
                a.n.get_or_insert(50);
                if a.interval.is_none() {
                    a.trials.get_or_insert(100);
                    a.seed.get_or_insert(0);
                }
            }
            Kind::Schwarzian => {
                a.samples_per_branch.get_or_insert(1000);
            }
            Kind::Order => {}
        }
    }

    /// Replaces the seed of analyses that draw random samples.
    pub fn override_seed(&mut self, seed: u64) {
        if self.analysis.seed.is_some() {
            self.analysis.seed = Some(seed);
        }
    }
}

impl AnalysisConfig {
    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut note = |present: bool, key: &'static str| {
            if present {
                keys.push(key);
            }
        };
        note(self.n.is_some(), "n");
        note(self.side.is_some(), "side");
        note(self.critical.is_some(), "critical");
        note(self.eps.is_some(), "eps");
        note(self.sizes.is_some(), "sizes");
        note(self.trials.is_some(), "trials");
        note(self.deltas.is_some(), "deltas");
        note(self.samples.is_some(), "samples");
        note(self.horizon.is_some(), "horizon");
        note(self.k.is_some(), "k");
        note(self.k_grid.is_some(), "k_grid");
        note(self.p_grid.is_some(), "p_grid");
        note(self.max_iters.is_some(), "max_iters");
        note(self.tol.is_some(), "tol");
        note(self.test_fns.is_some(), "test_fns");
        note(self.interval.is_some(), "interval");
        note(self.seed.is_some(), "seed");
        note(self.samples_per_branch.is_some(), "samples_per_branch");
        note(self.starts.is_some(), "starts");
        note(self.operator.is_some(), "operator");
        keys
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled() {
        let cfg = Config::parse("[map]\nfamily = \"doubling\"\n[analysis]\nkind = \"summability\"\nn = 100\n").unwrap();
        assert_eq!(cfg.analysis.n, Some(100));
        assert_eq!(cfg.analysis.side, Some(SideChoice::Both));
        assert_eq!(cfg.analysis.precision, Some(Precision::F64));
        assert_eq!(cfg.output.format, Format::Both);
        assert!(cfg.analysis.seed.is_none());
    }

    #[test]
    fn errors_name_the_key() {
        let bad_family = Config::parse("[map]\nfamily = \"henon\"\n[analysis]\nkind = \"order\"\n").unwrap_err();
        assert!(bad_family.contains("map.family"), "{bad_family}");
        let unused = Config::parse("[map]\nfamily = \"tent\"\n[analysis]\nkind = \"order\"\nk = 5\n").unwrap_err();
        assert!(unused.contains("analysis.k"), "{unused}");
        let unknown = Config::parse("[map]\nfamily = \"tent\"\n[analysis]\nkind = \"order\"\nbogus = 1\n").unwrap_err();
        assert!(unknown.contains("bogus"), "{unknown}");
        let kind = Config::parse("[map]\nfamily = \"tent\"\n[analysis]\nkind = \"spectrum\"\n").unwrap_err();
        assert!(kind.contains("spectrum"), "{kind}");
    }

    #[test]
    fn seed_override_only_touches_seeded_analyses() {
        let mut cfg = Config::parse("[map]\nfamily = \"tent\"\n[analysis]\nkind = \"bbc\"\n").unwrap();
        cfg.override_seed(9);
        assert_eq!(cfg.analysis.seed, Some(9));
        let mut cfg = Config::parse("[map]\nfamily = \"tent\"\n[analysis]\nkind = \"order\"\n").unwrap();
        cfg.override_seed(9);
        assert_eq!(cfg.analysis.seed, None);
    }
}
