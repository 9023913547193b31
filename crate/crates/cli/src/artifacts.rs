//! Output directory handling and the summary document.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const SUMMARY_SCHEMA: &str = "greedyq-summary";
pub const SUMMARY_VERSION: u32 = 1;

/// Files are written as `<name>.partial` and renamed by [`Artifacts::commit`]
/// once the experiment has succeeded, so an interrupted or failed run never
/// leaves complete-looking files behind.
pub struct Artifacts {
    dir: PathBuf,
    pending: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory `{}`", dir.display()))?;
        Ok(Artifacts { dir: dir.to_path_buf(), pending: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(format!("{name}.partial"));
        fs::write(&path, contents).with_context(|| format!("cannot write `{}`", path.display()))?;
        self.pending.push(name.to_string());
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.pending
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::with_capacity(self.pending.len());
        for name in &self.pending {
            let to = self.dir.join(name);
            fs::rename(self.dir.join(format!("{name}.partial")), &to)
                .with_context(|| format!("cannot finalize `{}`", to.display()))?;
            out.push(to);
        }
        Ok(out)
    }
}

/// Headline numbers of one experiment. Maps are ordered so the JSON is
/// byte-stable across runs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Outcome {
    pub results: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
}

impl Outcome {
    pub fn set(&mut self, key: &str, v: f64) {
        self.results.insert(key.to_string(), v);
    }

    pub fn check(&mut self, key: &str, ok: bool) {
        self.checks.insert(key.to_string(), ok);
    }
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub schema: &'static str,
    pub schema_version: u32,
    pub experiment: &'a str,
    pub config: &'a ExperimentConfig,
    pub results: &'a BTreeMap<String, f64>,
    pub checks: &'a BTreeMap<String, bool>,
    pub artifacts: Vec<String>,
}

pub fn summary_json(cfg: &ExperimentConfig, outcome: &Outcome, artifacts: &[String]) -> String {
    let s = Summary {
        schema: SUMMARY_SCHEMA,
        schema_version: SUMMARY_VERSION,
        experiment: cfg.experiment.as_str(),
        config: cfg,
        results: &outcome.results,
        checks: &outcome.checks,
        artifacts: artifacts.to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&s).expect("summary serializes");
    text.push('\n');
    text
}
