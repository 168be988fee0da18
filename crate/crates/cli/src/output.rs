//! Self-describing artifacts: every file names its schema, tool version,
//! configuration hash and seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use polylab::config::ExperimentConfig;
use polylab::stats::sweep::{SCHEMA_VERSION, TOOL_VERSION};
use serde::Serialize;

pub struct Artifacts<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    kind: &'a str,
    schema_version: u32,
    tool_version: &'a str,
    config_hash: &'a str,
    seed: u64,
    data: &'a T,
}

impl<'a> Artifacts<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
        Ok(Self { cfg, hash: cfg.hash() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    /// Opens `name` and writes the `#` header lines.
    pub fn text(&self, name: &str, kind: &str, seed: u64) -> Result<BufWriter<File>> {
        let mut w = self.create(name)?;
        writeln!(w, "# polylab {kind}")?;
        writeln!(w, "# schema_version: {SCHEMA_VERSION}")?;
        writeln!(w, "# tool_version: {TOOL_VERSION}")?;
        writeln!(w, "# config_hash: {}", self.hash)?;
        writeln!(w, "# seed: {seed}")?;
        Ok(w)
    }

    pub fn json<T: Serialize>(&self, name: &str, kind: &str, seed: u64, data: &T) -> Result<()> {
        let mut w = self.create(name)?;
        let env = Envelope { kind, schema_version: SCHEMA_VERSION, tool_version: TOOL_VERSION, config_hash: &self.hash, seed, data };
        serde_json::to_writer_pretty(&mut w, &env)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Two-column plot data.
    pub fn series(&self, name: &str, seed: u64, columns: (&str, &str), points: &[(f64, f64)]) -> Result<()> {
        let mut w = self.text(name, "plot", seed)?;
        writeln!(w, "# {} {}", columns.0, columns.1)?;
        for (x, y) in points {
            writeln!(w, "{x} {y}")?;
        }
        w.flush()?;
        Ok(())
    }
}
