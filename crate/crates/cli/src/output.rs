//! Report envelopes and JSON/CSV emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: Option<String>,
    pub threads: usize,
    pub seed: Option<u64>,
}

impl Meta {
    pub fn new(command: &str, config_sha256: Option<String>, threads: usize, seed: Option<u64>) -> Self {
        Meta {
            tool: "twistop",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256,
            threads,
            seed,
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# tool={} version={} command={} config_sha256={} threads={} seed={}\n",
            self.tool,
            self.version,
            self.command,
            self.config_sha256.as_deref().unwrap_or("none"),
            self.threads,
            self.seed.map_or_else(|| "none".to_string(), |s| s.to_string()),
        )
    }
}

/// A named numerical assertion.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            value,
            tolerance,
            passed: value >= tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Everything a command produces.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub result: Value,
    pub tables: Vec<Table>,
    pub checks: Vec<CheckOutcome>,
    pub summary: Vec<String>,
}

impl CommandOutput {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    meta: &'a Meta,
    result: &'a Value,
    checks: &'a [CheckOutcome],
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write(dir: &Path, format: Format, meta: &Meta, out: &CommandOutput) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = meta.command.replace('-', "_");
    match format {
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            let env = Envelope {
                meta,
                result: &out.result,
                checks: &out.checks,
            };
            let mut text = serde_json::to_string_pretty(&env).map_err(std::io::Error::other)?;
            text.push('\n');
            fs::write(&path, text)?;
            Ok(vec![path])
        }
        Format::Csv => {
            let mut paths = Vec::new();
            for table in &out.tables {
                let path = dir.join(format!("{stem}_{}.csv", table.name));
                paths.push(path.clone());
                write_csv(&path, meta, &table.header, &table.rows)?;
            }
            let path = dir.join(format!("{stem}_checks.csv"));
            let rows: Vec<Vec<String>> = out
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), num(c.value), num(c.tolerance), c.passed.to_string()])
                .collect();
            write_csv(&path, meta, &["check", "value", "tolerance", "passed"], &rows)?;
            paths.push(path);
            Ok(paths)
        }
    }
}

fn write_csv(path: &Path, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(meta.comment_lines().as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
