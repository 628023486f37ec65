use std::fs;
use std::io::Write;
use std::path::Path;

use chargegame::{save_instance, Instance, PriceProfile, Quantity, StrategyProfile, Utility};
use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    /// CSV records.
    Rows,
    /// The full JSON run report.
    #[default]
    Structured,
}

#[derive(Debug, Serialize)]
pub struct InstanceInfo {
    pub source: String,
    /// SHA-256 of the canonical instance document.
    pub fingerprint: String,
}

impl InstanceInfo {
    pub fn new(source: String, instance: &Instance) -> Self {
        let digest = Sha256::digest(save_instance(instance).as_bytes());
        InstanceInfo { source, fingerprint: hex::encode(digest) }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub instance: InstanceInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub granularity: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prices: Option<PriceProfile>,
    pub result: serde_json::Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// The only field that differs between identical runs.
    pub duration_ms: u64,
}

/// CSV sections; several are separated by a blank line.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(header: I) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = S>, S: Into<String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }
}

pub fn render_rows(tables: &[Table]) -> anyhow::Result<String> {
    let mut out = Vec::new();
    for (i, table) in tables.iter().enumerate() {
        if i > 0 {
            out.push(b'\n');
        }
        let mut writer = csv::Writer::from_writer(&mut out);
        writer.write_record(&table.header)?;
        for row in &table.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
    }
    Ok(String::from_utf8(out)?)
}

pub fn render_structured(report: &RunReport) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Same syntax `--profile` accepts.
pub fn profile_text(profile: &StrategyProfile) -> String {
    profile.rows().iter().map(|r| strategy_text(r)).collect::<Vec<_>>().join(";")
}

pub fn strategy_text(strategy: &[Quantity]) -> String {
    strategy.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn utility_columns(instance: &Instance) -> Vec<String> {
    instance.agents.iter().map(|a| format!("u_{}", a.id)).collect()
}

pub fn utility_cells(utilities: &[Utility]) -> impl Iterator<Item = String> + '_ {
    utilities.iter().map(ToString::to_string)
}

pub fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
