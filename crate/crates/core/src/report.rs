//! Output plumbing: every file starts with a provenance header (tool
//! version, full configuration, seed) and is byte-identical across re-runs
//! of the same configuration. No timestamps, no map iteration order.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What produced an output file. Config keys are kept sorted so emission
/// order never depends on insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            config: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// `#`-prefixed header lines for delimited output.
    pub fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("# tool: {} {}", self.tool, self.version),
            format!("# command: {}", self.command),
        ];
        for (k, v) in &self.config {
            lines.push(format!("# config: {k}={v}"));
        }
        if let Some(seed) = self.seed {
            lines.push(format!("# seed: {seed}"));
        }
        lines
    }
}

/// Writes a provenance-headed delimited table. `rows` may be empty; the
/// header row is always present.
pub fn write_csv<W: Write>(
    mut out: W,
    provenance: &Provenance,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    for line in provenance.header_lines() {
        writeln!(out, "{line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns)?;
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a pretty-printed JSON document with a trailing newline. Field
/// order follows the struct definitions, so output is stable.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::other)?;
    writeln!(out)?;
    Ok(())
}

/// Canonical float formatting for table cells: shortest representation
/// that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provenance() -> Provenance {
        Provenance::new("simulate-binary")
            .with("n", 1000)
            .with("f_min", 0.2)
            .with("steps", 50)
            .with_seed(7)
    }

    #[test]
    fn header_lists_config_sorted_and_seed_last() {
        let lines = provenance().header_lines();
        assert_eq!(lines[0], format!("# tool: crowdvote {TOOL_VERSION}"));
        assert_eq!(lines[1], "# command: simulate-binary");
        assert_eq!(lines[2], "# config: f_min=0.2");
        assert_eq!(lines[3], "# config: n=1000");
        assert_eq!(lines[4], "# config: steps=50");
        assert_eq!(lines[5], "# seed: 7");
    }

    #[test]
    fn empty_table_still_has_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &provenance(), &["a", "b"], &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("a,b\n"));
        assert!(text.starts_with("# tool:"));
    }

    #[test]
    fn identical_inputs_give_identical_bytes() {
        let rows = vec![vec!["1".to_string(), fmt_f64(0.5)]];
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&mut a, &provenance(), &["x", "y"], &rows).unwrap();
        write_csv(&mut b, &provenance(), &["x", "y"], &rows).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip() {
        let p = provenance();
        let mut buf = Vec::new();
        write_json(&mut buf, &p).unwrap();
        let back: Provenance = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, p);
    }
}
