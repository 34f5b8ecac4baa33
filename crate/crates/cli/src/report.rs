//! Report envelope, input digests and JSON/CSV emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "oflx";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> CliResult<InputDigest> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) })
}

/// Every report: tool identity, full configuration, input digests and the command result.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub inputs: Vec<InputDigest>,
    pub passed: bool,
    pub result: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, config: &'a RunConfig, inputs: Vec<InputDigest>, passed: bool, result: T) -> Self {
        Self { tool: TOOL, version: VERSION, command, config, inputs, passed, result }
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self).map(|s| s + "\n").map_err(|e| CliError::Io(format!("serializing report: {e}")))
    }
}

/// Plot-ready table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Io(format!("writing csv: {e}"));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("writing csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(format!("writing csv: {e}")))
    }
}

/// `x` in shortest round-trip form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Like [`num`], empty for `None`.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes `<prefix>.json` and `<prefix>.csv`, creating the parent directory.
pub fn write_pair(prefix: &Path, json: &str, table: &Table) -> CliResult<(PathBuf, PathBuf)> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let with_ext = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    let (jp, cp) = (with_ext(".json"), with_ext(".csv"));
    fs::write(&jp, json).map_err(|e| CliError::Io(format!("{}: {e}", jp.display())))?;
    fs::write(&cp, table.to_csv()?).map_err(|e| CliError::Io(format!("{}: {e}", cp.display())))?;
    Ok((jp, cp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, b"abc").unwrap();
        let d = digest_file(&p).unwrap();
        assert_eq!(d.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn csv_quotes_and_orders() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn report_embeds_config_and_version() {
        let c = RunConfig::default();
        let r = Report::new("verify", &c, vec![], true, 1.5);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["tool"], "oflx");
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["config"]["scaleCount"], 4);
        assert_eq!(v["result"], 1.5);
    }

    #[test]
    fn pair_written_next_to_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let (j, c) = write_pair(&dir.path().join("sub/rep"), "{}\n", &Table::new(&["x"])).unwrap();
        assert!(j.ends_with("sub/rep.json") && c.ends_with("sub/rep.csv"));
        assert_eq!(fs::read_to_string(c).unwrap(), "x\n");
    }
}
