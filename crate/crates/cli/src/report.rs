//! Report assembly and output.
//!
//! Result blocks are deterministic; wall-clock timings live in a separate
//! list so that re-runs can be compared block by block.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed,
    Skipped,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBlock {
    pub name: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub data: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl ResultBlock {
    pub fn ok(name: impl Into<String>, data: Value) -> Self {
        ResultBlock { name: name.into(), status: Status::Ok, data, error: None }
    }

    pub fn failed(name: impl Into<String>, data: Value, kind: &str, message: impl Into<String>) -> Self {
        ResultBlock {
            name: name.into(),
            status: Status::Failed,
            data,
            error: Some(ErrorInfo { kind: kind.into(), message: message.into(), exit_code: 1 }),
        }
    }

    pub fn skipped(name: impl Into<String>) -> Self {
        ResultBlock { name: name.into(), status: Status::Skipped, data: Value::Null, error: None }
    }

    pub fn from_error(name: impl Into<String>, data: Value, e: &CliError) -> Self {
        let code = e.exit_code();
        let kind = match e {
            CliError::Config(_) => "configuration",
            CliError::Io(_) => "io",
            CliError::Core(c) => c.kind(),
        };
        let status = if code == 3 { Status::BudgetExceeded } else { Status::Failed };
        ResultBlock {
            name: name.into(),
            status,
            data,
            error: Some(ErrorInfo { kind: kind.into(), message: e.to_string(), exit_code: code }),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match (self.status, &self.error) {
            (Status::Ok | Status::Skipped, _) => 0,
            (Status::BudgetExceeded, _) => 3,
            (Status::Failed, Some(e)) => e.exit_code,
            (Status::Failed, None) => 1,
        }
    }
}

/// Wall-clock seconds per stage; not part of the reproducible output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub budget: u64,
    pub config: Value,
    pub results: Vec<ResultBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub timings: Vec<Timing>,
}

impl Report {
    /// Configuration errors outrank mathematical failures, which outrank
    /// budget exhaustion.
    pub fn exit_code(&self) -> i32 {
        let codes: Vec<i32> = self.results.iter().map(ResultBlock::exit_code).collect();
        [2, 1, 3].into_iter().find(|c| codes.contains(c)).unwrap_or(0)
    }

    /// The reproducible part of the report.
    pub fn results_json(&self) -> String {
        serde_json::to_string_pretty(&self.results).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Records the elapsed time of each stage.
pub struct Stopwatch {
    timings: Vec<Timing>,
}

impl Stopwatch {
    pub fn new() -> Self {
        Stopwatch { timings: Vec::new() }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record(stage, start);
        out
    }

    pub fn record(&mut self, stage: &str, start: Instant) {
        self.timings.push(Timing { stage: stage.into(), seconds: start.elapsed().as_secs_f64() });
    }

    pub fn add(&mut self, stage: &str, seconds: f64) {
        self.timings.push(Timing { stage: stage.into(), seconds });
    }

    pub fn finish(self) -> Vec<Timing> {
        self.timings
    }
}

impl Default for Stopwatch {
    fn default() -> Self {
        Self::new()
    }
}

/// A CSV table. The table with an empty suffix is the primary output of
/// `--format csv`; the others are side-tables written next to `--out`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub suffix: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(suffix: &str, header: &[&str]) -> Self {
        Table { suffix: suffix.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// `<out>.<suffix>.csv`.
    pub fn side_path(&self, out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(format!(".{}.csv", self.suffix));
        PathBuf::from(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn exit_codes_follow_precedence() {
        let mut r = Report {
            tool: "t".into(),
            version: "0".into(),
            command: "c".into(),
            seed: None,
            budget: 1,
            config: Value::Null,
            results: vec![ResultBlock::ok("a", json!(1)), ResultBlock::skipped("b")],
            warnings: vec![],
            timings: vec![],
        };
        assert_eq!(r.exit_code(), 0);
        r.results.push(ResultBlock::from_error("c", Value::Null, &CliError::Core(relind_core::Error::ResourceLimit("x".into()))));
        assert_eq!(r.exit_code(), 3);
        assert_eq!(r.results[2].status, Status::BudgetExceeded);
        r.results.push(ResultBlock::from_error("d", Value::Null, &CliError::Core(relind_core::Error::NoSeparation)));
        assert_eq!(r.exit_code(), 1);
        r.results.push(ResultBlock::from_error("e", Value::Null, &CliError::Config("bad".into())));
        assert_eq!(r.exit_code(), 2);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_tables() {
        let mut t = Table::new("lebesgue", &["n", "note"]);
        t.push(vec!["2".into(), "a, b".into()]);
        assert_eq!(t.to_csv().unwrap(), "n,note\n2,\"a, b\"\n");
        assert_eq!(t.side_path(Path::new("out/r.json")), PathBuf::from("out/r.json.lebesgue.csv"));
    }
}
