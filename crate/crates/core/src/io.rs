//! CSV and JSON output with parameter headers and atomic file replacement.
//!
//! CSV files start with `#`-prefixed comment lines echoing the library
//! version and every parameter, then a column header and comma-separated
//! rows. JSON documents carry a top-level `"schema": 1`.

use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const JSON_SCHEMA: u32 = 1;

/// A CSV document built in memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvDoc {
    pub params: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra comment lines written after the rows.
    pub trailer: Vec<String>,
}

impl CsvDoc {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            params: vec![("command".into(), command.into())],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.push((key.into(), value.to_string()));
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# fracppk {VERSION}");
        for (k, v) in &self.params {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        for t in &self.trailer {
            let _ = writeln!(out, "# {t}");
        }
        out
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Top-level JSON document `{"schema": 1, "version", "command", "params", "data"}`.
pub fn json_document<P: Serialize, D: Serialize>(command: &str, params: &P, data: &D) -> serde_json::Result<Value> {
    Ok(json!({
        "schema": JSON_SCHEMA,
        "version": VERSION,
        "command": command,
        "params": serde_json::to_value(params)?,
        "data": serde_json::to_value(data)?,
    }))
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut d = CsvDoc::new("pmf", &["n", "prob"]);
        d.param("k", 2).param("lambda", 1.0);
        d.row(vec!["0".into(), fmt_f64(0.25)]);
        let s = d.render();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# fracppk "));
        assert_eq!(lines[1], "# command=pmf");
        assert_eq!(lines[2], "# k=2");
        assert_eq!(lines[3], "# lambda=1");
        assert_eq!(lines[4], "n,prob");
        assert_eq!(lines[5], "0,0.25");
    }

    #[test]
    fn floats_round_trip() {
        for v in [std::f64::consts::PI, 1e-300, 0.1 + 0.2, (-2.0_f64).exp()] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_has_schema() {
        let v = json_document("sample", &json!({"k": 2}), &vec![1, 2, 3]).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["data"][2], 3);
    }

    #[test]
    fn atomic_replace() {
        let dir = std::env::temp_dir().join(format!("fracppk-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("out.csv");
        atomic_write(&p, b"first").unwrap();
        atomic_write(&p, b"second").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "second");
        let leftovers = fs::read_dir(&dir).unwrap().count();
        assert_eq!(leftovers, 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
