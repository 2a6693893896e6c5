use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

/// A table of `f64` rows plus a JSON metadata block.
///
/// Missing values are `NaN` and are written as empty CSV cells; boolean flags
/// are stored as `0`/`1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// File stem of the written artefacts.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Map<String, Value>,
}

/// Paths produced by [`write_result`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub csv: PathBuf,
    pub meta: PathBuf,
}

impl ExperimentResult {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        ExperimentResult {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Map::new(),
        }
    }

    /// Appends a row; panics if its width does not match the header, which
    /// is a programming error in the experiment itself.
    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header of {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn set_meta(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metadata.insert(key.to_string(), v);
    }

    /// The CSV body exactly as [`write_result`] writes it.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Evaluation(format!("CSV serialisation failed: {e}"));
        w.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_cell(*v)))
                .map_err(fail)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Evaluation(format!("CSV serialisation failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Evaluation(e.to_string()))
    }
}

/// Shortest round-trip decimal; `NaN` becomes an empty cell.
pub fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let file = path.file_name().and_then(|f| f.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{file}.tmp-{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Writes `<name>.csv` and `<name>.meta.json` into `dir` (created if
/// missing), each via a temporary file and a rename.
pub fn write_result(result: &ExperimentResult, dir: &Path) -> Result<WrittenFiles> {
    let valid = !result.name.is_empty()
        && result
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && !result.name.starts_with('.');
    if !valid {
        return Err(Error::arg(format!(
            "result name {:?} is not a plain file stem",
            result.name
        )));
    }
    if result.rows.is_empty() {
        return Err(Error::arg(format!("result {} has no rows", result.name)));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(format!("{}.csv", result.name));
    let meta = dir.join(format!("{}.meta.json", result.name));
    atomic_write(&csv, result.to_csv_string()?.as_bytes())?;
    let mut block = result.metadata.clone();
    block.insert(
        "columns".into(),
        serde_json::to_value(&result.columns).unwrap_or(Value::Null),
    );
    block.insert("rows".into(), Value::from(result.rows.len()));
    let json = serde_json::to_string_pretty(&Value::Object(block))
        .map_err(|e| Error::Evaluation(format!("metadata serialisation failed: {e}")))?;
    atomic_write(&meta, json.as_bytes())?;
    Ok(WrittenFiles { csv, meta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_and_layout() {
        assert_eq!(format_cell(f64::NAN), "");
        assert_eq!(format_cell(0.1), "0.1");
        assert_eq!(format_cell(1e-20), "0.00000000000000000001");
        assert_eq!(format_cell(f64::INFINITY), "inf");
        let mut r = ExperimentResult::new("demo", &["t", "value"]);
        r.push(vec![0.5, f64::NAN]);
        r.push(vec![1.0, 2.0]);
        assert_eq!(r.to_csv_string().unwrap(), "t,value\r\n0.5,\r\n1,2\r\n");
        assert_eq!(r.column("value").unwrap()[1], 2.0);
    }

    #[test]
    fn rejects_unsafe_names() {
        let mut r = ExperimentResult::new("../escape", &["x"]);
        r.push(vec![1.0]);
        assert!(write_result(&r, Path::new("/tmp")).is_err());
    }
}
