use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Num(f64),
    Int(i64),
    Verdict(bool),
}

impl Value {
    /// Numbers carry 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Value::Text(s) => s.clone(),
            Value::Num(v) => format!("{v:.16e}"),
            Value::Int(i) => i.to_string(),
            Value::Verdict(true) => "pass".into(),
            Value::Verdict(false) => "fail".into(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Verdict(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// Rows under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ReportTable {
    pub fn new(columns: &[&str]) -> Self {
        ReportTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        self.column(name)
            .map(|k| self.rows.iter().filter_map(|r| r[k].as_f64()).collect())
            .unwrap_or_default()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Numerical(format!("csv encoding: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::render)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv encoding: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Numerical(format!("csv encoding: {e}")))
    }
}

/// Writes `table` as CSV to `path`, atomically through a sibling temporary file.
pub fn emit_report(table: &ReportTable, path: &Path) -> Result<()> {
    let io = |source: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let text = table.to_csv()?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(text.as_bytes()).map_err(io)?;
    file.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rows_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_report(&ReportTable::new(&["scenario", "delta"]), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "scenario,delta\n");
    }

    #[test]
    fn numbers_keep_seventeen_digits_and_rewrites_are_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/r.csv");
        let mut t = ReportTable::new(&["name", "x", "n", "verdict"]);
        t.push(vec!["a,b".into(), 0.1.into(), 3usize.into(), true.into()]);
        emit_report(&t, &path).unwrap();
        let first = fs::read(&path).unwrap();
        emit_report(&t, &path).unwrap();
        assert_eq!(first, fs::read(&path).unwrap());
        let text = String::from_utf8(first).unwrap();
        assert_eq!(text, "name,x,n,verdict\n\"a,b\",1.0000000000000001e-1,3,pass\n");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn unwritable_path_reports_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = emit_report(&ReportTable::new(&["a"]), &blocker.join("r.csv")).unwrap_err();
        assert!(matches!(&err, Error::Io { path, .. } if path.contains("r.csv")), "{err}");
    }
}
