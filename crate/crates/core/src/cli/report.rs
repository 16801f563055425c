//! CSV tables and JSON sidecars.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Header of the verification table.
pub const VERIFY_HEADER: [&str; 11] =
    ["id", "side", "p", "domain", "gap", "remainder", "exponent", "sigma", "margin", "passed", "ms"];

/// One verified instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: usize,
    pub side: String,
    pub p: f64,
    pub domain: String,
    pub gap: f64,
    pub remainder: f64,
    pub exponent: f64,
    pub sigma: f64,
    pub margin: f64,
    pub passed: bool,
    /// Wall time in milliseconds; zero unless timing was requested.
    pub ms: u64,
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_rows(path: &Path, rows: &[ReportRow]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_error)?;
    w.write_record(VERIFY_HEADER).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()
}

pub fn read_rows(path: &Path) -> io::Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(VERIFY_HEADER) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "unexpected verification header"));
    }
    r.deserialize().collect::<Result<_, _>>().map_err(csv_error)
}

/// A free-form table of preformatted cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
        let header = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_error)?.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }
}

/// Shortest representation that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![
            ReportRow {
                id: 0,
                side: "max".into(),
                p: 1.5,
                domain: "interval".into(),
                gap: 1.0 / 3.0,
                remainder: 2.5e-17,
                exponent: 2.0,
                sigma: 0.1,
                margin: -0.0,
                passed: true,
                ms: 0,
            },
            ReportRow {
                id: 1,
                side: "holder1".into(),
                p: 3.0,
                domain: "box2d".into(),
                gap: f64::MAX,
                remainder: 1e-300,
                exponent: 1.0,
                sigma: 0.25,
                margin: -1e-3,
                passed: false,
                ms: 12,
            },
        ];
        write_rows(&path, &rows).unwrap();
        assert_eq!(read_rows(&path).unwrap(), rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,side,p,domain,gap,remainder,exponent,sigma,margin,passed,ms\n"));
    }

    #[test]
    fn empty_report_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_rows(&path, &[]).unwrap();
        assert!(read_rows(&path).unwrap().is_empty());
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
    }

    #[test]
    fn tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["x", "u"]);
        t.push(vec![num(0.1), num(std::f64::consts::PI)]);
        t.push(vec![num(0.2), opt(None)]);
        t.write(&path).unwrap();
        let back = Table::read(&path).unwrap();
        assert_eq!(back.header, t.header);
        assert_eq!(back.rows, t.rows);
        assert_eq!(back.rows[0][1].parse::<f64>().unwrap(), std::f64::consts::PI);
    }
}
