//! CSV reading and writing for grids and trajectories.

use std::path::Path;

use crate::error::{Error, Result};

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match (e.into_kind(), line) {
        (csv::ErrorKind::Io(io), _) => Error::Io(io),
        (kind, Some(l)) => Error::Parse(format!("line {l}: {kind:?}")),
        (kind, None) => Error::Parse(format!("{kind:?}")),
    }
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// CSV text; floats use the shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| fmt_f64(*v))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        Self::from_reader(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes()))
    }

    fn from_reader<R: std::io::Read>(mut r: csv::Reader<R>) -> Result<Self> {
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::Parse("empty CSV".into()));
        }
        let mut t = Table { header, rows: Vec::new() };
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            let row = rec
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: bad number `{c}`"))))
                .collect::<Result<Vec<f64>>>()?;
            t.rows.push(row);
        }
        Ok(t)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

/// Grid file: header `x1,...,xd`, one point per row.
pub fn grid_table(dim: usize, points: &[f64]) -> Table {
    let header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    let mut t = Table::new(&header);
    for row in points.chunks_exact(dim) {
        t.push(row.to_vec());
    }
    t
}

/// Reads a grid file written by [`grid_table`] (the header is optional).
pub fn read_grid(path: &Path) -> Result<(usize, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let has_header = text.lines().next().is_some_and(|l| l.split(',').any(|c| c.trim().parse::<f64>().is_err()));
    let t = Table::from_reader(
        csv::ReaderBuilder::new().trim(csv::Trim::All).has_headers(has_header).from_reader(text.as_bytes()),
    )?;
    Ok((t.header.len(), t.rows.concat()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = Table::new(&["N", "e_p"]);
        t.push(vec![1.0, 0.1 + 0.2]);
        t.push(vec![2.0, 1e-300]);
        let back = Table::parse_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("e_p").unwrap()[0], 0.1 + 0.2);
    }

    #[test]
    fn malformed_rows_are_reported_with_line_numbers() {
        let err = Table::parse_csv("a,b\n1,2\n3\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = Table::parse_csv("a,b\n1,2\n3,x\n").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("`x`"), "{err}");
    }

    #[test]
    fn grid_files() {
        let dir = std::env::temp_dir().join(format!("greedyq-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("grid.csv");
        grid_table(2, &[0.5, 1.0, -2.0, 3.25]).write(&p).unwrap();
        assert_eq!(read_grid(&p).unwrap(), (2, vec![0.5, 1.0, -2.0, 3.25]));
        std::fs::write(&p, "0.5\n0.25\n").unwrap();
        assert_eq!(read_grid(&p).unwrap(), (1, vec![0.5, 0.25]));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
