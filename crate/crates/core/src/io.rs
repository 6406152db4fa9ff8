//! CSV and JSON-lines input and output. Floats are written as `{:.16e}` so
//! files round-trip exactly and reruns are byte-identical.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::measures::DesignMeasure;
use crate::simulation::HitRateTable;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn coord_headers(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// Columns `x1..xd`, plus `y` when the design carries observations.
pub fn write_design<W: Write>(w: W, design: &Design) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = coord_headers(design.dim());
    let obs = design.observations();
    if obs.is_some() {
        header.push("y".into());
    }
    out.write_record(&header)?;
    for (i, x) in design.points().enumerate() {
        let mut rec: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        if let Some(y) = obs {
            rec.push(fmt_f64(y[i]));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a design written by [`write_design`]; a last column named `y` is
/// taken as observations.
pub fn read_design<R: Read>(r: R) -> Result<Design> {
    let (header, rows) = read_table(r)?;
    let has_y = header.last().is_some_and(|h| h == "y");
    let d = header.len() - usize::from(has_y);
    if d == 0 {
        return Err(Error::Parse("design file has no coordinate columns".into()));
    }
    let mut coords = Vec::with_capacity(rows.len() * d);
    let mut y = Vec::new();
    for row in rows {
        coords.extend_from_slice(&row[..d]);
        if has_y {
            y.push(row[d]);
        }
    }
    let design = Design::new(d, coords)?;
    if has_y {
        design.with_observations(y)
    } else {
        Ok(design)
    }
}

/// Columns `x1..xd,weight`.
pub fn write_measure<W: Write>(w: W, xi: &DesignMeasure) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = coord_headers(xi.dim());
    header.push("weight".into());
    out.write_record(&header)?;
    for i in 0..xi.len() {
        let mut rec: Vec<String> = xi.point(i).iter().map(|&v| fmt_f64(v)).collect();
        rec.push(fmt_f64(xi.weights()[i]));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_measure<R: Read>(r: R) -> Result<DesignMeasure> {
    let (header, rows) = read_table(r)?;
    if header.last().map(String::as_str) != Some("weight") || header.len() < 2 {
        return Err(Error::Parse("measure file needs coordinate columns and a final `weight` column".into()));
    }
    let d = header.len() - 1;
    let mut coords = Vec::with_capacity(rows.len() * d);
    let mut weights = Vec::with_capacity(rows.len());
    for row in rows {
        coords.extend_from_slice(&row[..d]);
        weights.push(row[d]);
    }
    DesignMeasure::new(Design::new(d, coords)?, weights)
}

fn read_table<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} fields, expected {}", line + 1, rec.len(), header.len())));
        }
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: `{s}` is not a number", line + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Named numeric columns, written as CSV or as `{"columns", "rows"}` JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        write_rows(w, &header, self.rows.iter().cloned())
    }
}

/// Generic numeric table with the given header.
pub fn write_rows<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    out.flush()?;
    Ok(())
}

/// Long format: one line per cell.
pub fn write_table_csv<W: Write>(w: W, table: &HitRateTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["row", "n", "replicates", "rate_truth0", "rate_truth1", "average", "seed", "fit_failures", "budget_exhausted", "error"])?;
    for row in &table.rows {
        for cell in &row.cells {
            let id = row.row.id();
            let rec: Vec<String> = match &cell.report {
                Some(r) => vec![
                    id,
                    cell.n.to_string(),
                    r.replicates.to_string(),
                    fmt_f64(r.rate_truth0),
                    fmt_f64(r.rate_truth1),
                    fmt_f64(r.average),
                    r.seed.to_string(),
                    r.fit_failures.to_string(),
                    cell.budget_exhausted.to_string(),
                    String::new(),
                ],
                None => vec![
                    id,
                    cell.n.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    cell.budget_exhausted.to_string(),
                    cell.error.clone().unwrap_or_default(),
                ],
            };
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Aligned text: one line per row, one column per size, averages to three
/// decimals and `--` for failed cells.
pub fn format_table_text(table: &HitRateTable) -> String {
    let labels: Vec<String> = table.rows.iter().map(|r| r.row.label()).collect();
    let lw = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max("Design size".len());
    let mut s = format!("{:<lw$}", "Design size");
    for n in &table.sizes {
        s.push_str(&format!(" {n:>6}"));
    }
    s.push('\n');
    for (row, label) in table.rows.iter().zip(&labels) {
        s.push_str(&format!("{label:<lw$}"));
        for n in &table.sizes {
            let cell = row.cells.iter().find(|c| c.n == *n);
            match cell.and_then(|c| c.report.as_ref()) {
                Some(r) => s.push_str(&format!(" {:>6.3}", r.average)),
                None => s.push_str(&format!(" {:>6}", "--")),
            }
        }
        s.push('\n');
    }
    s
}

/// Appends one JSON object per line.
pub struct JsonLines<W: Write> {
    out: W,
}

impl<W: Write> JsonLines<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_round_trip_is_exact() {
        let d = Design::from_points(&[vec![0.1, 1.0 / 3.0], vec![std::f64::consts::PI, -2e-300]])
            .unwrap()
            .with_observations(vec![0.7, -1.0 / 7.0])
            .unwrap();
        let mut buf = Vec::new();
        write_design(&mut buf, &d).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x1,x2,y\n"));
        assert_eq!(read_design(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn measure_round_trip_is_exact() {
        let xi = DesignMeasure::new(Design::from_1d(&[0.0, 1.0 / 3.0]).unwrap(), vec![0.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        write_measure(&mut buf, &xi).unwrap();
        assert_eq!(read_measure(buf.as_slice()).unwrap(), xi);
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(read_design("x1,x2\n1,abc\n".as_bytes()), Err(Error::Parse(_))));
        assert!(read_measure("x1,w\n1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn json_lines() {
        let mut j = JsonLines::new(Vec::new());
        j.write(&serde_json::json!({"a": 1})).unwrap();
        j.write(&serde_json::json!({"b": 2.5})).unwrap();
        assert_eq!(String::from_utf8(j.into_inner()).unwrap(), "{\"a\":1}\n{\"b\":2.5}\n");
    }
}
