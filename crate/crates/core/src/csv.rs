//! Minimal CSV I/O: one header line, comma separated floats at 17
//! significant digits, LF line endings.
//!
//! `{:.16e}` prints 17 significant digits, enough for any f64 to round-trip.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(e: std::io::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Write a header and rows of numbers.
pub fn write_rows<W: Write, R: AsRef<[f64]>>(
    out: &mut W,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> Result<()> {
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (i, v) in row.as_ref().iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_f64(*v));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io_err)?;
    }
    Ok(())
}

/// A parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .column_index(name)
            .ok_or_else(|| Error::Csv(format!("missing column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_table<R: BufRead>(input: R) -> Result<Table> {
    let mut lines = input.lines();
    let header: Vec<String> = match lines.next() {
        Some(l) => l
            .map_err(io_err)?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect(),
        None => return Err(Error::Csv("empty input".into())),
    };
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Csv(format!("line {}: `{f}`: {e}", n + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Csv(format!(
                "line {}: expected {} fields, got {}",
                n + 2,
                header.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
            let mut buf = Vec::new();
            write_rows(&mut buf, &["x"], vals.iter().map(|v| [*v])).unwrap();
            let t = read_table(&buf[..]).unwrap();
            let back = t.column("x").unwrap();
            prop_assert_eq!(back, vals);
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = "a,b\n1,2\n3\n";
        assert!(read_table(text.as_bytes()).is_err());
    }

    #[test]
    fn uses_lf_and_header() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &["s", "rho"], [[0.5, 1.0]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "s,rho\n5.0000000000000000e-1,1.0000000000000000e0\n"
        );
    }
}
