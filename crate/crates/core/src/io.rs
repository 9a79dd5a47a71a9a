//! Plain-text representation files: one point per line, comma-separated
//! reals, with an optional single header line starting with `#`.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::metrics::PointSet;
use crate::{Error, Result};

pub fn read_points_csv(path: &Path) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut values = Vec::new();
    let mut dim = None;
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        for tok in rec.iter() {
            values.push(tok.parse::<f64>().map_err(|_| bad(format!("'{tok}' is not a number")))?);
        }
        match dim {
            None => dim = Some(rec.len()),
            Some(d) if d != rec.len() => return Err(bad(format!("expected {d} columns, found {}", rec.len()))),
            _ => {}
        }
        rows += 1;
    }
    let d = dim.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "no data rows".into(),
    })?;
    PointSet::new(Array2::from_shape_vec((rows, d), values).expect("row widths checked"))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn write_points_csv(path: &Path, points: &Array2<f64>, header: Option<&str>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    if let Some(h) = header {
        writeln!(f, "# {h}").map_err(|e| Error::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(f);
    for row in points.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
