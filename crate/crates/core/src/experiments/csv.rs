use std::io::Write;
use std::path::Path;

use super::sweep::{Stat, SweepResult, SweepRow};
use crate::{Error, Result};

pub const CSV_COLUMNS: [&str; 15] = [
    "alpha",
    "snr",
    "n",
    "cce_ab_mean",
    "cce_ab_stderr",
    "cce_ba_mean",
    "cce_ba_stderr",
    "gen_err_a_mean",
    "gen_err_a_stderr",
    "gen_err_b_mean",
    "gen_err_b_stderr",
    "cce_theory",
    "gen_err_theory",
    "n_replicates",
    "failures",
];

const EXTRA_COLUMNS: [&str; 2] = ["p", "gamma"];

fn has_extra(result: &SweepResult) -> bool {
    result.rows.iter().any(|r| r.p.is_some() || r.gamma.is_some())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the sweep as CSV: `#` comment lines carrying the version,
/// timestamp, configuration and any cell failures, then a header row and one
/// row per grid point. Missing values are empty fields; numbers use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> std::io::Result<()> {
    let meta = &result.metadata;
    writeln!(out, "# {}", meta.version)?;
    writeln!(out, "# generated_at_unix={}", meta.generated_at_unix)?;
    writeln!(out, "# config={}", meta.config)?;
    for m in &meta.failure_messages {
        writeln!(out, "# failure: {}", m.replace('\n', " "))?;
    }
    writeln!(
        out,
        "# columns: alpha is the sample-size grid value (n/d, or n/(d*k) for gamma sweeps); \
         *_mean/*_stderr are ensemble means and standard errors; a = first network, b = second; \
         theory columns are empty where no closed form exists"
    )?;
    let extra = has_extra(result);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if extra {
        header.extend(EXTRA_COLUMNS);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in &result.rows {
        let mut rec = vec![r.alpha.to_string(), opt(r.snr), r.n.to_string()];
        for s in [&r.cce_ab, &r.cce_ba, &r.gen_err_a, &r.gen_err_b] {
            rec.push(s.mean.to_string());
            rec.push(s.stderr.to_string());
        }
        rec.extend([
            opt(r.cce_theory),
            opt(r.gen_err_theory),
            r.n_replicates.to_string(),
            r.failures.to_string(),
        ]);
        if extra {
            rec.extend([opt(r.p), opt(r.gamma)]);
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

/// Writes to `path`, or to standard output when `path` is `-`.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if path.as_os_str() == "-" {
        let stdout = std::io::stdout();
        return write_csv(result, stdout.lock()).map_err(|e| Error::io(path, e));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(result, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads rows written by [`write_csv`]; comment lines are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let bad = |line: u64, message: String| Error::Parse {
        path: "<sweep csv>".into(),
        line: line as usize,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let cols = match rdr.headers() {
        Ok(h) if h.is_empty() => return Ok(Vec::new()),
        Ok(h) => h.clone(),
        Err(e) => return Err(bad(0, e.to_string())),
    };
    let known = cols.len() >= CSV_COLUMNS.len() && cols.iter().zip(CSV_COLUMNS).all(|(a, b)| a == b);
    if !known {
        return Err(bad(1, "unexpected header".into()));
    }
    let extra = cols.len() == CSV_COLUMNS.len() + EXTRA_COLUMNS.len();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let f = rec.map_err(|e| bad(0, e.to_string()))?;
        let ln = f.position().map_or(0, |p| p.line());
        if f.len() != cols.len() {
            return Err(bad(ln, format!("expected {} fields, found {}", cols.len(), f.len())));
        }
        let num = |i: usize| -> Result<f64> { f[i].parse().map_err(|_| bad(ln, format!("bad number '{}'", &f[i]))) };
        let maybe = |i: usize| -> Result<Option<f64>> { if f[i].is_empty() { Ok(None) } else { num(i).map(Some) } };
        let int = |i: usize| -> Result<usize> { f[i].parse().map_err(|_| bad(ln, format!("bad integer '{}'", &f[i]))) };
        let stat = |i: usize| -> Result<Stat> { Ok(Stat { mean: num(i)?, stderr: num(i + 1)? }) };
        rows.push(SweepRow {
            alpha: num(0)?,
            snr: maybe(1)?,
            n: int(2)?,
            cce_ab: stat(3)?,
            cce_ba: stat(5)?,
            gen_err_a: stat(7)?,
            gen_err_b: stat(9)?,
            cce_theory: maybe(11)?,
            gen_err_theory: maybe(12)?,
            n_replicates: int(13)?,
            failures: int(14)?,
            p: if extra { maybe(15)? } else { None },
            gamma: if extra { maybe(16)? } else { None },
        });
    }
    Ok(rows)
}
