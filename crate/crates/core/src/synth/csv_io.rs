//! Dataset CSV: optional `# truth.*` preamble, then a header
//! `x_0,…,x_{d-1},y[,label]` and one row per sample. Floats use 17
//! significant digits so files round-trip exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{parse_err, Error, Result};
use crate::linalg::Matrix;
use crate::numfmt::fmt17;
use crate::types::{CoefficientSet, Dataset, Truth};

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_csv_to(ds, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn write_csv_to<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    let truth = ds.truth();
    if let Some(t) = truth {
        if let Some(c) = &t.coefficients {
            for (k, b) in c.betas().iter().enumerate() {
                let vals: Vec<String> = b.iter().map(|v| fmt17(*v)).collect();
                writeln!(out, "# truth.beta_{k} = {}", vals.join(","))?;
            }
        }
        if let Some(s) = t.noise_scale {
            writeln!(out, "# truth.noise_scale = {}", fmt17(s))?;
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = (0..ds.d()).map(|j| format!("x_{j}")).collect();
    header.push("y".into());
    if truth.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, (row, &y)) in ds.x().iter_rows().zip(ds.y()).enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
        rec.push(fmt17(y));
        if let Some(t) = truth {
            rec.push(t.labels[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    read_csv_from(fs::File::open(path)?)
}

pub fn read_csv_from<R: Read>(mut input: R) -> Result<Dataset> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;

    let mut betas: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut noise_scale = None;
    let mut body_start = 0;
    let mut preamble_lines = 0;
    for line in text.split_inclusive('\n') {
        let Some(meta) = line.strip_prefix('#') else { break };
        preamble_lines += 1;
        body_start += line.len();
        let (key, value) = meta
            .split_once('=')
            .ok_or_else(|| parse_err(preamble_lines, "expected `# key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(preamble_lines, format!("bad number `{s}`")))
        };
        if let Some(k) = key.strip_prefix("truth.beta_") {
            let k: usize = k
                .parse()
                .map_err(|_| parse_err(preamble_lines, format!("bad key `{key}`")))?;
            let b = value.split(',').map(num).collect::<Result<Vec<_>>>()?;
            betas.push((k, b));
        } else if key == "truth.noise_scale" {
            noise_scale = Some(num(value)?);
        } else {
            return Err(parse_err(preamble_lines, format!("unknown key `{key}`")));
        }
    }

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(&text.as_bytes()[body_start..]);
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let d = (0..).take_while(|j| col(&format!("x_{j}")).is_some()).count();
    if d == 0 {
        return Err(Error::MissingColumn("x_0".into()));
    }
    let x_cols: Vec<usize> = (0..d).map(|j| col(&format!("x_{j}")).unwrap()).collect();
    let y_col = col("y").ok_or_else(|| Error::MissingColumn("y".into()))?;
    let label_col = col("label");
    if let Some(extra) = header.iter().find(|h| {
        let h = h.trim();
        h.strip_prefix("x_")
            .and_then(|j| j.parse::<usize>().ok())
            .is_some_and(|j| j >= d)
    }) {
        return Err(Error::MissingColumn(format!("x_{d} (found `{extra}` after a gap)")));
    }

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = preamble_lines + r + 2;
        let field =
            |c: usize| -> Result<&str> { rec.get(c).ok_or_else(|| parse_err(line, format!("missing field {c}"))) };
        let num = |c: usize| -> Result<f64> {
            let s = field(c)?;
            s.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("bad number `{s}`")))
        };
        for &c in &x_cols {
            data.push(num(c)?);
        }
        y.push(num(y_col)?);
        if let Some(c) = label_col {
            let s = field(c)?;
            labels.push(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(line, format!("bad label `{s}`")))?,
            );
        }
    }
    let n = y.len();
    let ds = Dataset::new(Matrix::from_row_major(n, d, data)?, y)?;

    betas.sort_by_key(|b| b.0);
    if betas.iter().enumerate().any(|(i, b)| b.0 != i) {
        return Err(parse_err(1, "truth.beta_k keys must be 0..K without gaps"));
    }
    let coefficients = if betas.is_empty() {
        None
    } else {
        Some(CoefficientSet::new(betas.into_iter().map(|b| b.1).collect())?)
    };
    if label_col.is_none() {
        return Ok(ds);
    }
    ds.with_truth(Truth {
        labels,
        coefficients,
        noise_scale,
    })
}
