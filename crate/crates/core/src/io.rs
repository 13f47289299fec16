//! CSV input and output.
//!
//! A joint table is one row per sensitive symbol and one column per public
//! symbol. A header row of column labels and a leading column of row labels
//! are both optional and detected by whether the cells parse as numbers.
//! Lines starting with `#` are ignored.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::prob::{default_labels, Channel, JointDistribution};

/// Round-trip float formatting used in every CSV and report.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn is_number(field: &str) -> bool {
    field.parse::<f64>().is_ok()
}

fn with_line(err: Error, lines: &[u64]) -> Error {
    let row = match &err {
        Error::Ragged { row, .. } | Error::NonFinite { row, .. } | Error::NegativeEntry { row, .. } => {
            *row
        }
        _ => return err,
    };
    Error::AtLine {
        line: lines[row],
        source: Box::new(err),
    }
}

pub fn read_joint<R: Read>(reader: R) -> Result<JointDistribution> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::EmptyTable);
    }

    let header = {
        let first = &records[0].1;
        if first.iter().skip(1).any(|f| !is_number(f))
            || (first.len() == 1 && !is_number(&first[0]))
        {
            Some(records.remove(0).1)
        } else {
            None
        }
    };
    if records.is_empty() {
        return Err(Error::EmptyTable);
    }
    let labelled = !is_number(&records[0].1[0]);

    let mut lines = Vec::with_capacity(records.len());
    let mut row_labels = Vec::with_capacity(records.len());
    let mut table = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        let mut fields = rec.iter();
        if labelled {
            row_labels.push(fields.next().unwrap_or_default().to_string());
        }
        let row = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: *line,
                    message: format!("cannot parse `{f}` as a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        lines.push(*line);
        table.push(row);
    }
    if !labelled {
        row_labels = default_labels("s", table.len());
    }

    let nx = table[0].len();
    let col_labels = match header {
        Some(h) => {
            let labels: Vec<String> = h.iter().skip(usize::from(labelled)).map(str::to_string).collect();
            if labels.len() != nx {
                return Err(Error::Parse {
                    line: h.position().map_or(0, |p| p.line()),
                    message: format!("header has {} labels for {nx} columns", labels.len()),
                });
            }
            labels
        }
        None => default_labels("x", nx),
    };

    JointDistribution::with_labels(row_labels, col_labels, &table).map_err(|e| with_line(e, &lines))
}

pub fn read_joint_file(path: &Path) -> Result<JointDistribution> {
    read_joint(File::open(path)?)
}

/// Writes a joint table with a header row and a label column.
pub fn write_joint<W: Write>(j: &JointDistribution, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec![String::new()];
    header.extend(j.col_labels().iter().cloned());
    wtr.write_record(&header)?;
    for s in 0..j.n_rows() {
        let mut rec = vec![j.row_labels()[s].clone()];
        rec.extend(j.row(s).iter().map(|&v| fmt_f64(v)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `q(y|x)` with one row per input and one column per output.
pub fn write_channel<W: Write>(c: &Channel, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["x".to_string()];
    header.extend(c.outputs().iter().cloned());
    wtr.write_record(&header)?;
    for x in 0..c.n_inputs() {
        let mut rec = vec![c.inputs()[x].clone()];
        rec.extend(c.row(x).iter().map(|&v| fmt_f64(v)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
