//! Plain CSV for matrices and tables: no header, comma separated, every
//! value printed with enough digits to round-trip.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::{Mat, Real};

/// Scientific notation with `T::ROUND_TRIP_DIGITS` significant digits.
pub fn format_real<T: Real>(x: T) -> String {
    format!("{:.*e}", T::ROUND_TRIP_DIGITS - 1, x)
}

/// Same as [`format_real`] for an `f64` shown at `digits` significant digits.
pub fn format_digits(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.max(1) - 1, x)
}

pub fn write_matrix<T: Real, W: Write>(out: W, m: &Mat<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in 0..m.rows() {
        w.write_record(m.row(r).iter().map(|&x| format_real(x)))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<T: Real, R: Read>(input: R) -> Result<Mat<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        for field in rec.iter() {
            let x = field.parse::<T>().map_err(|_| Error::Csv {
                line,
                msg: format!("not a number: {field:?}"),
            })?;
            data.push(x);
        }
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(Error::Csv {
                    line,
                    msg: format!("expected {c} fields, found {}", rec.len()),
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }
    Mat::from_vec(rows, cols.unwrap_or(0), data)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::from(io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Csv {
            line,
            msg: format!("expected {expected_len} fields, found {len}"),
        },
        other => Error::Csv {
            line,
            msg: format!("{other:?}"),
        },
    }
}
