use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Result, SfaError};

/// Generation parameters carried along with a synthetic series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesMeta {
    pub q: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Scalar samples at unit spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub meta: Option<SeriesMeta>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, meta: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 17 significant digits; parses back to the same bits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> SfaError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SfaError::Io(io),
        kind => SfaError::Csv {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes `t,value` rows.
pub fn write_series_csv<W: Write>(series: &TimeSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value"]).map_err(csv_err)?;
    for (t, v) in series.values.iter().enumerate() {
        w.write_record([t.to_string(), format_f64(*v)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,value` file; `t` must count up from 0.
pub fn read_series_csv<R: Read>(input: R) -> Result<TimeSeries> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.len() < 2 || &headers[0] != "t" {
        return Err(SfaError::Csv {
            line: 1,
            message: "expected header `t,value`".into(),
        });
    }
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let t: usize = rec[0].trim().parse().map_err(|_| SfaError::Csv {
            line,
            message: format!("bad time index {:?}", &rec[0]),
        })?;
        if t != i {
            return Err(SfaError::Csv {
                line,
                message: format!("time index {t} out of sequence (expected {i})"),
            });
        }
        let v: f64 = rec[1].trim().parse().map_err(|_| SfaError::Csv {
            line,
            message: format!("bad value {:?}", &rec[1]),
        })?;
        if !v.is_finite() {
            return Err(SfaError::Csv {
                line,
                message: "non-finite value".into(),
            });
        }
        values.push(v);
    }
    Ok(TimeSeries::new(values))
}

pub fn save_series(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    write_series_csv(series, File::create(path)?)
}

pub fn load_series(path: impl AsRef<Path>) -> Result<TimeSeries> {
    read_series_csv(File::open(path)?)
}

/// Writes `t,<names…>` with one row per entry of `times`.
pub fn write_columns_csv<W: Write>(
    out: W,
    names: &[String],
    times: &[usize],
    columns: &DMatrix<f64>,
) -> Result<()> {
    if columns.nrows() != times.len() || columns.ncols() != names.len() {
        return Err(SfaError::DimensionMismatch {
            expected: times.len() * names.len(),
            got: columns.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (row, t) in times.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(columns.row(row).iter().map(|&v| format_f64(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let s = TimeSeries::new(vec![0.1, 1.0 / 3.0, 9.0 / 14.0, 1e-300]);
        let mut buf = Vec::new();
        write_series_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,value\n0,1.0000000000000001e-1\n"));
        let back = read_series_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values, s.values);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_series_csv("x,value\n0,1\n".as_bytes()).is_err());
        assert!(read_series_csv("t,value\n0,abc\n".as_bytes()).is_err());
        assert!(read_series_csv("t,value\n1,0.5\n".as_bytes()).is_err());
        assert!(read_series_csv("t,value\n0,NaN\n".as_bytes()).is_err());
        let err = read_series_csv("t,value\n0,1\n1,oops\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn columns_layout() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let mut buf = Vec::new();
        write_columns_csv(&mut buf, &["y1".into(), "y2".into()], &[5, 6], &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,y1,y2");
        assert!(lines[2].starts_with("6,3.0000000000000000e0,"));
    }
}
