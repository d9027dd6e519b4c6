//! Numeric table ingestion and plot-ready exports.
//!
//! Inputs are CSV or TSV tables with `.` decimals, LF or CRLF line endings,
//! an optional header row (detected when the first row does not parse as
//! numbers) and `#` comment lines. Outputs write every number with 17
//! significant digits so that reading them back is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::dataset::{DistanceMatrix, PointSet};
use crate::error::{Error, Result};
use crate::estimator::CdfPoint;
use crate::scan::ScanCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Csv,
    Tsv,
}

impl TableFormat {
    pub fn delimiter(self) -> u8 {
        match self {
            TableFormat::Csv => b',',
            TableFormat::Tsv => b'\t',
        }
    }

    /// Guesses from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("tsv") || e.eq_ignore_ascii_case("tab") => {
                TableFormat::Tsv
            }
            _ => TableFormat::Csv,
        }
    }
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" | "csv-square" => Ok(TableFormat::Csv),
            "tsv" | "tsv-square" => Ok(TableFormat::Tsv),
            _ => Err(format!("unknown table format `{s}` (expected csv or tsv)")),
        }
    }
}

/// Formats a number with 17 significant digits; non-finite values are written
/// as `inf`, `-inf` or `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a rectangular numeric table. `path` is only used in error messages.
pub fn read_table<R: Read>(reader: R, format: TableFormat, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let parsed: Vec<std::result::Result<f64, _>> =
            record.iter().map(str::parse::<f64>).collect();
        if first {
            first = false;
            if parsed.iter().any(|r| r.is_err()) {
                // header row
                width = Some(record.len());
                continue;
            }
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(
                line,
                record.len().min(expected) + 1,
                format!("row has {} fields, expected {expected}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, (value, field)) in parsed.into_iter().zip(record.iter()).enumerate() {
            row.push(
                value
                    .map_err(|_| parse_err(line, col + 1, format!("`{field}` is not a number")))?,
            );
        }
        rows.push(row);
    }
    Ok(rows)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

/// Loads one point per row.
pub fn load_points(path: &Path, format: TableFormat) -> Result<PointSet> {
    parse_points(open(path)?, format, path)
}

pub fn parse_points<R: Read>(reader: R, format: TableFormat, path: &Path) -> Result<PointSet> {
    let rows = read_table(reader, format, path)?;
    PointSet::from_rows(&rows)
}

/// Loads a dense square distance matrix.
pub fn load_distance_matrix(path: &Path, format: TableFormat) -> Result<DistanceMatrix> {
    let rows = read_table(open(path)?, format, path)?;
    DistanceMatrix::from_rows(&rows)
}

pub fn write_points<W: Write>(mut w: W, ps: &PointSet, format: TableFormat) -> std::io::Result<()> {
    let sep = format.delimiter() as char;
    for row in ps.rows() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(&sep.to_string()))?;
    }
    w.flush()
}

pub fn save_points(path: &Path, ps: &PointSet, format: TableFormat) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_points(BufWriter::new(file), ps, format).map_err(io_err(path))
}

/// The fit plot: every CDF point, whether it entered the fit, and the slope.
#[derive(Debug, Clone, PartialEq)]
pub struct FitExport {
    pub points: Vec<CdfPoint>,
    pub kept: Vec<bool>,
    pub d_hat: f64,
}

impl FitExport {
    /// Kept flags for the first `n_used` points of a sorted CDF.
    pub fn from_estimate(points: Vec<CdfPoint>, n_used: usize, d_hat: f64) -> Self {
        let kept = (0..points.len())
            .map(|i| i < n_used && points[i].is_fittable())
            .collect();
        Self {
            points,
            kept,
            d_hat,
        }
    }
}

/// TSV with columns `x`, `y`, `kept` (0/1). The single header line also
/// carries the fitted slope as `d_hat=<value>`. Infinite `y` is written `inf`.
pub fn write_fit<W: Write>(mut w: W, fit: &FitExport) -> std::io::Result<()> {
    writeln!(w, "# x\ty\tkept\td_hat={}", fmt_f64(fit.d_hat))?;
    for (p, &k) in fit.points.iter().zip(&fit.kept) {
        writeln!(w, "{}\t{}\t{}", fmt_f64(p.x), fmt_f64(p.y), u8::from(k))?;
    }
    w.flush()
}

pub fn export_fit(path: &Path, fit: &FitExport) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_fit(BufWriter::new(file), fit).map_err(io_err(path))
}

/// Reads back a file written by [`export_fit`].
pub fn read_fit(path: &Path) -> Result<FitExport> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column: 0,
        message,
    };
    let mut lines = open(path)?.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(io_err(path))?
        .unwrap_or_default();
    let d_hat = header
        .split('\t')
        .find_map(|f| f.strip_prefix("d_hat="))
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| parse_err(1, "missing d_hat in header".into()))?;
    let mut fit = FitExport {
        points: Vec::new(),
        kept: Vec::new(),
        d_hat,
    };
    for (k, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        let lineno = k as u64 + 2;
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        let [x, y, kept] = fields[..] else {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("`{s}` is not a number")))
        };
        fit.points.push(CdfPoint {
            x: num(x)?,
            y: num(y)?,
        });
        fit.kept.push(kept == "1");
    }
    Ok(fit)
}

/// TSV with columns `block_size`, `d_mean`, `d_std`, `n_blocks`.
pub fn write_scan<W: Write>(mut w: W, curve: &ScanCurve) -> std::io::Result<()> {
    writeln!(w, "# block_size\td_mean\td_std\tn_blocks")?;
    for p in &curve.points {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            p.block_size,
            fmt_f64(p.d_mean),
            fmt_f64(p.d_std),
            p.n_blocks
        )?;
    }
    w.flush()
}

pub fn save_scan(path: &Path, curve: &ScanCurve) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_scan(BufWriter::new(file), curve).map_err(io_err(path))
}
