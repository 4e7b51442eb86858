//! Matrix Market text format, real `general`/`symmetric` matrices in either
//! `coordinate` or `array` layout. Sparse input is densified.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_banner(line: &str, lineno: usize) -> Result<(Layout, Symmetry)> {
    let fields: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(Error::parse(lineno, "missing %%MatrixMarket banner"));
    }
    if fields.len() != 5 {
        return Err(Error::parse(
            lineno,
            "banner must read: %%MatrixMarket matrix <coordinate|array> real <general|symmetric>",
        ));
    }
    if fields[1] != "matrix" {
        return Err(Error::parse(lineno, format!("unsupported object '{}'", fields[1])));
    }
    let layout = match fields[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(Error::parse(lineno, format!("unknown format '{other}'"))),
    };
    if fields[3] != "real" {
        return Err(Error::parse(
            lineno,
            format!("unsupported field '{}', only real matrices are read", fields[3]),
        ));
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::parse(lineno, format!("unsupported symmetry '{other}'"))),
    };
    Ok((layout, symmetry))
}

fn parse_count(tok: Option<&str>, what: &str, lineno: usize) -> Result<usize> {
    tok.ok_or_else(|| Error::parse(lineno, format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::parse(lineno, format!("cannot parse {what}")))
}

fn parse_value(tok: Option<&str>, lineno: usize) -> Result<f64> {
    let v: f64 = tok
        .ok_or_else(|| Error::parse(lineno, "missing value"))?
        .parse()
        .map_err(|_| Error::parse(lineno, "cannot parse value"))?;
    if !v.is_finite() {
        return Err(Error::parse(lineno, "non-finite value"));
    }
    Ok(v)
}

/// Parses a Matrix Market stream. Indices in the file are 1-based.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<DenseMatrix> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (lineno, banner) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(Error::parse(1, "empty file")),
    };
    let (layout, symmetry) = parse_banner(&banner, lineno)?;

    // Data lines: skip comments and blanks.
    let mut data = lines.filter_map(|(n, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        other => Some((n, other)),
    });

    let (size_line, size) = match data.next() {
        Some((n, l)) => (n, l?),
        None => return Err(Error::parse(lineno + 1, "missing size line")),
    };
    let mut toks = size.split_whitespace();
    let rows = parse_count(toks.next(), "row count", size_line)?;
    let cols = parse_count(toks.next(), "column count", size_line)?;
    let declared = match layout {
        Layout::Coordinate => Some(parse_count(toks.next(), "entry count", size_line)?),
        Layout::Array => None,
    };
    if toks.next().is_some() {
        return Err(Error::parse(size_line, "trailing tokens on size line"));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::parse(size_line, "matrix has an empty dimension"));
    }
    if symmetry == Symmetry::Symmetric && rows != cols {
        return Err(Error::parse(size_line, "symmetric matrix must be square"));
    }

    let mut a = DenseMatrix::zeros(rows, cols);
    let mut last_line = size_line;
    match layout {
        Layout::Coordinate => {
            let expected = declared.unwrap_or(0);
            let mut seen = 0;
            for (n, line) in data.by_ref() {
                let line = line?;
                last_line = n;
                if seen == expected {
                    return Err(Error::parse(n, format!("more than the declared {expected} entries")));
                }
                let mut t = line.split_whitespace();
                let i = parse_count(t.next(), "row index", n)?;
                let j = parse_count(t.next(), "column index", n)?;
                let v = parse_value(t.next(), n)?;
                if t.next().is_some() {
                    return Err(Error::parse(n, "trailing tokens after value"));
                }
                if i == 0 || i > rows || j == 0 || j > cols {
                    return Err(Error::parse(
                        n,
                        format!("index ({i}, {j}) outside a {rows}x{cols} matrix"),
                    ));
                }
                let (i, j) = (i - 1, j - 1);
                if symmetry == Symmetry::Symmetric && j > i {
                    return Err(Error::parse(n, "symmetric files list the lower triangle only"));
                }
                a[(i, j)] += v;
                if symmetry == Symmetry::Symmetric && i != j {
                    a[(j, i)] += v;
                }
                seen += 1;
            }
            if seen != expected {
                return Err(Error::parse(
                    last_line,
                    format!("expected {expected} entries, found {seen}"),
                ));
            }
        }
        Layout::Array => {
            // Column-major; symmetric files hold the lower triangle column by column.
            let positions: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).collect(),
                Symmetry::Symmetric => (0..cols).flat_map(|j| (j..rows).map(move |i| (i, j))).collect(),
            };
            let mut next = positions.iter();
            for (n, line) in data.by_ref() {
                let line = line?;
                last_line = n;
                for tok in line.split_whitespace() {
                    let &(i, j) = next
                        .next()
                        .ok_or_else(|| Error::parse(n, "more values than the matrix holds"))?;
                    let v = parse_value(Some(tok), n)?;
                    a[(i, j)] = v;
                    if symmetry == Symmetry::Symmetric {
                        a[(j, i)] = v;
                    }
                }
            }
            let missing = next.count();
            if missing > 0 {
                return Err(Error::parse(last_line, format!("{missing} values missing")));
            }
        }
    }
    Ok(a)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let file = File::open(path.as_ref())?;
    parse_matrix_market(BufReader::new(file))
}

/// Writes `a` in `array real general` layout with 17 significant digits,
/// which reads back bit-exactly.
pub fn write_matrix_market_array<W: Write>(a: &DenseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(out, "{:.16e}", a[(i, j)])?;
        }
    }
    Ok(())
}

pub fn save_matrix_market(a: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path.as_ref())?);
    write_matrix_market_array(a, &mut w)?;
    w.flush()?;
    Ok(())
}
