//! Matrix Market (v2) reader and writer.
//!
//! Reads `coordinate` and `array` matrices with `real`, `integer` or
//! `pattern` fields and `general`, `symmetric` or `skew-symmetric`
//! storage. Symmetric storage is expanded to the full matrix and duplicate
//! coordinates are summed. The writer always emits
//! `%%MatrixMarket matrix coordinate real general` with 1-based indices and
//! 17 significant digits, which round-trips every `f64` exactly.

use std::io::{BufRead, Write};

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<(Format, Field, Symmetry)> {
    let toks: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" {
        return Err(parse_err(line_no, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    if toks[1] != "matrix" {
        return Err(parse_err(line_no, format!("unsupported object '{}'", toks[1])));
    }
    let format = match toks[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        other => return Err(parse_err(line_no, format!("unsupported format '{other}'"))),
    };
    let field = match toks[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(line_no, format!("unsupported field '{other}'"))),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(line_no, format!("unsupported symmetry '{other}'"))),
    };
    if format == Format::Array && field == Field::Pattern {
        return Err(parse_err(line_no, "pattern field is not valid for array format"));
    }
    Ok((format, field, symmetry))
}

fn parse_usize(line_no: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line_no, format!("missing {what}")))?;
    tok.parse::<usize>()
        .map_err(|_| parse_err(line_no, format!("invalid {what} '{tok}'")))
}

fn parse_value(line_no: usize, tok: Option<&str>) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line_no, "missing value"))?;
    let v = tok
        .parse::<f64>()
        .map_err(|_| parse_err(line_no, format!("non-numeric value '{tok}'")))?;
    Ok(v)
}

/// Parses a Matrix Market stream into a canonical CSR matrix.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<CsrMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hdr_no, hdr) = match lines.next() {
        Some((no, l)) => (no, l?),
        None => return Err(parse_err(1, "empty input")),
    };
    let (format, field, symmetry) = parse_header(hdr_no, &hdr)?;

    // size line: first non-comment, non-blank line
    let mut size = None;
    for (no, l) in lines.by_ref() {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        size = Some((no, t.to_string()));
        break;
    }
    let (size_no, size_line) = size.ok_or_else(|| parse_err(hdr_no, "missing size line"))?;
    let mut toks = size_line.split_whitespace();
    let nrows = parse_usize(size_no, toks.next(), "row count")?;
    let ncols = parse_usize(size_no, toks.next(), "column count")?;
    let declared = match format {
        Format::Coordinate => parse_usize(size_no, toks.next(), "entry count")?,
        Format::Array => match symmetry {
            Symmetry::General => nrows * ncols,
            Symmetry::Symmetric => nrows * (nrows + 1) / 2,
            Symmetry::SkewSymmetric => nrows * nrows.saturating_sub(1) / 2,
        },
    };
    if toks.next().is_some() {
        return Err(parse_err(size_no, "trailing tokens on size line"));
    }
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(parse_err(size_no, "symmetric storage requires a square matrix"));
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(declared * 2);
    let mut seen = 0usize;
    let mut last_no = size_no;
    // array format walks columns top to bottom
    let (mut ai, mut aj) = (0usize, 0usize);
    if format == Format::Array && symmetry == Symmetry::SkewSymmetric {
        ai = 1;
    }
    for (no, l) in lines {
        let l = l?;
        last_no = no;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if seen == declared {
            return Err(parse_err(no, format!("more than the declared {declared} entries")));
        }
        let mut toks = t.split_whitespace();
        let (i, j, v) = match format {
            Format::Coordinate => {
                let i = parse_usize(no, toks.next(), "row index")?;
                let j = parse_usize(no, toks.next(), "column index")?;
                if i == 0 || i > nrows || j == 0 || j > ncols {
                    return Err(parse_err(
                        no,
                        format!("index ({i}, {j}) outside declared {nrows}x{ncols}"),
                    ));
                }
                let v = match field {
                    Field::Pattern => 1.0,
                    _ => parse_value(no, toks.next())?,
                };
                (i - 1, j - 1, v)
            }
            Format::Array => {
                let v = parse_value(no, toks.next())?;
                let pos = (ai, aj);
                ai += 1;
                if ai == nrows {
                    aj += 1;
                    ai = match symmetry {
                        Symmetry::General => 0,
                        Symmetry::Symmetric => aj,
                        Symmetry::SkewSymmetric => aj + 1,
                    };
                }
                (pos.0, pos.1, v)
            }
        };
        if toks.next().is_some() {
            return Err(parse_err(no, "trailing tokens on entry line"));
        }
        if field == Field::Integer && v.fract() != 0.0 {
            return Err(parse_err(no, "non-integer value in integer matrix"));
        }
        if symmetry != Symmetry::General && j > i && format == Format::Coordinate {
            return Err(parse_err(no, "upper-triangle entry in symmetric storage"));
        }
        triplets.push((i, j, v));
        match symmetry {
            Symmetry::General => {}
            Symmetry::Symmetric if i != j => triplets.push((j, i, v)),
            Symmetry::SkewSymmetric if i != j => triplets.push((j, i, -v)),
            Symmetry::SkewSymmetric => {
                return Err(parse_err(no, "diagonal entry in skew-symmetric storage"));
            }
            Symmetry::Symmetric => {}
        }
        seen += 1;
    }
    if seen != declared {
        return Err(parse_err(
            last_no,
            format!("expected {declared} entries, found {seen}"),
        ));
    }
    CsrMatrix::from_triplets(nrows, ncols, &triplets)
}

pub fn read_matrix_market_str(text: &str) -> Result<CsrMatrix> {
    read_matrix_market(text.as_bytes())
}

pub fn read_matrix_market_file(path: impl AsRef<std::path::Path>) -> Result<CsrMatrix> {
    let f = std::fs::File::open(path)?;
    read_matrix_market(std::io::BufReader::new(f))
}

/// Writes `a` as a general real coordinate matrix.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

pub fn write_matrix_market_string(a: &CsrMatrix) -> String {
    let mut buf = Vec::new();
    write_matrix_market(a, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_coordinate() {
        let a = read_matrix_market_str(
            "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1\n2 2 1\n",
        )
        .unwrap();
        assert_eq!(a.row_ptr(), &[0, 1, 2]);
        assert_eq!(a.col_idx(), &[0, 1]);
        assert_eq!(a.values(), &[1.0, 1.0]);
    }

    #[test]
    fn symmetric_expanded() {
        let a = read_matrix_market_str(
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 1\n2 2 2\n",
        )
        .unwrap();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.get(0, 1), Some(1.0));
        assert_eq!(a.get(1, 0), Some(1.0));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = read_matrix_market_str(
            "%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 0.5\n1 1 0.5\n",
        )
        .unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.values(), &[1.0]);
    }

    #[test]
    fn array_format_is_column_major() {
        let a = read_matrix_market_str("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(a.get(1, 0), Some(2.0));
        assert_eq!(a.get(0, 1), Some(3.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad_header = read_matrix_market_str("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1\n");
        assert!(matches!(bad_header, Err(Error::Parse { line: 1, .. })));

        let out_of_bounds =
            read_matrix_market_str("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
        assert!(matches!(out_of_bounds, Err(Error::Parse { line: 3, .. })));

        let non_numeric =
            read_matrix_market_str("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 abc\n");
        assert!(matches!(non_numeric, Err(Error::Parse { line: 4, .. })));

        let short = read_matrix_market_str("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
        assert!(matches!(short, Err(Error::Parse { .. })));
    }

    #[test]
    fn write_then_read_is_exact() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 0.1), (1, 2, -1.0 / 3.0), (2, 1, 1e-300), (2, 2, 0.0)],
        )
        .unwrap();
        let text = write_matrix_market_string(&a);
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general\n3 3 4\n1 1 "));
        assert_eq!(read_matrix_market_str(&text).unwrap(), a);
    }
}
