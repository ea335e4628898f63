//! Matrix Market exchange format (`coordinate` and `array`, real/integer,
//! general/symmetric). Sparse files are densified on read.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::{DenseMatrix, MatrixError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketLayout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    layout: MarketLayout,
    symmetry: Symmetry,
}

pub fn mm_read(path: impl AsRef<Path>) -> Result<DenseMatrix, MatrixError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| MatrixError::Io { path: path.display().to_string(), source })?;
    mm_parse(&text)
}

/// Reads a dense vector stored as an `n x 1` Matrix Market file (the usual
/// layout of shipped right-hand sides).
pub fn mm_read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>, MatrixError> {
    let m = mm_read(path)?;
    if m.ncols() != 1 {
        return Err(MatrixError::Structural(format!("expected a single column, found {}x{}", m.nrows(), m.ncols())));
    }
    Ok(m.as_col_major().to_vec())
}

pub fn mm_parse(text: &str) -> Result<DenseMatrix, MatrixError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (line_no, banner) = lines.next().ok_or_else(|| MatrixError::Parse { line: 1, msg: "empty file".into() })?;
    let header = parse_banner(line_no, banner)?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_line, size_text) =
        body.next().ok_or_else(|| MatrixError::Parse { line: line_no + 1, msg: "missing size line".into() })?;
    let sizes = parse_usizes(size_line, size_text)?;

    let (rows, cols, mut m) = match header.layout {
        MarketLayout::Coordinate => {
            let [rows, cols, nnz] = sizes[..] else {
                return Err(MatrixError::Parse {
                    line: size_line,
                    msg: "coordinate size line needs rows, cols, entries".into(),
                });
            };
            let mut m = DMatrix::<f64>::zeros(rows, cols);
            let mut seen = 0usize;
            for (ln, l) in body.by_ref() {
                let mut it = l.split_whitespace();
                let (Some(i), Some(j), Some(v)) = (it.next(), it.next(), it.next()) else {
                    return Err(MatrixError::Parse { line: ln, msg: "expected `row col value`".into() });
                };
                let i = parse_index(ln, i)?;
                let j = parse_index(ln, j)?;
                let v = parse_value(ln, v)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(MatrixError::Structural(format!(
                        "line {ln}: index ({i}, {j}) outside declared {rows}x{cols}"
                    )));
                }
                if header.symmetry == Symmetry::Symmetric && j > i {
                    return Err(MatrixError::Structural(format!(
                        "line {ln}: symmetric storage expects the lower triangle, found ({i}, {j})"
                    )));
                }
                m[(i - 1, j - 1)] += v;
                seen += 1;
            }
            if seen != nnz {
                return Err(MatrixError::Structural(format!("declared {nnz} entries, found {seen}")));
            }
            (rows, cols, m)
        }
        MarketLayout::Array => {
            let [rows, cols] = sizes[..] else {
                return Err(MatrixError::Parse { line: size_line, msg: "array size line needs rows, cols".into() });
            };
            if header.symmetry == Symmetry::Symmetric && rows != cols {
                return Err(MatrixError::Structural("symmetric array must be square".into()));
            }
            let positions: Vec<(usize, usize)> = match header.symmetry {
                Symmetry::General => (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).collect(),
                Symmetry::Symmetric => (0..cols).flat_map(|j| (j..rows).map(move |i| (i, j))).collect(),
            };
            let mut m = DMatrix::<f64>::zeros(rows, cols);
            let mut pos = positions.iter();
            for (ln, l) in body.by_ref() {
                for tok in l.split_whitespace() {
                    let v = parse_value(ln, tok)?;
                    let &(i, j) = pos
                        .next()
                        .ok_or_else(|| MatrixError::Structural(format!("line {ln}: more values than {rows}x{cols}")))?;
                    m[(i, j)] = v;
                }
            }
            if pos.next().is_some() {
                return Err(MatrixError::Structural(format!("fewer values than {rows}x{cols}")));
            }
            (rows, cols, m)
        }
    };

    if header.symmetry == Symmetry::Symmetric {
        if rows != cols {
            return Err(MatrixError::Structural("symmetric matrix must be square".into()));
        }
        for j in 0..cols {
            for i in (j + 1)..rows {
                m[(j, i)] = m[(i, j)];
            }
        }
    }
    DenseMatrix::from_nalgebra(m)
}

fn parse_banner(line: usize, banner: &str) -> Result<Header, MatrixError> {
    let toks: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(MatrixError::Parse {
            line,
            msg: "expected `%%MatrixMarket matrix <layout> <field> <symmetry>`".into(),
        });
    }
    let layout = match toks[2].as_str() {
        "coordinate" => MarketLayout::Coordinate,
        "array" => MarketLayout::Array,
        other => return Err(MatrixError::Parse { line, msg: format!("unknown layout `{other}`") }),
    };
    match toks[3].as_str() {
        "real" | "integer" | "double" => {}
        "complex" | "pattern" => return Err(MatrixError::Unsupported(format!("field `{}`", toks[3]))),
        other => return Err(MatrixError::Parse { line, msg: format!("unknown field `{other}`") }),
    }
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" | "hermitian" => return Err(MatrixError::Unsupported(format!("symmetry `{}`", toks[4]))),
        other => return Err(MatrixError::Parse { line, msg: format!("unknown symmetry `{other}`") }),
    };
    Ok(Header { layout, symmetry })
}

fn parse_usizes(line: usize, text: &str) -> Result<Vec<usize>, MatrixError> {
    text.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| MatrixError::Parse { line, msg: format!("bad size `{t}`") }))
        .collect()
}

fn parse_index(line: usize, tok: &str) -> Result<usize, MatrixError> {
    tok.parse::<usize>().map_err(|_| MatrixError::Parse { line, msg: format!("bad index `{tok}`") })
}

fn parse_value(line: usize, tok: &str) -> Result<f64, MatrixError> {
    let v = tok.parse::<f64>().map_err(|_| MatrixError::Parse { line, msg: format!("bad value `{tok}`") })?;
    if !v.is_finite() {
        return Err(MatrixError::Parse { line, msg: format!("non-finite value `{tok}`") });
    }
    Ok(v)
}

/// Serializes `a` in the given layout. Values use Rust's shortest
/// round-trip formatting, so reading the output back is bit-exact.
pub fn mm_format(a: &DenseMatrix, layout: MarketLayout) -> String {
    let (m, n) = (a.nrows(), a.ncols());
    let mut out = String::new();
    match layout {
        MarketLayout::Array => {
            out.push_str("%%MatrixMarket matrix array real general\n");
            let _ = writeln!(out, "{m} {n}");
            for &v in a.as_col_major() {
                let _ = writeln!(out, "{v:e}");
            }
        }
        MarketLayout::Coordinate => {
            out.push_str("%%MatrixMarket matrix coordinate real general\n");
            let nnz = a.as_col_major().iter().filter(|v| **v != 0.0).count();
            let _ = writeln!(out, "{m} {n} {nnz}");
            for j in 0..n {
                for i in 0..m {
                    let v = a.get(i, j);
                    if v != 0.0 {
                        let _ = writeln!(out, "{} {} {v:e}", i + 1, j + 1);
                    }
                }
            }
        }
    }
    out
}

pub fn mm_write(path: impl AsRef<Path>, a: &DenseMatrix, layout: MarketLayout) -> Result<(), MatrixError> {
    let path = path.as_ref();
    fs::write(path, mm_format(a, layout)).map_err(|source| MatrixError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_identity() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n";
        assert_eq!(mm_parse(text).unwrap(), DenseMatrix::identity(3));
    }

    #[test]
    fn array_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n";
        let a = mm_parse(text).unwrap();
        let expected = DenseMatrix::from_row_major(2, 2, vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(a, expected);
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate integer symmetric\n2 2 3\n1 1 4\n2 1 -1\n2 2 5\n";
        let a = mm_parse(text).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.symmetry_defect(), 0.0);

        let arr = "%%MatrixMarket matrix array real symmetric\n2 2\n4\n-1\n5\n";
        assert_eq!(mm_parse(arr).unwrap(), a);
    }

    #[test]
    fn malformed_header_reports_line() {
        let err = mm_parse("%%MatrixMarket matrix coordinate real\n1 1 1\n1 1 1\n").unwrap_err();
        assert!(matches!(err, MatrixError::Parse { line: 1, .. }), "{err:?}");
        let err = mm_parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 3\n").unwrap_err();
        assert!(matches!(err, MatrixError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn out_of_bounds_index_is_structural() {
        let err = mm_parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").unwrap_err();
        assert!(matches!(err, MatrixError::Structural(_)), "{err:?}");
    }

    #[test]
    fn complex_and_pattern_are_unsupported() {
        for field in ["complex", "pattern"] {
            let text = format!("%%MatrixMarket matrix coordinate {field} general\n1 1 1\n1 1\n");
            assert!(matches!(mm_parse(&text).unwrap_err(), MatrixError::Unsupported(_)));
        }
    }

    #[test]
    fn entry_count_mismatch() {
        let err = mm_parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n").unwrap_err();
        assert!(matches!(err, MatrixError::Structural(_)));
    }

    #[test]
    fn coordinate_write_read() {
        let a = DenseMatrix::from_row_major(2, 3, vec![0., 1.5, 0., -2.25e-7, 0., 3.]).unwrap();
        let back = mm_parse(&mm_format(&a, MarketLayout::Coordinate)).unwrap();
        assert_eq!(back, a);
    }
}
