//! Matrix ingestion: MatrixMarket coordinate files and a raw dense format
//! (`d` on the first line, then `d·d` row-major values).

use std::path::{Path, PathBuf};

use tracebounds::{Matrix, SymMatrix};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMatrix {
    pub matrix: SymMatrix,
    /// `max |m_ij - m_ji|` before symmetrization.
    pub asymmetry: f64,
    pub format: MatrixFormat,
}

pub fn parse_matrix_file(path: &Path) -> Result<ParsedMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix_str(&text, path)
}

pub fn parse_matrix_str(text: &str, path: &Path) -> Result<ParsedMatrix, CliError> {
    let err = |line: usize, message: String| CliError::Parse { path: PathBuf::from(path), line, message };
    let first = text.lines().next().unwrap_or("");
    let (dense, format) = if first.trim_start().starts_with("%%MatrixMarket") {
        (parse_matrix_market(text, &err)?, MatrixFormat::MatrixMarket)
    } else {
        (parse_raw(text, &err)?, MatrixFormat::Raw)
    };
    let (matrix, asymmetry) = SymMatrix::symmetrized(&dense).map_err(|e| err(0, e.to_string()))?;
    Ok(ParsedMatrix { matrix, asymmetry, format })
}

fn parse_value(token: &str, line: usize, err: &impl Fn(usize, String) -> CliError) -> Result<f64, CliError> {
    let v: f64 = token.parse().map_err(|_| err(line, format!("invalid number `{token}`")))?;
    if !v.is_finite() {
        return Err(err(line, format!("non-finite value `{token}`")));
    }
    Ok(v)
}

fn parse_raw(text: &str, err: &impl Fn(usize, String) -> CliError) -> Result<Matrix, CliError> {
    let mut tokens = text.lines().enumerate().flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
    let (line, tok) = tokens.next().ok_or_else(|| err(1, "empty file".into()))?;
    let d: usize = tok.parse().map_err(|_| err(line, format!("expected the dimension, found `{tok}`")))?;
    if d == 0 {
        return Err(err(line, "dimension must be positive".into()));
    }
    let mut data = Vec::with_capacity(d * d);
    let mut last_line = line;
    for (line, tok) in tokens {
        if data.len() == d * d {
            return Err(err(line, format!("extra value `{tok}` after {} entries", d * d)));
        }
        data.push(parse_value(tok, line, err)?);
        last_line = line;
    }
    if data.len() != d * d {
        return Err(err(last_line, format!("expected {} values for a {d}x{d} matrix, found {}", d * d, data.len())));
    }
    Matrix::from_row_major(d, d, data).map_err(|e| err(last_line, e.to_string()))
}

fn parse_matrix_market(text: &str, err: &impl Fn(usize, String) -> CliError) -> Result<Matrix, CliError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().expect("caller checked the header");
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(err(1, "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`".into()));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(err(1, format!("unsupported field `{}`", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (size_line, size) = body.next().ok_or_else(|| err(1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(size_line, format!("invalid size entry `{t}`"))))
        .collect::<Result<_, _>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(err(size_line, "size line must be `rows cols entries`".into()));
    };
    if rows != cols {
        return Err(err(size_line, format!("matrix is not square ({rows}x{cols})")));
    }
    if rows == 0 {
        return Err(err(size_line, "dimension must be positive".into()));
    }

    let mut m = Matrix::zeros(rows, rows);
    let mut count = 0;
    let mut last_line = size_line;
    for (line, l) in body {
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(err(line, "entry must be `row col value`".into()));
        }
        let index = |t: &str| -> Result<usize, CliError> {
            match t.parse::<usize>() {
                Ok(i) if (1..=rows).contains(&i) => Ok(i - 1),
                _ => Err(err(line, format!("index `{t}` outside 1..={rows}"))),
            }
        };
        let (i, j) = (index(parts[0])?, index(parts[1])?);
        if symmetric && j > i {
            return Err(err(line, format!("entry ({}, {}) lies above the diagonal of a symmetric file", i + 1, j + 1)));
        }
        let v = parse_value(parts[2], line, err)?;
        m[(i, j)] = v;
        if symmetric {
            m[(j, i)] = v;
        }
        count += 1;
        last_line = line;
        if count > nnz {
            return Err(err(line, format!("more than the declared {nnz} entries")));
        }
    }
    if count != nnz {
        return Err(err(last_line, format!("declared {nnz} entries, found {count}")));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ParsedMatrix, CliError> {
        parse_matrix_str(text, Path::new("m.txt"))
    }

    #[test]
    fn raw_identity() {
        let p = parse("2\n1 0\n0 1").unwrap();
        assert_eq!(p.matrix, SymMatrix::identity(2));
        assert_eq!(p.format, MatrixFormat::Raw);
        assert_eq!(p.asymmetry, 0.0);
    }

    #[test]
    fn matrix_market_lower_triangle() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 2.0\n2 1 1.0\n2 2 3.0\n";
        let p = parse(text).unwrap();
        let expected = SymMatrix::new(Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap()).unwrap();
        assert_eq!(p.matrix, expected);
        assert_eq!(p.format, MatrixFormat::MatrixMarket);
    }

    #[test]
    fn truncated_raw_names_line() {
        match parse("2\n1 0\n0") {
            Err(CliError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 4 values"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn raw_asymmetry_is_averaged() {
        let p = parse("2\n1 2\n0 1").unwrap();
        assert_eq!(p.matrix.get(0, 1), 1.0);
        assert_eq!(p.asymmetry, 2.0);
    }

    #[test]
    fn malformed_inputs() {
        let cases = [
            ("%%MatrixMarket matrix array real symmetric\n2 2\n", 1),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1\n", 2),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1\n", 3),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n", 3),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n", 3),
            ("2\n1 x\n0 1", 2),
            ("2\n1 0\n0 1 5", 3),
            ("two\n", 1),
        ];
        for (text, expected) in cases {
            match parse(text) {
                Err(CliError::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
