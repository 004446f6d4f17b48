//! Matrix Market coordinate files and convergence-history CSV.
//!
//! Only `matrix coordinate {real|integer} symmetric` is accepted. Files
//! store one triangle; the parser mirrors off-diagonal entries into the
//! full-pattern [`SymSparseMatrix`].

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SymSparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    /// Promoted to real on load.
    Integer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixMarketHeader {
    pub field: Field,
    pub rows: usize,
    pub cols: usize,
    /// Entry lines declared in the size line.
    pub entries: usize,
}

fn syntax(line: usize, reason: impl Into<String>) -> Error {
    Error::MatrixMarket {
        line,
        reason: reason.into(),
    }
}

fn parse_banner(line: &str) -> Result<Field> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(syntax(1, "missing %%MatrixMarket banner"));
    }
    if tokens.len() != 5 {
        return Err(syntax(1, "banner must have object, format, field and symmetry"));
    }
    if tokens[1] != "matrix" {
        return Err(syntax(1, format!("unsupported object '{}'", tokens[1])));
    }
    if tokens[2] != "coordinate" {
        return Err(syntax(1, format!("unsupported format '{}'", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" => Field::Real,
        "integer" => Field::Integer,
        other => return Err(syntax(1, format!("unsupported field '{other}'"))),
    };
    if tokens[4] != "symmetric" {
        return Err(syntax(1, format!("unsupported symmetry '{}'", tokens[4])));
    }
    Ok(field)
}

fn parse_index(token: Option<&str>, line: usize, n: usize) -> Result<usize> {
    let token = token.ok_or_else(|| syntax(line, "expected 'i j value'"))?;
    let i: usize = token
        .parse()
        .map_err(|_| syntax(line, format!("invalid index '{token}'")))?;
    if i == 0 || i > n {
        return Err(syntax(line, format!("index out of range: {i} not in [1, {n}]")));
    }
    Ok(i - 1)
}

/// Parses a symmetric coordinate file, returning its header and matrix.
pub fn parse_matrix_market_with_header<R: BufRead>(reader: R) -> Result<(MatrixMarketHeader, SymSparseMatrix)> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    let field = parse_banner(&banner?)?;

    let mut header = None;
    let mut entries = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let Some(header) = header.as_ref() else {
            let dims: Vec<usize> = text
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| syntax(lineno, format!("invalid size token '{t}'"))))
                .collect::<Result<_>>()?;
            if dims.len() != 3 {
                return Err(syntax(lineno, "size line must be 'rows cols entries'"));
            }
            if dims[0] != dims[1] {
                return Err(syntax(lineno, format!("matrix is not square: {} x {}", dims[0], dims[1])));
            }
            header = Some(MatrixMarketHeader {
                field,
                rows: dims[0],
                cols: dims[1],
                entries: dims[2],
            });
            entries.reserve(dims[2]);
            continue;
        };
        let n = header.rows;
        if entries.len() == header.entries {
            return Err(syntax(lineno, format!("more than the declared {} entries", header.entries)));
        }
        let mut tokens = text.split_whitespace();
        let i = parse_index(tokens.next(), lineno, n)?;
        let j = parse_index(tokens.next(), lineno, n)?;
        let token = tokens.next().ok_or_else(|| syntax(lineno, "missing value"))?;
        let v: f64 = match field {
            Field::Real => token.parse(),
            Field::Integer => token.parse::<i64>().map(|v| v as f64).or_else(|_| token.parse()),
        }
        .map_err(|_| syntax(lineno, format!("non-numeric value '{token}'")))?;
        if tokens.next().is_some() {
            return Err(syntax(lineno, "trailing tokens after value"));
        }
        entries.push((i, j, v));
    }

    let header = header.ok_or_else(|| syntax(1, "missing size line"))?;
    if entries.len() != header.entries {
        return Err(syntax(
            0,
            format!("declared {} entries, found {}", header.entries, entries.len()),
        ));
    }
    let matrix = SymSparseMatrix::from_triplets(header.rows, entries)?;
    Ok((header, matrix))
}

pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<SymSparseMatrix> {
    parse_matrix_market_with_header(reader).map(|(_, a)| a)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SymSparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    parse_matrix_market(BufReader::new(file))
}

/// Writes the lower triangle as a symmetric coordinate file.
pub fn write_matrix_market<W: Write>(a: &SymSparseMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.dim(), a.dim(), a.nnz_lower())?;
    for (i, j, v) in a.lower_triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Scientific notation with the fewest mantissa decimals, at least 10, that
/// parses back to the same `f64`.
fn format_residual(r: f64) -> String {
    for digits in 10..17 {
        let s = format!("{r:.digits$e}");
        if s.parse::<f64>().ok() == Some(r) {
            return s;
        }
    }
    format!("{r:.16e}")
}

/// Writes `iter,relres` rows. Residuals keep at least 11 significant digits
/// and re-parse exactly.
pub fn write_history_csv<W: Write>(history: &[(usize, f64)], mut w: W) -> Result<()> {
    if history.is_empty() {
        return Err(Error::InvalidParameter("history is empty".into()));
    }
    if history.windows(2).any(|p| p[0].0 >= p[1].0) {
        return Err(Error::InvalidParameter(
            "history iterations must be strictly increasing".into(),
        ));
    }
    writeln!(w, "iter,relres")?;
    for (it, r) in history {
        writeln!(w, "{it},{}", format_residual(*r))?;
    }
    Ok(())
}

pub fn read_history_csv<R: BufRead>(reader: R) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if k == 0 {
            if line != "iter,relres" {
                return Err(syntax(1, "expected header 'iter,relres'"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (it, r) = line.split_once(',').ok_or_else(|| syntax(k + 1, "expected 'iter,relres'"))?;
        let it = it.parse().map_err(|_| syntax(k + 1, format!("invalid iteration '{it}'")))?;
        let r = r.parse().map_err(|_| syntax(k + 1, format!("invalid residual '{r}'")))?;
        out.push((it, r));
    }
    Ok(out)
}
