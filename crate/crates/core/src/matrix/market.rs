//! Matrix Market exchange-format reader and writer.
//!
//! Two variants are supported, both `real general`:
//!
//! * `coordinate` — header, optional `%` comments, a `rows cols nnz` size
//!   line, then one `i j value` entry per line with 1-based indices;
//! * `array` — header, comments, a `rows cols` size line, then every value
//!   one per line in column-major order.
//!
//! Reading a coordinate file yields sparse storage and an array file dense
//! storage; writing picks the variant matching the matrix's storage. Values
//! are written with 17 significant digits so a write/read round trip
//! reproduces every `f64` bit-for-bit. All parse errors carry the 1-based
//! line number of the offending line.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::BlockMatrix;

/// Read a Matrix Market file from disk.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<BlockMatrix> {
    read_matrix_market_str(&fs::read_to_string(path)?)
}

/// Write `m` to disk, as `coordinate` for sparse storage or `array` for dense.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &BlockMatrix) -> Result<()> {
    fs::write(path, write_matrix_market_str(m))?;
    Ok(())
}

/// Parse Matrix Market text.
pub fn read_matrix_market_str(text: &str) -> Result<BlockMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file; expected a %%MatrixMarket header"))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(line_no, "expected '%%MatrixMarket matrix <format> real general'"));
    }
    if fields[3] != "real" || fields[4] != "general" {
        return Err(parse_err(
            line_no,
            format!("unsupported qualifier '{} {}'; only 'real general' is handled", fields[3], fields[4]),
        ));
    }
    let coordinate = match fields[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => {
            return Err(parse_err(
                line_no,
                format!("unsupported format '{other}'; expected 'coordinate' or 'array'"),
            ))
        }
    };

    let mut data = lines.filter(|(_, l)| !l.starts_with('%'));
    let (size_line_no, size_line) = data
        .next()
        .ok_or_else(|| parse_err(line_no, "missing size line"))?;
    let sizes: Vec<&str> = size_line.split_whitespace().collect();

    if coordinate {
        let [rows, cols, nnz] = parse_fields::<3>(size_line_no, &sizes, "rows cols nnz")?;
        let mut triples = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (ln, entry) = data
                .next()
                .ok_or_else(|| parse_err(size_line_no, format!("file ends before all {nnz} entries were read")))?;
            let fields: Vec<&str> = entry.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(ln, format!("expected 'i j value', got '{entry}'")));
            }
            let i = parse_index(ln, fields[0], rows, "row")?;
            let j = parse_index(ln, fields[1], cols, "column")?;
            let v = parse_real(ln, fields[2])?;
            triples.push((i - 1, j - 1, v));
        }
        if let Some((ln, extra)) = data.next() {
            return Err(parse_err(ln, format!("unexpected trailing content '{extra}'")));
        }
        BlockMatrix::from_triples(rows, cols, triples)
    } else {
        let [rows, cols] = parse_fields::<2>(size_line_no, &sizes, "rows cols")?;
        let mut values = vec![0.0; rows * cols];
        // Array files list values down each column in turn.
        for idx in 0..rows * cols {
            let (ln, entry) = data
                .next()
                .ok_or_else(|| parse_err(size_line_no, format!("file ends before all {} values were read", rows * cols)))?;
            let v = parse_real(ln, entry)?;
            let (r, c) = (idx % rows, idx / rows);
            values[r * cols + c] = v;
        }
        if let Some((ln, extra)) = data.next() {
            return Err(parse_err(ln, format!("unexpected trailing content '{extra}'")));
        }
        BlockMatrix::from_dense(rows, cols, values)
    }
}

/// Serialize to Matrix Market text.
pub fn write_matrix_market_str(m: &BlockMatrix) -> String {
    let mut out = String::new();
    if m.is_sparse() {
        out.push_str("%%MatrixMarket matrix coordinate real general\n");
        out.push_str(&format!("{} {} {}\n", m.rows(), m.cols(), m.nnz()));
        for (r, c, v) in m.iter_nonzero() {
            out.push_str(&format!("{} {} {}\n", r + 1, c + 1, fmt_real(v)));
        }
    } else {
        out.push_str("%%MatrixMarket matrix array real general\n");
        out.push_str(&format!("{} {}\n", m.rows(), m.cols()));
        for c in 0..m.cols() {
            for r in 0..m.rows() {
                out.push_str(&fmt_real(m.get(r, c)));
                out.push('\n');
            }
        }
    }
    out
}

/// 17 significant digits: enough to round-trip any f64 exactly.
fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_fields<const N: usize>(line: usize, fields: &[&str], expected: &str) -> Result<[usize; N]> {
    if fields.len() != N {
        return Err(parse_err(line, format!("expected '{expected}', got {} fields", fields.len())));
    }
    let mut out = [0usize; N];
    for (slot, field) in out.iter_mut().zip(fields) {
        *slot = field
            .parse()
            .map_err(|_| parse_err(line, format!("'{field}' is not a non-negative integer")))?;
    }
    Ok(out)
}

fn parse_index(line: usize, field: &str, limit: usize, what: &str) -> Result<usize> {
    let idx: usize = field
        .parse()
        .map_err(|_| parse_err(line, format!("'{field}' is not a valid {what} index")))?;
    if idx == 0 || idx > limit {
        return Err(parse_err(
            line,
            format!("{what} index {idx} outside 1..={limit}"),
        ));
    }
    Ok(idx)
}

fn parse_real(line: usize, field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("'{field}' is not a real number")))
}
