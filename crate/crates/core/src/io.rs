//! Matrix file formats.
//!
//! Dense: CSV (one row per line) and the `NYSD` raw binary (magic, u64 rows,
//! u64 cols, f64 entries column-major, all little-endian). Sparse: Matrix
//! Market coordinate symmetric.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseSymmetric;
use crate::symmetric::SymmetricMatrix;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const DENSE_MAGIC: &[u8; 4] = b"NYSD";

pub fn write_dense_csv<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                write!(w, ",")?;
            }
            write!(w, "{}", m.get(i, j).as_f64())?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_dense_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row = parse_numeric_row::<T>(trimmed, lineno + 1)?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::data(
                    Some(lineno + 1),
                    format!("expected {} fields, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data(None, "CSV file holds no rows"));
    }
    let r = rows.len();
    let c = rows[0].len();
    let mut m = DenseMatrix::zeros(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m.validate_finite()?;
    Ok(m)
}

pub(crate) fn parse_numeric_row<T: Scalar>(line: &str, lineno: usize) -> Result<Vec<T>> {
    line.split(',')
        .map(|field| {
            let field = field.trim();
            field
                .parse::<f64>()
                .map_err(|_| Error::data(Some(lineno), format!("non-numeric cell '{field}'")))
                .map(T::from_f64_c)
        })
        .collect()
}

pub fn write_dense_binary<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(DENSE_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for j in 0..m.cols() {
        for &v in m.column(j) {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dense_binary<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DENSE_MAGIC {
        return Err(Error::data(None, "bad magic: not a NYSD dense matrix file"));
    }
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::data(None, "dense matrix dimensions must be positive"));
    }
    let mut m = DenseMatrix::zeros(rows, cols);
    let mut buf = [0u8; 8];
    for j in 0..cols {
        for i in 0..rows {
            r.read_exact(&mut buf)?;
            m.set(i, j, T::from_f64_c(f64::from_le_bytes(buf)));
        }
    }
    m.validate_finite()?;
    Ok(m)
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn write_symmetric_binary<T: Scalar>(
    path: impl AsRef<Path>,
    m: &SymmetricMatrix<T>,
) -> Result<()> {
    write_dense_binary(path, &m.to_dense())
}

pub fn read_symmetric_binary<T: Scalar>(path: impl AsRef<Path>) -> Result<SymmetricMatrix<T>> {
    let d = read_dense_binary(path)?;
    SymmetricMatrix::from_dense_lower(&d)
}

/// Writes the lower triangle in Matrix Market coordinate symmetric format.
pub fn write_matrix_market<T: Scalar>(
    path: impl AsRef<Path>,
    m: &SparseSymmetric<T>,
) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", m.order(), m.order(), m.nnz())?;
    for t in m.triplets() {
        writeln!(w, "{} {} {}", t.row + 1, t.col + 1, t.value.as_f64())?;
    }
    Ok(())
}

pub fn read_matrix_market<T: Scalar>(path: impl AsRef<Path>) -> Result<SparseSymmetric<T>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let header = loop {
        match lines.next() {
            Some((n, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break (n + 1, line);
                }
            }
            None => return Err(Error::data(None, "empty Matrix Market file")),
        }
    };
    let tokens: Vec<String> = header.1.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() < 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || tokens[3] != "real"
        || tokens[4] != "symmetric"
    {
        return Err(Error::data(
            Some(header.0),
            "expected header '%%MatrixMarket matrix coordinate real symmetric'",
        ));
    }

    let mut dims: Option<(usize, usize)> = None;
    let mut expected_nnz = 0usize;
    let mut triplets: Vec<(usize, usize, T)> = Vec::new();
    for (n, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(Error::data(Some(n + 1), "size line needs 'rows cols nnz'"));
                }
                let rows: usize = parse_field(fields[0], n + 1)?;
                let cols: usize = parse_field(fields[1], n + 1)?;
                expected_nnz = parse_field(fields[2], n + 1)?;
                if rows != cols {
                    return Err(Error::data(
                        Some(n + 1),
                        format!("symmetric matrix must be square, got {rows}x{cols}"),
                    ));
                }
                dims = Some((rows, cols));
                triplets.reserve(expected_nnz);
            }
            Some((rows, _)) => {
                if fields.len() != 3 {
                    return Err(Error::data(Some(n + 1), "entry line needs 'i j value'"));
                }
                let i: usize = parse_field(fields[0], n + 1)?;
                let j: usize = parse_field(fields[1], n + 1)?;
                let v: f64 = fields[2].parse().map_err(|_| {
                    Error::data(Some(n + 1), format!("non-numeric value '{}'", fields[2]))
                })?;
                if i == 0 || j == 0 || i > rows || j > rows {
                    return Err(Error::data(
                        Some(n + 1),
                        format!("entry ({i}, {j}) out of 1-based range for order {rows}"),
                    ));
                }
                triplets.push((i - 1, j - 1, T::from_f64_c(v)));
            }
        }
    }
    let (order, _) = dims.ok_or_else(|| Error::data(None, "missing size line"))?;
    if triplets.len() != expected_nnz {
        return Err(Error::data(
            None,
            format!("size line declared {expected_nnz} entries, found {}", triplets.len()),
        ));
    }
    SparseSymmetric::from_triplets(order, triplets)
}

fn parse_field<F: std::str::FromStr>(s: &str, lineno: usize) -> Result<F> {
    s.parse::<F>()
        .map_err(|_| Error::data(Some(lineno), format!("cannot parse '{s}'")))
}
