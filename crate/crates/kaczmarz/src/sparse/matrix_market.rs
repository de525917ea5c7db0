//! Matrix Market coordinate-format I/O.
//!
//! Accepts `real` or `integer` fields with `general` or `symmetric` symmetry.
//! Symmetric files are mirrored into full storage on load, duplicate
//! coordinates are summed, and indices are converted from the on-disk 1-based
//! convention. `pattern` and `complex` fields are rejected.

use std::io::{BufRead, Write};
use std::path::Path;

use super::SparseMatrix;
use crate::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_header(line: &str, lineno: usize) -> Result<(Field, Symmetry)> {
    let mut words = line.split_whitespace();
    if words.next() != Some("%%MatrixMarket") {
        return Err(parse_err(lineno, "header must start with %%MatrixMarket"));
    }
    if words.next() != Some("matrix") {
        return Err(parse_err(lineno, "only the \"matrix\" object is supported"));
    }
    if words.next() != Some("coordinate") {
        return Err(parse_err(
            lineno,
            "only the \"coordinate\" format is supported",
        ));
    }
    let field = match words.next() {
        Some("real") => Field::Real,
        Some("integer") => Field::Integer,
        Some("complex") => {
            return Err(parse_err(lineno, "complex field is not supported"))
        }
        Some("pattern") => {
            return Err(parse_err(lineno, "pattern field is not supported"))
        }
        other => {
            return Err(parse_err(
                lineno,
                format!("unknown field {:?}, expected real or integer", other),
            ))
        }
    };
    let symmetry = match words.next() {
        Some("general") => Symmetry::General,
        Some("symmetric") => Symmetry::Symmetric,
        other => {
            return Err(parse_err(
                lineno,
                format!(
                    "unknown symmetry {:?}, expected general or symmetric",
                    other
                ),
            ))
        }
    };
    Ok((field, symmetry))
}

/// Reads a Matrix Market coordinate stream into a [`SparseMatrix`].
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate();

    let (lineno, header) = match lines.next() {
        Some((n, line)) => (n + 1, line?),
        None => return Err(parse_err(1, "empty input")),
    };
    let (_field, symmetry) = parse_header(&header, lineno)?;

    // size line: first non-comment, non-blank line after the header
    let (mut nrows, mut ncols, mut nnz_declared, mut size_seen) = (0usize, 0usize, 0usize, false);
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut entries_seen = 0usize;

    for (n, line) in lines {
        let lineno = n + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let mut words = text.split_whitespace();
        if !size_seen {
            nrows = words
                .next()
                .ok_or_else(|| parse_err(lineno, "missing row count"))?
                .parse()
                .map_err(|_| parse_err(lineno, "cannot parse row count"))?;
            ncols = words
                .next()
                .ok_or_else(|| parse_err(lineno, "missing column count"))?
                .parse()
                .map_err(|_| parse_err(lineno, "cannot parse column count"))?;
            nnz_declared = words
                .next()
                .ok_or_else(|| parse_err(lineno, "missing entry count"))?
                .parse()
                .map_err(|_| parse_err(lineno, "cannot parse entry count"))?;
            if symmetry == Symmetry::Symmetric && nrows != ncols {
                return Err(parse_err(
                    lineno,
                    "symmetric matrices must be square",
                ));
            }
            size_seen = true;
            continue;
        }
        if entries_seen == nnz_declared {
            return Err(parse_err(
                lineno,
                format!("more than the declared {nnz_declared} entries"),
            ));
        }
        let i: usize = words
            .next()
            .ok_or_else(|| parse_err(lineno, "missing row index"))?
            .parse()
            .map_err(|_| parse_err(lineno, "cannot parse row index"))?;
        let j: usize = words
            .next()
            .ok_or_else(|| parse_err(lineno, "missing column index"))?
            .parse()
            .map_err(|_| parse_err(lineno, "cannot parse column index"))?;
        let v: f64 = words
            .next()
            .ok_or_else(|| parse_err(lineno, "missing value"))?
            .parse()
            .map_err(|_| parse_err(lineno, "cannot parse value"))?;
        if i == 0 || i > nrows || j == 0 || j > ncols {
            return Err(parse_err(
                lineno,
                format!("index ({i}, {j}) outside 1..={nrows} x 1..={ncols}"),
            ));
        }
        let (i0, j0) = (i - 1, j - 1);
        triplets.push((i0, j0, v));
        if symmetry == Symmetry::Symmetric && i0 != j0 {
            triplets.push((j0, i0, v));
        }
        entries_seen += 1;
    }

    if !size_seen {
        return Err(parse_err(0, "missing size line"));
    }
    if entries_seen != nnz_declared {
        return Err(parse_err(
            0,
            format!("declared {nnz_declared} entries but found {entries_seen}"),
        ));
    }
    SparseMatrix::from_triplets(nrows, ncols, triplets)
}

/// Loads a `.mtx` file from disk.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let file = std::fs::File::open(path)?;
    read_matrix_market(std::io::BufReader::new(file))
}

/// Writes a matrix as `coordinate real general`, 1-based, full precision.
pub fn write_matrix_market<W: Write>(matrix: &SparseMatrix, mut writer: W) -> Result<()> {
    writeln!(writer, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(
        writer,
        "{} {} {}",
        matrix.nrows(),
        matrix.ncols(),
        matrix.nnz()
    )?;
    for (i, j, v) in matrix.iter() {
        writeln!(writer, "{} {} {}", i + 1, j + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read_str(s: &str) -> Result<SparseMatrix> {
        read_matrix_market(s.as_bytes())
    }

    #[test]
    fn single_entry_general() {
        let a = read_str("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 3.5\n")
            .unwrap();
        assert_eq!((a.nrows(), a.ncols(), a.nnz()), (1, 1, 1));
        assert_eq!(a.row(0).1, &[3.5]);
    }

    #[test]
    fn symmetric_entries_are_mirrored() {
        let src = "%%MatrixMarket matrix coordinate real symmetric\n\
                   3 3 3\n1 1 2.0\n2 1 1.0\n3 3 4.0\n";
        let a = read_str(src).unwrap();
        // oracle: mirrored coordinate list {(0,0,2),(1,0,1),(0,1,1),(2,2,4)}
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.row(0), (&[0usize, 1][..], &[2.0, 1.0][..]));
        assert_eq!(a.row(1), (&[0usize][..], &[1.0][..]));
        assert_eq!(a.row(2), (&[2usize][..], &[4.0][..]));
    }

    #[test]
    fn integer_field_accepted() {
        let a = read_str("%%MatrixMarket matrix coordinate integer general\n2 2 1\n2 2 7\n")
            .unwrap();
        assert_eq!(a.row(1).1, &[7.0]);
    }

    #[test]
    fn duplicates_summed() {
        let a = read_str(
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.5\n1 1 2.5\n",
        )
        .unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.row(0).1, &[4.0]);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let a = read_str(
            "%%MatrixMarket matrix coordinate real general\n% a comment\n\n2 2 1\n% more\n1 2 9\n",
        )
        .unwrap();
        assert_eq!(a.row(0), (&[1usize][..], &[9.0][..]));
    }

    #[test]
    fn malformed_header_names_line() {
        let err = read_str("%%NotMatrixMarket\n1 1 1\n1 1 1.0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn complex_field_rejected() {
        let err =
            read_str("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n")
                .unwrap_err();
        assert!(err.to_string().contains("complex"));
    }

    #[test]
    fn pattern_field_rejected() {
        let err = read_str("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n")
            .unwrap_err();
        assert!(err.to_string().contains("pattern"));
    }

    #[test]
    fn out_of_range_index_names_line() {
        let err = read_str(
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
        )
        .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_entries_detected() {
        let err =
            read_str("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n")
                .unwrap_err();
        assert!(err.to_string().contains("declared 2"));
    }

    #[test]
    fn surplus_entries_detected() {
        let err = read_str(
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n2 2 1.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("more than the declared"));
    }

    proptest! {
        #[test]
        fn write_read_round_trip_is_value_identical(
            entries in proptest::collection::vec((0usize..7, 0usize..5, -100.0f64..100.0), 0..30),
        ) {
            let a = SparseMatrix::from_triplets(7, 5, entries).unwrap();
            let mut buf = Vec::new();
            write_matrix_market(&a, &mut buf).unwrap();
            let b = read_matrix_market(buf.as_slice()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
