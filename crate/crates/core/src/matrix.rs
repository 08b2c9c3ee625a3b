//! Compressed sparse row storage for link graphs and Matrix Market ingest.
//!
//! An entry `(i, j)` of the adjacency means a link `i -> j`. Rows are source
//! pages, so the out-degree of page `i` is the length of row `i`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::Serialize;

use crate::error::{Error, Result};

/// Immutable sparse matrix in compressed row form.
///
/// Column indices are strictly increasing within each row and every stored
/// value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedSparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CompressedSparseMatrix {
    /// Builds a matrix from coordinate triples in any order.
    ///
    /// Duplicate coordinates collapse to one stored entry holding the largest
    /// of the duplicate values, so the result does not depend on input order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(i, j, value) in &triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidParameter(format!(
                    "entry ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value at ({i}, {j})"
                )));
            }
        }
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, value) in triplets {
            if last == Some((i, j)) {
                // sorted ascending by value within a coordinate: keep the max
                *values.last_mut().unwrap() = value;
                continue;
            }
            last = Some((i, j));
            row_offsets[i + 1] += 1;
            col_indices.push(j);
            values.push(value);
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds an unweighted adjacency from a list of links `i -> j`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let triplets = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        Self::from_triplets(n, n, triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices stored in row `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Iterates stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            (self.row_offsets[i]..self.row_offsets[i + 1])
                .map(move |k| (i, self.col_indices[k], self.values[k]))
        })
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows are visited in increasing order, so each output row stays sorted
        for (i, j, value) in self.triplets() {
            let slot = next[j];
            col_indices[slot] = i;
            values[slot] = value;
            next[j] += 1;
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Induced subgraph on the first `k` nodes.
    pub fn leading_submatrix(&self, k: usize) -> Self {
        let k_rows = k.min(self.n_rows);
        let k_cols = k.min(self.n_cols);
        let triplets = self
            .triplets()
            .filter(|&(i, j, _)| i < k_rows && j < k_cols)
            .collect();
        Self::from_triplets(k_rows, k_cols, triplets).expect("entries already validated")
    }

    /// Renders the matrix as a general real coordinate Matrix Market file.
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::with_capacity(32 + self.nnz() * 24);
        out.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for (i, j, value) in self.triplets() {
            let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, value);
        }
        out
    }
}

/// Out-degrees of every node plus the sorted list of dangling nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Outdegrees {
    pub outdegree: Vec<usize>,
    pub dangling: Vec<usize>,
}

/// Counts stored out-links per node. Stored values are ignored: each entry is
/// one link.
pub fn compute_outdegrees_and_dangling(adj: &CompressedSparseMatrix) -> Result<Outdegrees> {
    if !adj.is_square() {
        return Err(Error::NotSquare {
            rows: adj.n_rows(),
            cols: adj.n_cols(),
        });
    }
    let outdegree: Vec<usize> = adj.row_offsets().windows(2).map(|w| w[1] - w[0]).collect();
    let dangling = outdegree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| i)
        .collect();
    Ok(Outdegrees {
        outdegree,
        dangling,
    })
}

/// Size characteristics of a test matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestStats {
    pub n: usize,
    pub nnz: usize,
    pub density_percent: f64,
    pub dangling_count: usize,
}

pub fn ingest_stats(adj: &CompressedSparseMatrix) -> IngestStats {
    let n = adj.n_rows();
    let nnz = adj.nnz();
    let density_percent = if n == 0 {
        0.0
    } else {
        nnz as f64 / (n as f64 * n as f64) * 100.0
    };
    let dangling_count = adj
        .row_offsets()
        .windows(2)
        .filter(|w| w[1] == w[0])
        .count();
    IngestStats {
        n,
        nnz,
        density_percent,
        dangling_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Pattern,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str, lineno: usize) -> Result<(Field, Symmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(lineno, "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`"));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(lineno, "only `matrix coordinate` files are supported"));
    }
    let field = match tokens[3].as_str() {
        "pattern" => Field::Pattern,
        "real" | "integer" | "double" => Field::Real,
        other => return Err(parse_err(lineno, format!("unsupported field `{other}`"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(lineno, format!("unsupported symmetry `{other}`"))),
    };
    Ok((field, symmetry))
}

fn parse_index(token: Option<&str>, bound: usize, lineno: usize) -> Result<usize> {
    let token = token.ok_or_else(|| parse_err(lineno, "missing index"))?;
    let idx: usize = token
        .parse()
        .map_err(|_| parse_err(lineno, format!("invalid index `{token}`")))?;
    if idx == 0 || idx > bound {
        return Err(parse_err(lineno, format!("index {idx} outside 1..={bound}")));
    }
    Ok(idx - 1)
}

/// Parses a Matrix Market coordinate stream (plain or gzip-compressed).
pub fn parse_matrix_market<R: Read>(reader: R) -> Result<CompressedSparseMatrix> {
    let mut reader = BufReader::new(reader);
    let magic = reader.fill_buf()?;
    if magic.len() >= 2 && magic[0] == 0x1f && magic[1] == 0x8b {
        return parse_plain(BufReader::new(MultiGzDecoder::new(reader)));
    }
    parse_plain(reader)
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<CompressedSparseMatrix> {
    parse_matrix_market(File::open(path)?)
}

fn parse_plain<R: BufRead>(reader: R) -> Result<CompressedSparseMatrix> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (field, symmetry) = match lines.next() {
        Some((lineno, line)) => parse_header(&line?, lineno)?,
        None => return Err(parse_err(1, "empty input")),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut seen = 0usize;
    let mut last_line = 1;

    for (lineno, line) in lines {
        let line = line?;
        last_line = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let Some((n_rows, n_cols, nnz)) = size else {
            let mut next = |what: &str| -> Result<usize> {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(lineno, format!("size line missing {what}")))?;
                tok.parse()
                    .map_err(|_| parse_err(lineno, format!("invalid {what} `{tok}`")))
            };
            let dims = (next("rows")?, next("columns")?, next("entry count")?);
            if symmetry == Symmetry::Symmetric && dims.0 != dims.1 {
                return Err(parse_err(lineno, "symmetric matrix must be square"));
            }
            triplets.reserve(match symmetry {
                Symmetry::General => dims.2,
                Symmetry::Symmetric => 2 * dims.2,
            });
            size = Some(dims);
            continue;
        };
        if seen == nnz {
            return Err(parse_err(lineno, format!("more than the declared {nnz} entries")));
        }
        let i = parse_index(tokens.next(), n_rows, lineno)?;
        let j = parse_index(tokens.next(), n_cols, lineno)?;
        let value = match field {
            Field::Pattern => 1.0,
            Field::Real => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(lineno, "missing value"))?;
                let value: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("invalid value `{tok}`")))?;
                if !value.is_finite() {
                    return Err(parse_err(lineno, format!("non-finite value `{tok}`")));
                }
                value
            }
        };
        triplets.push((i, j, value));
        if symmetry == Symmetry::Symmetric && i != j {
            triplets.push((j, i, value));
        }
        seen += 1;
    }

    let (n_rows, n_cols, nnz) = size.ok_or_else(|| parse_err(last_line, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            last_line,
            format!("declared {nnz} entries but found {seen}"),
        ));
    }
    CompressedSparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "%%MatrixMarket matrix coordinate real general\n";

    fn parse(text: &str) -> Result<CompressedSparseMatrix> {
        parse_matrix_market(text.as_bytes())
    }

    #[test]
    fn two_cycle() {
        let m = parse(&format!("{HEADER}2 2 2\n1 2 1.0\n2 1 1.0\n")).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.triplets().map(|(i, j, _)| (i, j)).collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn dangling_node() {
        let m = parse(&format!("{HEADER}2 2 1\n1 2 1.0\n")).unwrap();
        assert_eq!(m.row(0), &[1]);
        assert!(m.row(1).is_empty());
        let od = compute_outdegrees_and_dangling(&m).unwrap();
        assert_eq!(od.outdegree, vec![1, 0]);
        assert_eq!(od.dangling, vec![1]);
    }

    #[test]
    fn no_dangling_in_two_cycle() {
        let m = CompressedSparseMatrix::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let od = compute_outdegrees_and_dangling(&m).unwrap();
        assert_eq!(od.outdegree, vec![1, 1]);
        assert!(od.dangling.is_empty());
    }

    #[test]
    fn pattern_and_symmetric() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% comment\n3 3 2\n2 1\n3 3\n";
        let m = parse(text).unwrap();
        let entries: Vec<_> = m.triplets().collect();
        assert_eq!(entries, vec![(0, 1, 1.0), (1, 0, 1.0), (2, 2, 1.0)]);
    }

    #[test]
    fn duplicates_merge() {
        let m = parse(&format!("{HEADER}2 2 3\n1 2 1.0\n1 2 3.0\n2 1 1.0\n")).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.values(), &[3.0, 1.0]);
        assert_eq!(ingest_stats(&m).density_percent, 50.0);
    }

    #[test]
    fn self_loops_are_kept() {
        let m = CompressedSparseMatrix::from_edges(2, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(m.row(0), &[0, 1]);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse(&format!("{HEADER}2 2 1\n3 1 1.0\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse(&format!("{HEADER}2 2 1\n% c\n1 1 nan\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse("%%MatrixMarket matrix array real general\n2 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse(&format!("{HEADER}2 2 2\n1 1 1.0\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(parse("").is_err());
    }

    #[test]
    fn gzip_input() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let text = format!("{HEADER}2 2 2\n1 2 1.0\n2 1 1.0\n");
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(text.as_bytes()).unwrap();
        let bytes = enc.finish().unwrap();
        let m = parse_matrix_market(bytes.as_slice()).unwrap();
        assert_eq!(m, parse(&text).unwrap());
    }

    #[test]
    fn outdegrees_need_square() {
        let m = CompressedSparseMatrix::from_triplets(2, 3, vec![(0, 2, 1.0)]).unwrap();
        assert!(matches!(
            compute_outdegrees_and_dangling(&m),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn transpose_twice_is_identity() {
        let m = CompressedSparseMatrix::from_edges(4, &[(0, 1), (0, 3), (2, 1), (3, 0), (3, 3)]).unwrap();
        let t = m.transpose();
        assert_eq!(t.row(1), &[0, 2]);
        assert_eq!(t.transpose(), m);
    }
}
