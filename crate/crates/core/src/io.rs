//! Dataset ingestion: dense CSV (samples by variables or a covariance matrix)
//! and the UCI bag-of-words `docword` / `vocab` pair.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcaError};
use crate::linalg::{gram_from_data, DataMatrix, PsdMatrix};

/// Largest dense matrix (entries) materialized from a sparse corpus.
pub const DENSE_ENTRY_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Csv,
    CsvHeader,
    Covariance,
    UciBow,
    Builtin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub path: Option<PathBuf>,
    pub format: InputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetMatrix {
    Data(DataMatrix),
    Covariance(PsdMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub matrix: DatasetMatrix,
    pub vocabulary: Option<Vec<String>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn from_covariance(name: impl Into<String>, a: PsdMatrix) -> Self {
        Self {
            name: name.into(),
            matrix: DatasetMatrix::Covariance(a),
            vocabulary: None,
            provenance: Provenance {
                path: None,
                format: InputFormat::Builtin,
            },
        }
    }

    pub fn from_data(name: impl Into<String>, s: DataMatrix, vocabulary: Option<Vec<String>>) -> Result<Self> {
        let ds = Self {
            name: name.into(),
            matrix: DatasetMatrix::Data(s),
            vocabulary: None,
            provenance: Provenance {
                path: None,
                format: InputFormat::Builtin,
            },
        };
        ds.with_vocabulary(vocabulary)
    }

    pub fn with_vocabulary(mut self, vocabulary: Option<Vec<String>>) -> Result<Self> {
        if let Some(v) = &vocabulary {
            if v.len() != self.dim() {
                return Err(SpcaError::InvalidInput(format!(
                    "vocabulary has {} entries but the dataset has {} variables",
                    v.len(),
                    self.dim()
                )));
            }
        }
        self.vocabulary = vocabulary;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match &self.matrix {
            DatasetMatrix::Data(s) => s.cols(),
            DatasetMatrix::Covariance(a) => a.dim(),
        }
    }

    /// Sample-by-feature CSV data is centered by default; cooccurrence-style
    /// inputs (bag-of-words) are not.
    pub fn default_center(&self) -> bool {
        !matches!(self.provenance.format, InputFormat::UciBow)
    }

    /// Covariance `(1/n) S^T S`, centered if requested; a covariance input is
    /// returned as is.
    pub fn covariance(&self, center: Option<bool>) -> Result<PsdMatrix> {
        match &self.matrix {
            DatasetMatrix::Data(s) => gram_from_data(s, center.unwrap_or(self.default_center()), true),
            DatasetMatrix::Covariance(a) => Ok(a.clone()),
        }
    }
}

type CsvRows = (Option<Vec<String>>, Vec<Vec<f64>>);

fn read_csv_rows(path: &Path, has_header: bool) -> Result<CsvRows> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if has_header && header.is_none() {
            header = Some(rec.iter().map(str::to_owned).collect::<Vec<_>>());
            width = Some(rec.len());
            continue;
        }
        if let Some(w) = width {
            if rec.len() != w {
                return Err(SpcaError::ParseError {
                    line,
                    col: None,
                    msg: format!("expected {w} fields, found {}", rec.len()),
                });
            }
        }
        width = Some(rec.len());
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| SpcaError::ParseError {
                        line,
                        col: Some(c + 1),
                        msg: format!("not a finite number: {cell:?}"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn csv_error(e: csv::Error) -> SpcaError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SpcaError::Io(io),
        other => SpcaError::ParseError {
            line,
            col: None,
            msg: format!("{other:?}"),
        },
    }
}

fn rows_to_array(rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return Err(SpcaError::InvalidInput("file contains no numeric rows".into()));
    }
    Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
        .map_err(|e| SpcaError::InternalInvariantViolation(e.to_string()))
}

/// Rectangular numeric CSV of samples by variables. With `has_header`, the
/// first row becomes the vocabulary.
pub fn load_dense_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let (header, rows) = read_csv_rows(path, has_header)?;
    let s = DataMatrix::new(rows_to_array(rows)?)?;
    let mut ds = Dataset::from_data(file_stem(path), s, header)?;
    ds.provenance = Provenance {
        path: Some(path.to_owned()),
        format: if has_header {
            InputFormat::CsvHeader
        } else {
            InputFormat::Csv
        },
    };
    Ok(ds)
}

/// Square CSV holding a covariance (PSD) matrix.
pub fn load_covariance_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let (_, rows) = read_csv_rows(path, false)?;
    let a = PsdMatrix::new(rows_to_array(rows)?)?;
    let mut ds = Dataset::from_covariance(file_stem(path), a);
    ds.provenance = Provenance {
        path: Some(path.to_owned()),
        format: InputFormat::Covariance,
    };
    Ok(ds)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned())
}

/// UCI bag-of-words corpus: `docword` has three header lines (documents,
/// words, nonzeros) followed by 1-indexed `docID wordID count` triplets;
/// `vocab` lists one word per line. Materialized densely as documents by
/// words.
pub fn load_uci_bow(docword: impl AsRef<Path>, vocab: Option<&Path>) -> Result<Dataset> {
    let docword = docword.as_ref();
    let reader = BufReader::new(File::open(docword)?);
    let mut header = Vec::with_capacity(3);
    let mut counts: Option<Array2<f64>> = None;
    let mut seen = 0u64;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if header.len() < 3 {
            let v: u64 = trimmed.parse().map_err(|_| SpcaError::ParseError {
                line: lineno,
                col: None,
                msg: format!("expected a header count, found {trimmed:?}"),
            })?;
            header.push(v);
            if header.len() == 3 {
                let (docs, words) = (header[0] as u128, header[1] as u128);
                if docs == 0 || words == 0 {
                    return Err(SpcaError::ParseError {
                        line: lineno,
                        col: None,
                        msg: "corpus declares zero documents or words".into(),
                    });
                }
                if docs * words > DENSE_ENTRY_LIMIT {
                    return Err(SpcaError::CapacityExceeded {
                        what: "dense document-by-word entries",
                        count: docs * words,
                        limit: DENSE_ENTRY_LIMIT,
                    });
                }
                counts = Some(Array2::zeros((header[0] as usize, header[1] as usize)));
            }
            continue;
        }
        let m = counts.as_mut().expect("allocated after header");
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(SpcaError::ParseError {
                line: lineno,
                col: None,
                msg: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let parse = |c: usize| -> Result<u64> {
            fields[c].parse().map_err(|_| SpcaError::ParseError {
                line: lineno,
                col: Some(c + 1),
                msg: format!("not a nonnegative integer: {:?}", fields[c]),
            })
        };
        let (doc, word, count) = (parse(0)?, parse(1)?, parse(2)?);
        if doc == 0 || doc > header[0] {
            return Err(SpcaError::ParseError {
                line: lineno,
                col: Some(1),
                msg: format!("docID {doc} outside 1..={}", header[0]),
            });
        }
        if word == 0 || word > header[1] {
            return Err(SpcaError::ParseError {
                line: lineno,
                col: Some(2),
                msg: format!("wordID {word} outside 1..={}", header[1]),
            });
        }
        m[[(doc - 1) as usize, (word - 1) as usize]] += count as f64;
        seen += 1;
    }
    let counts = counts.ok_or_else(|| SpcaError::ParseError {
        line: header.len() + 1,
        col: None,
        msg: "missing docword header".into(),
    })?;
    if seen != header[2] {
        return Err(SpcaError::ParseError {
            line: 3,
            col: None,
            msg: format!("header declares {} nonzeros, found {seen}", header[2]),
        });
    }
    let vocabulary = vocab.map(load_vocabulary).transpose()?;
    let mut ds = Dataset::from_data(file_stem(docword), DataMatrix::new(counts)?, vocabulary)?;
    ds.provenance = Provenance {
        path: Some(docword.to_owned()),
        format: InputFormat::UciBow,
    };
    Ok(ds)
}

pub fn load_vocabulary(path: &Path) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut words = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let w = line.trim();
        if !w.is_empty() {
            words.push(w.to_owned());
        }
    }
    Ok(words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn plain_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "1,2\n3,4\n5,6\n");
        let ds = load_dense_csv(&p, false).unwrap();
        match ds.matrix {
            DatasetMatrix::Data(s) => assert_eq!(s.values(), &array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]),
            _ => panic!("expected data"),
        }
        assert!(ds.vocabulary.is_none());
    }

    #[test]
    fn header_becomes_vocabulary() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "h.csv", "a,b\n1,2\n");
        let ds = load_dense_csv(&p, true).unwrap();
        assert_eq!(ds.vocabulary, Some(vec!["a".to_owned(), "b".to_owned()]));
    }

    #[test]
    fn ragged_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r.csv", "1,2\n3");
        match load_dense_csv(&p, false) {
            Err(SpcaError::ParseError { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "n.csv", "1,2\n3,x\n");
        match load_dense_csv(&p, false) {
            Err(SpcaError::ParseError { line, col, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(col, Some(2));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bow_dense() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write(&dir, "docword.toy.txt", "2\n3\n2\n1 1 4\n2 3 1\n");
        let vocab = write(&dir, "vocab.toy.txt", "alpha\nbeta\ngamma\n");
        let ds = load_uci_bow(&dw, Some(&vocab)).unwrap();
        match &ds.matrix {
            DatasetMatrix::Data(s) => assert_eq!(s.values(), &array![[4.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
            _ => panic!("expected data"),
        }
        assert_eq!(ds.vocabulary.as_ref().unwrap()[2], "gamma");
        assert!(!ds.default_center());
    }

    #[test]
    fn bow_word_out_of_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write(&dir, "docword.bad.txt", "2\n3\n1\n1 5 4\n");
        assert!(matches!(
            load_uci_bow(&dw, None),
            Err(SpcaError::ParseError { line: 4, .. })
        ));
    }

    #[test]
    fn bow_size_guard() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write(&dir, "docword.big.txt", "100000\n1000\n0\n");
        assert!(matches!(
            load_uci_bow(&dw, None),
            Err(SpcaError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn vocabulary_length_checked() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write(&dir, "docword.v.txt", "1\n3\n1\n1 1 1\n");
        let vocab = write(&dir, "vocab.v.txt", "a\nb\n");
        assert!(load_uci_bow(&dw, Some(&vocab)).is_err());
    }

    #[test]
    fn bow_and_csv_agree() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write(&dir, "docword.x.txt", "3\n4\n5\n1 1 2\n1 4 1\n2 2 3\n3 3 1\n3 1 5\n");
        let csv = write(&dir, "x.csv", "2,0,0,1\n0,3,0,0\n5,0,1,0\n");
        let a = load_uci_bow(&dw, None).unwrap().covariance(Some(false)).unwrap();
        let b = load_dense_csv(&csv, false).unwrap().covariance(Some(false)).unwrap();
        let diff = (a.values() - b.values()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff <= 1e-12);
    }

    #[test]
    fn covariance_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "cov.csv", "2,1\n1,2\n");
        let ds = load_covariance_csv(&p).unwrap();
        assert_eq!(ds.dim(), 2);
        let bad = write(&dir, "bad.csv", "1,2\n2,1\n");
        assert!(load_covariance_csv(&bad).is_err());
    }
}
