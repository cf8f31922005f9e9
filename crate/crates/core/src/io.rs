//! JSON file formats for tuples, symbols and evaluation requests.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hardy::InnerSymbol;
use crate::numerics::{CMatrix, Tolerances};
use crate::tuples::{CTuple, TupleError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid file: {0}")]
    Invalid(String),
    #[error(transparent)]
    Tuple(#[from] TupleError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// `(de)serialize_with` helpers for a [`CMatrix`] as nested `[re, im]` rows.
pub mod matrix_serde {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        let m = CMatrix::from_fn(nrows, ncols, |r, c| Complex64::new(rows[r][c][0], rows[r][c][1]));
        if !crate::numerics::all_finite(&m) {
            return Err("non-finite matrix entry".into());
        }
        Ok(m)
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

/// `(de)serialize_with` helpers for a list of [`CMatrix`].
pub mod matrix_vec_serde {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(matrix_serde::to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let all = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        all.iter()
            .map(|rows| matrix_serde::from_rows(rows).map_err(D::Error::custom))
            .collect()
    }
}

pub fn complex_to_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn pair_to_complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// `{"n": int, "dim": int, "matrices": [...], "mask": optional matrix}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TupleFile {
    pub n: usize,
    pub dim: usize,
    pub matrices: Vec<Vec<Vec<[f64; 2]>>>,
    /// Optional window projection in the tuple's coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_degree: Option<usize>,
}

impl TupleFile {
    pub fn from_tuple(t: &CTuple) -> Self {
        Self {
            n: t.n(),
            dim: t.dim(),
            matrices: t.matrices().iter().map(matrix_serde::to_rows).collect(),
            mask: None,
            mask_degree: None,
        }
    }

    pub fn matrices(&self) -> Result<Vec<CMatrix>, IoError> {
        if self.matrices.len() != self.n {
            return Err(IoError::Invalid(format!(
                "n = {} but {} matrices given",
                self.n,
                self.matrices.len()
            )));
        }
        self.matrices
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                let m = matrix_serde::from_rows(rows).map_err(|e| IoError::Invalid(format!("matrix {i}: {e}")))?;
                if m.nrows() != self.dim || m.ncols() != self.dim {
                    return Err(IoError::Invalid(format!(
                        "matrix {i} is {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        self.dim,
                        self.dim
                    )));
                }
                Ok(m)
            })
            .collect()
    }

    pub fn to_tuple(&self, tol: Tolerances) -> Result<CTuple, IoError> {
        Ok(CTuple::validate(self.matrices()?, tol)?)
    }

    pub fn mask_matrix(&self) -> Result<Option<CMatrix>, IoError> {
        self.mask
            .as_ref()
            .map(|rows| matrix_serde::from_rows(rows).map_err(IoError::Invalid))
            .transpose()
    }
}

pub fn parse_tuple_file(text: &str) -> Result<TupleFile, IoError> {
    Ok(serde_json::from_str(text)?)
}

/// A bare symbol object or `{"n": int, "symbol": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolFile {
    Wrapped { n: usize, symbol: InnerSymbol },
    Bare(InnerSymbol),
}

impl SymbolFile {
    /// Symbol and variable count (inferred from the symbol when absent,
    /// never below 2 since quotient checks are posed on the polydisc).
    pub fn resolve(self) -> (InnerSymbol, usize) {
        match self {
            SymbolFile::Wrapped { n, symbol } => (symbol, n),
            SymbolFile::Bare(symbol) => {
                let n = symbol.min_vars().max(2);
                (symbol, n)
            }
        }
    }
}

pub fn parse_symbol_file(text: &str) -> Result<SymbolFile, IoError> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub per_axis: usize,
}

/// `{"points": [[[re, im], ...], ...], "grid": {"per_axis": int}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PointsFile {
    #[serde(default)]
    pub points: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl PointsFile {
    pub fn points(&self) -> Vec<Vec<Complex64>> {
        self.points
            .iter()
            .map(|p| p.iter().copied().map(pair_to_complex).collect())
            .collect()
    }
}

pub fn parse_points_file(text: &str) -> Result<PointsFile, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_matrix(text: &str) -> Result<CMatrix, IoError> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text)?;
    matrix_serde::from_rows(&rows).map_err(IoError::Invalid)
}

pub fn read_file(path: &str) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_round_trip() {
        let text = r#"{"n": 2, "dim": 1, "matrices": [[[[0.5, 0.0]]], [[[0.0, -0.25]]]]}"#;
        let f = parse_tuple_file(text).unwrap();
        let t = f.to_tuple(Tolerances::default()).unwrap();
        assert_eq!(t.get(1)[(0, 0)], Complex64::new(0.0, -0.25));
        let back = serde_json::to_string(&TupleFile::from_tuple(&t)).unwrap();
        let again = parse_tuple_file(&back).unwrap().to_tuple(Tolerances::default()).unwrap();
        assert_eq!(again.get(0), t.get(0));
    }

    #[test]
    fn malformed_json_reports_position() {
        match parse_tuple_file("{\n  \"n\": 1,\n  \"dim\": }") {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_dims_are_rejected() {
        let text = r#"{"n": 1, "dim": 2, "matrices": [[[[0.5, 0.0]]]]}"#;
        assert!(matches!(
            parse_tuple_file(text).unwrap().to_tuple(Tolerances::default()),
            Err(IoError::Invalid(_))
        ));
    }

    #[test]
    fn symbol_files() {
        let (s, n) = parse_symbol_file(r#"{"kind": "monomial", "exponents": [1, 1]}"#)
            .unwrap()
            .resolve();
        assert_eq!(n, 2);
        assert_eq!(s, InnerSymbol::Monomial { exponents: vec![1, 1] });
        let (_, n) = parse_symbol_file(r#"{"n": 3, "symbol": {"kind": "monomial", "exponents": [1]}}"#)
            .unwrap()
            .resolve();
        assert_eq!(n, 3);
        let (s, _) = parse_symbol_file(
            r#"{"kind": "blockdiag", "children": [{"kind": "monomial", "exponents": [1, 1]}, {"kind": "unitary", "matrix": [[[1, 0]]]}]}"#,
        )
        .unwrap()
        .resolve();
        assert_eq!(s.output_dim(), 2);
    }
}
