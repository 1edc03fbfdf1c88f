//! Runtime values shared by the interpreter, the kernels and the wire codec.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<i64>,
}

impl Matrix {
    /// Builds a matrix, checking that `cells` has exactly `rows * cols` entries
    /// and that both dimensions are positive.
    pub fn new(rows: usize, cols: usize, cells: Vec<i64>) -> Option<Matrix> {
        if rows == 0 || cols == 0 || rows.checked_mul(cols)? != cells.len() {
            return None;
        }
        Some(Matrix { rows, cols, cells })
    }

    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, cells: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.cells[i * n + i] = 1;
        }
        m
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.cells[row * self.cols + col]
    }

    /// Shape as `RxC`, used in error messages.
    pub fn shape(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    /// Wrapping sum of all cells.
    pub fn checksum(&self) -> i64 {
        self.cells.iter().fold(0i64, |acc, &c| acc.wrapping_add(c))
    }
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<i64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = String;

    fn try_from(raw: RawMatrix) -> Result<Self, Self::Error> {
        let (rows, cols, len) = (raw.rows, raw.cols, raw.cells.len());
        Matrix::new(raw.rows, raw.cols, raw.cells)
            .ok_or_else(|| format!("matrix {rows}x{cols} cannot hold {len} cells"))
    }
}

/// The opaque result of `clean_files`; only builtins construct it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Summary {
    pub count: i64,
    pub digest: i64,
}

/// A runtime value. Immutable once built; cheap enough to clone for the
/// sizes the benchmark uses since tasks ship checksums, not matrices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Int(i64),
    Unit,
    Tuple(Vec<Value>),
    Matrix(Matrix),
    Summary(Summary),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "Int",
            Value::Unit => "()",
            Value::Tuple(_) => "tuple",
            Value::Matrix(_) => "Matrix",
            Value::Summary(_) => "Summary",
        }
    }
}

/// Canonical rendering used by `print`: decimal integers, `()`, tuples as
/// `(a, b)`, matrices by shape and checksum, summaries by field.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Unit => f.write_str("()"),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
            Value::Matrix(m) => {
                write!(f, "Matrix[{}x{};checksum={}]", m.rows, m.cols, m.checksum())
            }
            Value::Summary(s) => write!(f, "Summary{{count={},digest={}}}", s.count, s.digest),
        }
    }
}
