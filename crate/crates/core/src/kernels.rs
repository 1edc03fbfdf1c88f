//! Builtin functions callable from programs.
//!
//! Everything here is a pure function of its arguments, including `print`,
//! whose rendered text is returned to the caller instead of being written
//! anywhere. That keeps kernels safe to run concurrently on any worker and
//! bit-identical across machines.
//!
//! `clean_files`, `complex_evaluation` and `semantic_analysis` are fictional
//! stand-ins that make the document-processing example executable.

use thiserror::Error;

use crate::lang::Purity;
use crate::value::{Matrix, Summary, Value};

/// Largest accepted row or column count for `genMatrix`.
pub const MAX_DIM: i64 = 16_384;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("{name}: expected {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("{name}: argument {index} must be {expected}, got {got}")]
    ArgType { name: String, index: usize, expected: &'static str, got: &'static str },
    #[error("genMatrix: dimensions {rows}x{cols} out of range 1..={MAX_DIM}")]
    Dimension { rows: i64, cols: i64 },
    #[error("matMul: dimension mismatch {left} x {right}")]
    Mismatch { left: String, right: String },
    #[error("unknown builtin `{0}`")]
    Unknown(String),
}

/// Splitmix64 generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState(pub u64);

impl RngState {
    pub fn next_u64(&mut self) -> u64 {
        let (next, out) = splitmix64_next(*self);
        *self = next;
        out
    }
}

pub fn splitmix64_next(state: RngState) -> (RngState, u64) {
    let s = state.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = s;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (RngState(s), z ^ (z >> 31))
}

/// Random matrix with cells in `[-100, 100]`, filled row-major from the
/// generator seeded with `seed` reinterpreted as unsigned.
pub fn gen_matrix(seed: i64, rows: i64, cols: i64) -> Result<Matrix, KernelError> {
    if !(1..=MAX_DIM).contains(&rows) || !(1..=MAX_DIM).contains(&cols) {
        return Err(KernelError::Dimension { rows, cols });
    }
    let mut rng = RngState(seed as u64);
    let cells = (0..rows * cols).map(|_| (rng.next_u64() % 201) as i64 - 100).collect();
    Ok(Matrix { rows: rows as usize, cols: cols as usize, cells })
}

/// Schoolbook product with wrapping arithmetic.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix, KernelError> {
    if a.cols != b.rows {
        return Err(KernelError::Mismatch { left: a.shape(), right: b.shape() });
    }
    let (n, m) = (a.rows, b.cols);
    let mut out = Matrix::zeros(n, m);
    // i-k-j order keeps the inner loop on contiguous rows of b and out.
    for i in 0..n {
        let out_row = &mut out.cells[i * m..(i + 1) * m];
        for k in 0..a.cols {
            let lhs = a.cells[i * a.cols + k];
            if lhs == 0 {
                continue;
            }
            let b_row = &b.cells[k * m..(k + 1) * m];
            for (acc, &rhs) in out_row.iter_mut().zip(b_row) {
                *acc = acc.wrapping_add(lhs.wrapping_mul(rhs));
            }
        }
    }
    Ok(out)
}

pub fn checksum(m: &Matrix) -> i64 {
    m.checksum()
}

/// Renders `value` the way `print` emits it, trailing newline included.
pub fn print_text(value: &Value) -> String {
    format!("{value}\n")
}

pub fn clean_files() -> Summary {
    let fixed = gen_matrix(0, 8, 8).expect("8x8 is in range");
    Summary { count: 42, digest: fixed.checksum() }
}

pub fn complex_evaluation(summary: &Summary) -> i64 {
    summary.count.wrapping_add(summary.digest)
}

pub fn semantic_analysis() -> i64 {
    7
}

/// Signature metadata for one builtin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtin {
    pub name: &'static str,
    pub arity: usize,
    pub purity: Purity,
    pub signature: &'static str,
}

pub const BUILTINS: &[Builtin] = &[
    Builtin { name: "genMatrix", arity: 3, purity: Purity::Pure, signature: "Int -> Int -> Int -> Matrix" },
    Builtin { name: "matMul", arity: 2, purity: Purity::Pure, signature: "Matrix -> Matrix -> Matrix" },
    Builtin { name: "checksum", arity: 1, purity: Purity::Pure, signature: "Matrix -> Int" },
    Builtin { name: "print", arity: 1, purity: Purity::Effectful, signature: "a -> IO ()" },
    Builtin { name: "clean_files", arity: 0, purity: Purity::Effectful, signature: "IO Summary" },
    Builtin { name: "complex_evaluation", arity: 1, purity: Purity::Pure, signature: "Summary -> Int" },
    Builtin { name: "semantic_analysis", arity: 0, purity: Purity::Effectful, signature: "IO Int" },
];

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// Result of invoking a builtin: its value plus any text it printed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub value: Value,
    pub printed: String,
}

impl Outcome {
    fn silent(value: Value) -> Outcome {
        Outcome { value, printed: String::new() }
    }
}

fn int_arg(name: &str, args: &[Value], index: usize) -> Result<i64, KernelError> {
    args[index].as_int().ok_or_else(|| KernelError::ArgType {
        name: name.to_string(),
        index,
        expected: "Int",
        got: args[index].kind_name(),
    })
}

fn matrix_arg<'a>(name: &str, args: &'a [Value], index: usize) -> Result<&'a Matrix, KernelError> {
    match &args[index] {
        Value::Matrix(m) => Ok(m),
        other => {
            Err(KernelError::ArgType { name: name.to_string(), index, expected: "Matrix", got: other.kind_name() })
        }
    }
}

/// Dispatches a builtin call by name.
pub fn call(name: &str, args: &[Value]) -> Result<Outcome, KernelError> {
    let meta = builtin(name).ok_or_else(|| KernelError::Unknown(name.to_string()))?;
    if args.len() != meta.arity {
        return Err(KernelError::Arity { name: name.to_string(), expected: meta.arity, got: args.len() });
    }
    let value = match name {
        "genMatrix" => {
            let (seed, rows, cols) = (int_arg(name, args, 0)?, int_arg(name, args, 1)?, int_arg(name, args, 2)?);
            Value::Matrix(gen_matrix(seed, rows, cols)?)
        }
        "matMul" => Value::Matrix(mat_mul(matrix_arg(name, args, 0)?, matrix_arg(name, args, 1)?)?),
        "checksum" => Value::Int(checksum(matrix_arg(name, args, 0)?)),
        "print" => {
            return Ok(Outcome { value: Value::Unit, printed: print_text(&args[0]) });
        }
        "clean_files" => Value::Summary(clean_files()),
        "complex_evaluation" => match &args[0] {
            Value::Summary(s) => Value::Int(complex_evaluation(s)),
            other => {
                return Err(KernelError::ArgType {
                    name: name.to_string(),
                    index: 0,
                    expected: "Summary",
                    got: other.kind_name(),
                })
            }
        },
        "semantic_analysis" => Value::Int(semantic_analysis()),
        _ => unreachable!("builtin table and dispatch disagree on `{name}`"),
    };
    Ok(Outcome::silent(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, cells: &[i64]) -> Matrix {
        Matrix::new(rows, cols, cells.to_vec()).unwrap()
    }

    #[test]
    fn two_by_two_product() {
        let a = m(2, 2, &[1, 2, 3, 4]);
        let b = m(2, 2, &[5, 6, 7, 8]);
        assert_eq!(mat_mul(&a, &b).unwrap(), m(2, 2, &[19, 22, 43, 50]));
    }

    #[test]
    fn identity_is_neutral() {
        let a = gen_matrix(11, 3, 3).unwrap();
        assert_eq!(mat_mul(&a, &Matrix::identity(3)).unwrap(), a);
    }

    #[test]
    fn mismatch_names_both_shapes() {
        let a = m(2, 3, &[0; 6]);
        let err = mat_mul(&a, &a).unwrap_err();
        assert_eq!(err.to_string(), "matMul: dimension mismatch 2x3 x 2x3");
    }

    #[test]
    fn gen_matrix_rejects_bad_dims() {
        assert_eq!(gen_matrix(1, 0, 3), Err(KernelError::Dimension { rows: 0, cols: 3 }));
        assert!(gen_matrix(1, 3, MAX_DIM + 1).is_err());
        assert!(gen_matrix(1, -1, 3).is_err());
    }

    #[test]
    fn gen_matrix_is_deterministic_and_bounded() {
        let a = gen_matrix(-5, 2, 3).unwrap();
        assert_eq!(a, gen_matrix(-5, 2, 3).unwrap());
        assert!(a.cells.iter().all(|c| (-100..=100).contains(c)));
    }

    #[test]
    fn checksum_small_cases() {
        assert_eq!(checksum(&Matrix::zeros(3, 2)), 0);
        assert_eq!(checksum(&Matrix::identity(4)), 4);
    }

    #[test]
    fn print_renders_and_returns_unit() {
        let out = call("print", &[Value::Tuple(vec![Value::Int(1), Value::Int(2)])]).unwrap();
        assert_eq!(out, Outcome { value: Value::Unit, printed: "(1, 2)\n".into() });
    }

    #[test]
    fn stand_ins() {
        let s = Value::Summary(Summary { count: 1, digest: 2 });
        assert_eq!(call("complex_evaluation", &[s]).unwrap().value, Value::Int(3));
        assert_eq!(clean_files(), clean_files());
        assert_eq!(clean_files().count, 42);
        assert_eq!(call("semantic_analysis", &[]).unwrap().value, Value::Int(7));
    }

    #[test]
    fn call_checks_arity_and_types() {
        assert!(matches!(call("checksum", &[]), Err(KernelError::Arity { .. })));
        assert!(matches!(call("checksum", &[Value::Int(1)]), Err(KernelError::ArgType { .. })));
        assert!(matches!(call("nope", &[]), Err(KernelError::Unknown(_))));
    }

    #[test]
    fn every_builtin_dispatches() {
        for b in BUILTINS {
            let args: Vec<Value> = match b.name {
                "genMatrix" => vec![Value::Int(1), Value::Int(2), Value::Int(2)],
                "matMul" => vec![Value::Matrix(Matrix::identity(2)), Value::Matrix(Matrix::identity(2))],
                "checksum" => vec![Value::Matrix(Matrix::identity(2))],
                "print" => vec![Value::Unit],
                "complex_evaluation" => vec![Value::Summary(clean_files())],
                _ => vec![],
            };
            assert_eq!(args.len(), b.arity, "{}", b.name);
            call(b.name, &args).unwrap();
        }
    }
}
