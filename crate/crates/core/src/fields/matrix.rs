use serde::{Deserialize, Serialize};

use super::{CoefficientField, FieldBounds};
use crate::error::{Error, Result};
use crate::numerics::Mat2;

/// An entry of a coefficient matrix: a number or a scalar field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntry {
    Number(f64),
    Field(CoefficientField),
}

impl MatrixEntry {
    fn eval(&self, y: &[f64]) -> f64 {
        match self {
            MatrixEntry::Number(v) => *v,
            MatrixEntry::Field(f) => f.eval(y),
        }
    }

    fn lower(&self) -> f64 {
        match self {
            MatrixEntry::Number(v) => *v,
            MatrixEntry::Field(f) => f.bounds.alpha,
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            MatrixEntry::Number(v) => v.abs(),
            MatrixEntry::Field(f) => f.bounds.alpha.abs().max(f.bounds.beta.abs()),
        }
    }
}

/// A `d × d` coefficient matrix field. `bounds.alpha` is the ellipticity
/// constant `alpha |ξ|² <= <A ξ, ξ>` and `bounds.beta` bounds the operator norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct MatrixField {
    pub entries: Vec<Vec<MatrixEntry>>,
    pub symmetric: bool,
    pub bounds: FieldBounds,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    entries: Vec<Vec<MatrixEntry>>,
    #[serde(default)]
    symmetric: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<FieldBounds>,
}

impl TryFrom<RawMatrix> for MatrixField {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        let symmetric = raw.symmetric.unwrap_or_else(|| entries_symmetric(&raw.entries));
        let m = MatrixField::build(raw.entries, symmetric, raw.bounds)?;
        m.validate()?;
        Ok(m)
    }
}

impl From<MatrixField> for RawMatrix {
    fn from(m: MatrixField) -> Self {
        RawMatrix {
            entries: m.entries,
            symmetric: Some(m.symmetric),
            bounds: Some(m.bounds),
        }
    }
}

fn entries_symmetric(entries: &[Vec<MatrixEntry>]) -> bool {
    (0..entries.len()).all(|i| (0..entries.len()).all(|j| entries[i].get(j) == entries.get(j).and_then(|r| r.get(i))))
}

/// Smallest eigenvalue of the symmetric part and operator norm of a 2×2 matrix.
pub(crate) fn spectral_bounds(m: &Mat2, dim: usize) -> (f64, f64) {
    if dim == 1 {
        return (m[0][0], m[0][0].abs());
    }
    let s01 = 0.5 * (m[0][1] + m[1][0]);
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - s01 * s01;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let min_eig = 0.5 * tr - disc;
    // largest singular value: sqrt of largest eigenvalue of M^T M
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let disc2 = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let norm = (0.5 * (a + d) + disc2).sqrt();
    (min_eig, norm)
}

/// Largest absolute eigenvalue of the symmetric part of a 2×2 matrix:
/// `sup_{|ξ|<=1} |<M ξ, ξ>|`.
pub(crate) fn quadratic_form_norm(m: &Mat2, dim: usize) -> f64 {
    if dim == 1 {
        return m[0][0].abs();
    }
    let s01 = 0.5 * (m[0][1] + m[1][0]);
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let r = (0.25 * (m[0][0] - m[1][1]).powi(2) + s01 * s01).sqrt();
    (mean + r).abs().max((mean - r).abs())
}

impl MatrixField {
    fn build(entries: Vec<Vec<MatrixEntry>>, symmetric: bool, bounds: Option<FieldBounds>) -> Result<Self> {
        let d = entries.len();
        if d != 1 && d != 2 || entries.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("matrix field must be 1×1 or 2×2"));
        }
        let bounds = match bounds {
            Some(b) => b,
            None => natural_bounds(&entries),
        };
        Ok(MatrixField {
            entries,
            symmetric,
            bounds,
        })
    }

    pub fn new(entries: Vec<Vec<MatrixEntry>>) -> Result<Self> {
        let symmetric = entries_symmetric(&entries);
        let m = Self::build(entries, symmetric, None)?;
        m.validate()?;
        Ok(m)
    }

    /// `a(y) I` in dimension `dim`.
    pub fn isotropic(a: CoefficientField, dim: usize) -> Self {
        let entries = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        if i == j {
                            MatrixEntry::Field(a.clone())
                        } else {
                            MatrixEntry::Number(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        MatrixField {
            entries,
            symmetric: true,
            bounds: FieldBounds {
                p: 2.0,
                ..a.bounds
            },
        }
    }

    pub fn constant(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| MatrixEntry::Number(v)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bounds.alpha > 0.0) {
            return Err(Error::invalid(format!(
                "bounds: matrix field is not uniformly elliptic (alpha = {}); give explicit bounds",
                self.bounds.alpha
            )));
        }
        self.bounds.validate()?;
        for e in self.entries.iter().flatten() {
            match e {
                MatrixEntry::Number(v) if !v.is_finite() => {
                    return Err(Error::invalid("matrix entries must be finite"))
                }
                MatrixEntry::Field(f) => f.validate()?,
                _ => {}
            }
        }
        if self.symmetric && !entries_symmetric(&self.entries) {
            return Err(Error::invalid("matrix field flagged symmetric but entries differ"));
        }
        Ok(())
    }

    pub fn eval(&self, y: &[f64]) -> Mat2 {
        let mut m = [[0.0; 2]; 2];
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                m[i][j] = self.entries[i][j].eval(y);
            }
        }
        m
    }

    pub fn is_one_periodic(&self) -> bool {
        self.entries.iter().flatten().all(|e| match e {
            MatrixEntry::Number(_) => true,
            MatrixEntry::Field(f) => f.is_one_periodic(),
        })
    }

    pub fn describe(&self) -> String {
        let d = self.dim();
        let all_same_diag = (0..d).all(|i| self.entries[i][i] == self.entries[0][0])
            && (0..d).all(|i| (0..d).all(|j| i == j || self.entries[i][j] == MatrixEntry::Number(0.0)));
        match (&self.entries[0][0], all_same_diag) {
            (MatrixEntry::Field(f), true) => format!("iso:{}", f.describe()),
            _ => {
                let cells: Vec<String> = self
                    .entries
                    .iter()
                    .flatten()
                    .map(|e| match e {
                        MatrixEntry::Number(v) => format!("{v}"),
                        MatrixEntry::Field(f) => f.describe(),
                    })
                    .collect();
                format!("matrix[{}]", cells.join(";"))
            }
        }
    }
}

fn natural_bounds(entries: &[Vec<MatrixEntry>]) -> FieldBounds {
    let d = entries.len();
    let all_numbers = entries.iter().flatten().all(|e| matches!(e, MatrixEntry::Number(_)));
    if all_numbers {
        let mut m = [[0.0; 2]; 2];
        for i in 0..d {
            for j in 0..d {
                m[i][j] = entries[i][j].lower();
            }
        }
        let (lo, hi) = spectral_bounds(&m, d);
        return FieldBounds::new(lo, hi);
    }
    // Gershgorin on the symmetric part, row/column sums for the norm.
    let mut alpha = f64::INFINITY;
    let mut row_max: f64 = 0.0;
    let mut col_max: f64 = 0.0;
    for i in 0..d {
        let off: f64 = (0..d)
            .filter(|&j| j != i)
            .map(|j| 0.5 * (entries[i][j].max_abs() + entries[j][i].max_abs()))
            .sum();
        alpha = alpha.min(entries[i][i].lower() - off);
        row_max = row_max.max((0..d).map(|j| entries[i][j].max_abs()).sum());
        col_max = col_max.max((0..d).map(|j| entries[j][i].max_abs()).sum());
    }
    FieldBounds::new(alpha, row_max.max(col_max))
}

/// Evaluates `A(y)`; see [`MatrixField::eval`].
pub fn eval_matrix(field: &MatrixField, point: &[f64]) -> Mat2 {
    field.eval(point)
}
