use serde::{Deserialize, Serialize};

use super::matrix::quadratic_form_norm;
use super::{CoefficientField, MatrixEntry, MatrixField};
use crate::error::{Error, Result};

/// Energy density `f(y, ξ)` in one of the supported forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum EnergyDensity {
    /// `a(y) |ξ|²`
    QuadraticIsotropic { a: CoefficientField },
    /// `<A(y) ξ, ξ>`
    QuadraticMatrix { a: MatrixField },
    /// `a(y) |ξ|^p`
    PPower { a: CoefficientField, p: f64 },
}

impl EnergyDensity {
    pub fn isotropic(a: CoefficientField) -> Self {
        EnergyDensity::QuadraticIsotropic { a }
    }

    pub fn matrix(a: MatrixField) -> Self {
        EnergyDensity::QuadraticMatrix { a }
    }

    pub fn p_power(a: CoefficientField, p: f64) -> Self {
        EnergyDensity::PPower { a, p }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnergyDensity::QuadraticIsotropic { a } => a.validate(),
            EnergyDensity::QuadraticMatrix { a } => a.validate(),
            EnergyDensity::PPower { a, p } => {
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(Error::invalid(format!("exponent p must exceed 1, got {p}")));
                }
                a.validate()
            }
        }
    }

    /// Growth exponent: 2 for quadratic forms.
    pub fn exponent(&self) -> f64 {
        match self {
            EnergyDensity::PPower { p, .. } => *p,
            _ => 2.0,
        }
    }

    /// `(alpha, beta)` growth bounds.
    pub fn growth_bounds(&self) -> (f64, f64) {
        match self {
            EnergyDensity::QuadraticIsotropic { a } | EnergyDensity::PPower { a, .. } => {
                (a.bounds.alpha, a.bounds.beta)
            }
            EnergyDensity::QuadraticMatrix { a } => (a.bounds.alpha, a.bounds.beta),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        !matches!(self, EnergyDensity::PPower { .. })
    }

    /// Scalar coefficient of isotropic and p-power forms.
    pub fn scalar_coefficient(&self) -> Option<&CoefficientField> {
        match self {
            EnergyDensity::QuadraticIsotropic { a } | EnergyDensity::PPower { a, .. } => Some(a),
            EnergyDensity::QuadraticMatrix { .. } => None,
        }
    }

    pub fn eval(&self, y: &[f64], xi: &[f64]) -> f64 {
        let n2: f64 = xi.iter().map(|v| v * v).sum();
        match self {
            EnergyDensity::QuadraticIsotropic { a } => a.eval(y) * n2,
            EnergyDensity::PPower { a, p } => a.eval(y) * n2.powf(0.5 * p),
            EnergyDensity::QuadraticMatrix { a } => {
                let m = a.eval(y);
                let d = xi.len();
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += xi[i] * m[i][j] * xi[j];
                    }
                }
                s
            }
        }
    }

    /// Ensures both densities have the same form (and exponent).
    pub fn check_same_form(&self, other: &EnergyDensity) -> Result<()> {
        match (self, other) {
            (EnergyDensity::QuadraticIsotropic { .. }, EnergyDensity::QuadraticIsotropic { .. }) => Ok(()),
            (EnergyDensity::QuadraticMatrix { a }, EnergyDensity::QuadraticMatrix { a: b }) => {
                if a.dim() != b.dim() {
                    return Err(Error::MixedForms(format!(
                        "matrix sizes {} and {} differ",
                        a.dim(),
                        b.dim()
                    )));
                }
                Ok(())
            }
            (EnergyDensity::PPower { p, .. }, EnergyDensity::PPower { p: q, .. }) => {
                if p != q {
                    return Err(Error::MixedForms(format!("exponents {p} and {q} differ")));
                }
                Ok(())
            }
            _ => Err(Error::MixedForms(format!(
                "{} vs {}",
                self.form_name(),
                other.form_name()
            ))),
        }
    }

    pub fn form_name(&self) -> &'static str {
        match self {
            EnergyDensity::QuadraticIsotropic { .. } => "quadratic_isotropic",
            EnergyDensity::QuadraticMatrix { .. } => "quadratic_matrix",
            EnergyDensity::PPower { .. } => "p_power",
        }
    }

    /// `sup_{|ξ| <= t} |f(y, ξ) − g(y, ξ)|`, computed in closed form.
    /// Callers must have checked that the forms agree.
    pub fn sup_abs_difference(&self, other: &EnergyDensity, y: &[f64], t: f64) -> f64 {
        match (self, other) {
            (EnergyDensity::QuadraticIsotropic { a }, EnergyDensity::QuadraticIsotropic { a: b }) => {
                t * t * (a.eval(y) - b.eval(y)).abs()
            }
            (EnergyDensity::PPower { a, p }, EnergyDensity::PPower { a: b, .. }) => {
                t.powf(*p) * (a.eval(y) - b.eval(y)).abs()
            }
            (EnergyDensity::QuadraticMatrix { a }, EnergyDensity::QuadraticMatrix { a: b }) => {
                let (ma, mb) = (a.eval(y), b.eval(y));
                let mut d = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        d[i][j] = ma[i][j] - mb[i][j];
                    }
                }
                t * t * quadratic_form_norm(&d, a.dim())
            }
            _ => f64::NAN,
        }
    }

    /// Signed difference of the scalar coefficients, `a(y) − b(y)`.
    pub fn signed_difference(&self, other: &EnergyDensity, y: &[f64]) -> Option<f64> {
        Some(self.scalar_coefficient()?.eval(y) - other.scalar_coefficient()?.eval(y))
    }

    /// Same density with every random field realized from `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            EnergyDensity::QuadraticIsotropic { a } => EnergyDensity::QuadraticIsotropic { a: a.with_seed(seed) },
            EnergyDensity::PPower { a, p } => EnergyDensity::PPower { a: a.with_seed(seed), p: *p },
            EnergyDensity::QuadraticMatrix { a } => {
                let mut m = a.clone();
                for e in m.entries.iter_mut().flatten() {
                    if let MatrixEntry::Field(f) = e {
                        *f = f.with_seed(seed);
                    }
                }
                EnergyDensity::QuadraticMatrix { a: m }
            }
        }
    }

    /// The quadratic form as a matrix field (isotropic densities become `a I`).
    pub fn as_matrix_field(&self, dim: usize) -> Option<MatrixField> {
        match self {
            EnergyDensity::QuadraticIsotropic { a } => Some(MatrixField::isotropic(a.clone(), dim)),
            EnergyDensity::QuadraticMatrix { a } => Some(a.clone()),
            EnergyDensity::PPower { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            EnergyDensity::QuadraticIsotropic { a } => a.describe(),
            EnergyDensity::QuadraticMatrix { a } => a.describe(),
            EnergyDensity::PPower { a, p } => format!("{}|p={p}", a.describe()),
        }
    }
}
