//! Coefficient fields `a(y)`, matrix fields `A(y)` and the energy densities
//! built from them, plus the averaging statistics used by the stability
//! conditions.

pub mod energy;
pub mod matrix;
pub mod perturbation;
pub mod random;
pub mod statistics;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perforation::geometry::PerforationSet;

pub use energy::EnergyDensity;
pub use matrix::{eval_matrix, MatrixEntry, MatrixField};
pub use perturbation::{PerturbationSupport, SparsePerturbationRule};
pub use statistics::{expectation_statistic, mean_abs_statistic, signed_mean_statistic, FieldFamily};

/// Uniform bounds `alpha <= a(y) <= beta` and the growth exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_p() -> f64 {
    2.0
}

impl FieldBounds {
    pub fn new(alpha: f64, beta: f64) -> Self {
        FieldBounds { alpha, beta, p: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("bounds: alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta >= self.alpha && self.beta.is_finite()) {
            return Err(Error::invalid(format!(
                "bounds: beta ({}) must be at least alpha ({})",
                self.beta, self.alpha
            )));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!("bounds: p must exceed 1, got {}", self.p)));
        }
        Ok(())
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.alpha).min(self.beta)
    }
}

/// One term `amplitude · sin(2π <frequency, y> + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

impl TrigTerm {
    pub fn eval(&self, y: &[f64]) -> f64 {
        let arg: f64 = self.frequency.iter().zip(y).map(|(f, x)| f * x).sum();
        self.amplitude * (2.0 * std::f64::consts::PI * arg + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    Constant {
        value: f64,
    },
    /// 1-periodic step function of `y₁`: `values[i]` on `[breakpoints[i], breakpoints[i+1])`.
    Layered1d {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// 1-periodic piecewise constant on a `k × k` subgrid of the unit cell,
    /// row-major with the first axis fastest. In 1D only the first row is used.
    PeriodicStep {
        k: usize,
        values: Vec<f64>,
    },
    /// `clamp(constant + Σ terms, alpha, beta)`.
    TrigPolynomialClamped {
        constant: f64,
        terms: Vec<TrigTerm>,
    },
    /// `gamma + c` for `y₁ >= 0`, `gamma - c` otherwise.
    HalfSpaceStep {
        gamma: f64,
        c: f64,
    },
    /// iid values on unit lattice cells: `high` with the given probability, else `low`.
    RandomCheckerboard {
        low: f64,
        high: f64,
        probability: f64,
        seed: u64,
        /// Integer shift of the value lattice (the action of the translation group).
        #[serde(default)]
        offset: [i64; 2],
    },
    /// `clamp(base + sign · ã)`.
    Perturbed {
        base: Box<CoefficientField>,
        rule: SparsePerturbationRule,
        #[serde(default = "default_sign")]
        sign: f64,
    },
    /// `1` outside the holes, `1/n` inside.
    PenalizedPerforation {
        set: PerforationSet,
        n: u32,
    },
}

fn default_sign() -> f64 {
    1.0
}

/// A scalar coefficient field with uniform bounds. Every evaluation is
/// clamped to `[alpha, beta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub struct CoefficientField {
    pub bounds: FieldBounds,
    pub kind: FieldKind,
}

#[derive(Serialize, Deserialize)]
struct RawField {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<FieldBounds>,
    #[serde(flatten)]
    kind: FieldKind,
}

impl TryFrom<RawField> for CoefficientField {
    type Error = Error;

    fn try_from(raw: RawField) -> Result<Self> {
        let field = match raw.bounds {
            Some(b) => CoefficientField::with_bounds(raw.kind, b),
            None => CoefficientField::new(raw.kind),
        };
        field.validate()?;
        Ok(field)
    }
}

impl From<CoefficientField> for RawField {
    fn from(f: CoefficientField) -> Self {
        RawField {
            bounds: Some(f.bounds),
            kind: f.kind,
        }
    }
}

fn range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

impl FieldKind {
    /// Range of the unclamped values, when the kind has one.
    fn natural_range(&self) -> (f64, f64) {
        match self {
            FieldKind::Constant { value } => (*value, *value),
            FieldKind::Layered1d { values, .. } | FieldKind::PeriodicStep { values, .. } => {
                range(values)
            }
            FieldKind::TrigPolynomialClamped { constant, terms } => {
                let spread: f64 = terms.iter().map(|t| t.amplitude.abs()).sum();
                (constant - spread, constant + spread)
            }
            FieldKind::HalfSpaceStep { gamma, c } => (gamma - c.abs(), gamma + c.abs()),
            FieldKind::RandomCheckerboard { low, high, .. } => (low.min(*high), low.max(*high)),
            FieldKind::Perturbed { base, rule, sign } => {
                let shift = sign * rule.amplitude;
                (
                    base.bounds.alpha + shift.min(0.0),
                    base.bounds.beta + shift.max(0.0),
                )
            }
            FieldKind::PenalizedPerforation { n, .. } => (1.0 / (*n).max(1) as f64, 1.0),
        }
    }
}

impl CoefficientField {
    /// Field with bounds taken from the natural range of its values.
    pub fn new(kind: FieldKind) -> Self {
        let (lo, hi) = kind.natural_range();
        CoefficientField {
            bounds: FieldBounds::new(lo, hi),
            kind,
        }
    }

    pub fn with_bounds(kind: FieldKind, bounds: FieldBounds) -> Self {
        CoefficientField { bounds, kind }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(FieldKind::Constant { value })
    }

    /// Two-phase layered field: `first` on `[0, 1/2)`, `second` on `[1/2, 1)`.
    pub fn two_phase(first: f64, second: f64) -> Self {
        Self::new(FieldKind::Layered1d {
            breakpoints: vec![0.0, 0.5],
            values: vec![first, second],
        })
    }

    /// 2×2 checkerboard on the unit cell.
    pub fn checkerboard(a: f64, b: f64) -> Self {
        Self::new(FieldKind::PeriodicStep {
            k: 2,
            values: vec![a, b, b, a],
        })
    }

    pub fn half_space_step(gamma: f64, c: f64) -> Self {
        Self::new(FieldKind::HalfSpaceStep { gamma, c })
    }

    pub fn random_checkerboard(low: f64, high: f64, probability: f64, seed: u64) -> Self {
        Self::new(FieldKind::RandomCheckerboard {
            low,
            high,
            probability,
            seed,
            offset: [0, 0],
        })
    }

    pub fn trig_clamped(constant: f64, terms: Vec<TrigTerm>, bounds: FieldBounds) -> Self {
        Self::with_bounds(FieldKind::TrigPolynomialClamped { constant, terms }, bounds)
    }

    pub fn perturbed(base: CoefficientField, rule: SparsePerturbationRule) -> Self {
        Self::new(FieldKind::Perturbed {
            base: Box::new(base),
            rule,
            sign: 1.0,
        })
    }

    /// Perturbed field reusing the bounds of `base` (values clamped into them).
    pub fn perturbed_within(base: CoefficientField, rule: SparsePerturbationRule, bounds: FieldBounds) -> Self {
        Self::with_bounds(
            FieldKind::Perturbed {
                base: Box::new(base),
                rule,
                sign: 1.0,
            },
            bounds,
        )
    }

    pub fn penalized_perforation(set: PerforationSet, n: u32) -> Self {
        Self::new(FieldKind::PenalizedPerforation { set, n })
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        let clamped_by_design = matches!(
            self.kind,
            FieldKind::TrigPolynomialClamped { .. } | FieldKind::Perturbed { .. }
        );
        let (lo, hi) = self.kind.natural_range();
        if !clamped_by_design && (lo < self.bounds.alpha || hi > self.bounds.beta) {
            return Err(Error::invalid(format!(
                "bounds: field values [{lo}, {hi}] exceed [alpha, beta] = [{}, {}]",
                self.bounds.alpha, self.bounds.beta
            )));
        }
        match &self.kind {
            FieldKind::Constant { value } if !value.is_finite() => {
                Err(Error::invalid("constant must be finite"))
            }
            FieldKind::Layered1d { breakpoints, values } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return Err(Error::invalid(
                        "layered field needs one value per breakpoint and at least one layer",
                    ));
                }
                if breakpoints[0] != 0.0
                    || breakpoints.windows(2).any(|w| w[1] <= w[0])
                    || *breakpoints.last().unwrap() >= 1.0
                {
                    return Err(Error::invalid(
                        "layer breakpoints must start at 0, increase strictly and stay below 1",
                    ));
                }
                Ok(())
            }
            FieldKind::PeriodicStep { k, values } => {
                if *k == 0 || values.len() != k * k {
                    return Err(Error::invalid(format!(
                        "periodic step field with k = {k} needs k² = {} values, got {}",
                        k * k,
                        values.len()
                    )));
                }
                Ok(())
            }
            FieldKind::TrigPolynomialClamped { terms, .. } => {
                if terms.iter().any(|t| t.frequency.is_empty() || t.frequency.len() > 2) {
                    return Err(Error::invalid("trig term frequencies must have 1 or 2 components"));
                }
                Ok(())
            }
            FieldKind::RandomCheckerboard { probability, .. } if !(0.0..=1.0).contains(probability) => {
                Err(Error::invalid(format!("probability must lie in [0, 1], got {probability}")))
            }
            FieldKind::Perturbed { base, rule, sign } => {
                base.validate()?;
                rule.validate()?;
                if *sign != 1.0 && *sign != -1.0 {
                    return Err(Error::invalid(format!("perturbation sign must be ±1, got {sign}")));
                }
                Ok(())
            }
            FieldKind::PenalizedPerforation { set, n } => {
                if *n == 0 {
                    return Err(Error::invalid("penalization index n must be at least 1"));
                }
                set.validate()
            }
            _ => Ok(()),
        }
    }

    fn eval_raw(&self, y: &[f64]) -> f64 {
        match &self.kind {
            FieldKind::Constant { value } => *value,
            FieldKind::Layered1d { breakpoints, values } => {
                let t = y[0] - y[0].floor();
                let i = breakpoints.partition_point(|&b| b <= t).saturating_sub(1);
                values[i]
            }
            FieldKind::PeriodicStep { k, values } => {
                let k = *k;
                let idx = |v: f64| (((v - v.floor()) * k as f64) as usize).min(k - 1);
                let i = idx(y[0]);
                let j = if y.len() > 1 { idx(y[1]) } else { 0 };
                values[i + k * j]
            }
            FieldKind::TrigPolynomialClamped { constant, terms } => {
                constant + terms.iter().map(|t| t.eval(y)).sum::<f64>()
            }
            FieldKind::HalfSpaceStep { gamma, c } => {
                if y[0] >= 0.0 {
                    gamma + c
                } else {
                    gamma - c
                }
            }
            FieldKind::RandomCheckerboard {
                low,
                high,
                probability,
                seed,
                offset,
            } => {
                let mut cell = [0i64; 2];
                for (a, v) in y.iter().enumerate() {
                    cell[a] = v.floor() as i64 + offset[a];
                }
                if random::cell_uniform(*seed, &cell[..y.len()]) < *probability {
                    *high
                } else {
                    *low
                }
            }
            FieldKind::Perturbed { base, rule, sign } => base.eval(y) + sign * rule.eval(y),
            FieldKind::PenalizedPerforation { set, n } => {
                if set.contains(y) {
                    1.0 / *n as f64
                } else {
                    1.0
                }
            }
        }
    }

    /// `a(y)`, always within `[alpha, beta]`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.bounds.clamp(self.eval_raw(y))
    }

    /// True when the field is invariant under integer translations.
    pub fn is_one_periodic(&self) -> bool {
        match &self.kind {
            FieldKind::Constant { .. }
            | FieldKind::Layered1d { .. }
            | FieldKind::PeriodicStep { .. } => true,
            FieldKind::TrigPolynomialClamped { terms, .. } => terms
                .iter()
                .all(|t| t.frequency.iter().all(|f| f.fract() == 0.0)),
            FieldKind::PenalizedPerforation { set, .. } => {
                set.perturbation == crate::perforation::geometry::PerforationPerturbation::None
            }
            _ => false,
        }
    }

    /// Copy of a random field realized with another seed. Nested random
    /// fields receive the same seed; deterministic fields are returned unchanged.
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let kind = match &self.kind {
            FieldKind::RandomCheckerboard {
                low,
                high,
                probability,
                offset,
                ..
            } => FieldKind::RandomCheckerboard {
                low: *low,
                high: *high,
                probability: *probability,
                seed: new_seed,
                offset: *offset,
            },
            FieldKind::Perturbed { base, rule, sign } => FieldKind::Perturbed {
                base: Box::new(base.with_seed(new_seed)),
                rule: *rule,
                sign: *sign,
            },
            other => other.clone(),
        };
        CoefficientField {
            bounds: self.bounds,
            kind,
        }
    }

    /// Random checkerboard with its value lattice shifted by `z`:
    /// `shifted(z).eval(y) == eval(y + z)`.
    pub fn shifted(&self, z: [i64; 2]) -> Option<Self> {
        match &self.kind {
            FieldKind::RandomCheckerboard {
                low,
                high,
                probability,
                seed,
                offset,
            } => Some(CoefficientField {
                bounds: self.bounds,
                kind: FieldKind::RandomCheckerboard {
                    low: *low,
                    high: *high,
                    probability: *probability,
                    seed: *seed,
                    offset: [offset[0] + z[0], offset[1] + z[1]],
                },
            }),
            _ => None,
        }
    }

    /// Short human-readable identifier used in tables.
    pub fn describe(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";");
        match &self.kind {
            FieldKind::Constant { value } => format!("constant({value})"),
            FieldKind::Layered1d { values, .. } => format!("layered({})", list(values)),
            FieldKind::PeriodicStep { k, values } => format!("step{k}({})", list(values)),
            FieldKind::TrigPolynomialClamped { terms, .. } => format!("trig{}", terms.len()),
            FieldKind::HalfSpaceStep { gamma, c } => format!("halfspace({gamma};{c})"),
            FieldKind::RandomCheckerboard { low, high, probability, seed, .. } => {
                format!("random({low};{high};p={probability};seed={seed})")
            }
            FieldKind::Perturbed { base, rule, sign } => {
                let s = match rule.support {
                    PerturbationSupport::Ball { radius } => format!("ball{radius}"),
                    PerturbationSupport::PowerOfTwoCells { width } => format!("pow2w{width}"),
                    PerturbationSupport::LpDecay { exponent } => format!("decay{exponent}"),
                };
                let amp = sign * rule.amplitude;
                format!("{}+{s}x{amp}", base.describe())
            }
            FieldKind::PenalizedPerforation { n, .. } => format!("penalized(n={n})"),
        }
    }
}

/// Evaluates `a(y)`; see [`CoefficientField::eval`].
pub fn eval_scalar(field: &CoefficientField, point: &[f64]) -> f64 {
    field.eval(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(eval_scalar(&CoefficientField::constant(2.0), &[0.3, -7.0]), 2.0);
        assert_eq!(CoefficientField::two_phase(1.0, 4.0).eval(&[0.7, 3.2]), 4.0);
        assert_eq!(CoefficientField::two_phase(1.0, 4.0).eval(&[-0.7]), 1.0);
        assert_eq!(CoefficientField::half_space_step(2.0, 0.5).eval(&[-1.0, 0.0]), 1.5);
        assert_eq!(CoefficientField::half_space_step(2.0, 0.5).eval(&[0.0, 0.0]), 2.5);
    }

    #[test]
    fn checkerboard_layout() {
        let c = CoefficientField::checkerboard(1.0, 4.0);
        assert_eq!(c.eval(&[0.25, 0.25]), 1.0);
        assert_eq!(c.eval(&[0.75, 0.25]), 4.0);
        assert_eq!(c.eval(&[0.25, 0.75]), 4.0);
        assert_eq!(c.eval(&[1.75, -0.25]), 1.0);
    }

    #[test]
    fn bounds_violations_are_rejected() {
        let f = CoefficientField::with_bounds(
            FieldKind::Constant { value: 5.0 },
            FieldBounds::new(1.0, 4.0),
        );
        let err = f.validate().unwrap_err().to_string();
        assert!(err.contains("bounds"), "{err}");
        let f = CoefficientField::with_bounds(
            FieldKind::Constant { value: 2.0 },
            FieldBounds::new(3.0, 1.0),
        );
        assert!(f.validate().unwrap_err().to_string().contains("bounds"));
    }

    #[test]
    fn serde_round_trip_fills_bounds() {
        let f: CoefficientField =
            serde_json::from_str(r#"{"kind":"layered1d","breakpoints":[0,0.5],"values":[1,4]}"#).unwrap();
        assert_eq!(f.bounds, FieldBounds::new(1.0, 4.0));
        let text = serde_json::to_string(&f).unwrap();
        let back: CoefficientField = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<CoefficientField>(
            r#"{"kind":"constant","value":2,"bounds":{"alpha":3,"beta":1}}"#
        )
        .is_err());
    }

    #[test]
    fn random_checkerboard_is_cellwise_constant() {
        let f = CoefficientField::random_checkerboard(1.0, 4.0, 0.5, 11);
        for i in -5..5 {
            let v = f.eval(&[i as f64 + 0.1, 2.2]);
            assert_eq!(v, f.eval(&[i as f64 + 0.9, 2.7]));
            assert!(v == 1.0 || v == 4.0);
        }
    }
}
