use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perforation::geometry::is_power_of_two;

/// Where a sparse perturbation lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "support", rename_all = "snake_case")]
pub enum PerturbationSupport {
    /// `|y| < radius`.
    Ball { radius: f64 },
    /// `z + [0, width)^d` for lattice cells `z` whose every index is a power of two.
    PowerOfTwoCells { width: f64 },
    /// Everywhere, decaying like `(1 + |y|)^(-exponent)`.
    LpDecay { exponent: f64 },
}

/// A perturbation `ã` whose mean absolute value over growing cubes vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsePerturbationRule {
    #[serde(flatten)]
    pub support: PerturbationSupport,
    pub amplitude: f64,
}

impl SparsePerturbationRule {
    pub fn new(support: PerturbationSupport, amplitude: f64) -> Self {
        SparsePerturbationRule { support, amplitude }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("perturbation amplitude must be finite"));
        }
        match self.support {
            PerturbationSupport::Ball { radius } if !(radius > 0.0 && radius.is_finite()) => {
                Err(Error::invalid(format!("ball radius must be positive, got {radius}")))
            }
            PerturbationSupport::PowerOfTwoCells { width } if !(width > 0.0 && width <= 1.0) => {
                Err(Error::invalid(format!("cell width must lie in (0, 1], got {width}")))
            }
            PerturbationSupport::LpDecay { exponent } if !(exponent > 0.0) => Err(Error::invalid(
                format!("decay exponent must be positive, got {exponent}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        match self.support {
            PerturbationSupport::Ball { radius } => {
                if r2 < radius * radius {
                    self.amplitude
                } else {
                    0.0
                }
            }
            PerturbationSupport::PowerOfTwoCells { width } => {
                let inside = y.iter().all(|&v| {
                    let z = v.floor();
                    is_power_of_two(z as i64) && v - z < width
                });
                if inside {
                    self.amplitude
                } else {
                    0.0
                }
            }
            PerturbationSupport::LpDecay { exponent } => {
                self.amplitude * (1.0 + r2.sqrt()).powf(-exponent)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supports() {
        let b = SparsePerturbationRule::new(PerturbationSupport::Ball { radius: 1.0 }, 2.0);
        assert_eq!(b.eval(&[0.5, 0.5]), 2.0);
        assert_eq!(b.eval(&[1.0, 0.5]), 0.0);
        let p = SparsePerturbationRule::new(PerturbationSupport::PowerOfTwoCells { width: 0.5 }, 1.0);
        assert_eq!(p.eval(&[4.25, 1.1]), 1.0);
        assert_eq!(p.eval(&[4.75, 1.1]), 0.0);
        assert_eq!(p.eval(&[3.25, 1.1]), 0.0);
        assert_eq!(p.eval(&[-4.25]), 0.0);
        let l = SparsePerturbationRule::new(PerturbationSupport::LpDecay { exponent: 1.0 }, 1.0);
        assert_eq!(l.eval(&[3.0, 4.0]), 1.0 / 6.0);
    }
}
