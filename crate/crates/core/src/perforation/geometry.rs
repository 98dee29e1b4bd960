use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hole per unit cell `k + [0,1)^d`, centred at `k + 1/2` before perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum HolePattern {
    NoHoles,
    Balls { radius: f64 },
    Squares { half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PerforationPerturbation {
    None,
    /// Hole in cell `k` moved along the first axis by `min(max_shift, 1/|k|)`.
    DecayingShift { max_shift: f64 },
    /// Holes removed from cells whose every index is a power of two.
    SparseRemoval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerforationSet {
    pub pattern: HolePattern,
    #[serde(default = "no_perturbation")]
    pub perturbation: PerforationPerturbation,
}

fn no_perturbation() -> PerforationPerturbation {
    PerforationPerturbation::None
}

/// `z >= 1` and a power of two.
pub fn is_power_of_two(z: i64) -> bool {
    z >= 1 && (z & (z - 1)) == 0
}

impl PerforationSet {
    pub fn periodic(pattern: HolePattern) -> Self {
        PerforationSet {
            pattern,
            perturbation: PerforationPerturbation::None,
        }
    }

    pub fn balls(radius: f64) -> Self {
        Self::periodic(HolePattern::Balls { radius })
    }

    pub fn empty() -> Self {
        Self::periodic(HolePattern::NoHoles)
    }

    pub fn with_perturbation(mut self, perturbation: PerforationPerturbation) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn unperturbed(&self) -> Self {
        Self::periodic(self.pattern)
    }

    fn extent(&self) -> f64 {
        match self.pattern {
            HolePattern::NoHoles => 0.0,
            HolePattern::Balls { radius } => radius,
            HolePattern::Squares { half_width } => half_width,
        }
    }

    /// Holes must stay strictly inside their cell so the complement stays connected.
    pub fn validate(&self) -> Result<()> {
        let r = self.extent();
        if !matches!(self.pattern, HolePattern::NoHoles) && !(r > 0.0 && r < 0.5) {
            return Err(Error::invalid(format!(
                "hole size must lie in (0, 1/2) so that holes do not touch, got {r}"
            )));
        }
        if let PerforationPerturbation::DecayingShift { max_shift } = self.perturbation {
            if !(max_shift >= 0.0 && r + max_shift < 0.5) {
                return Err(Error::invalid(format!(
                    "shifted holes must stay inside their cell: size {r} + shift {max_shift} >= 1/2"
                )));
            }
        }
        Ok(())
    }

    pub fn has_holes(&self) -> bool {
        !matches!(self.pattern, HolePattern::NoHoles)
    }

    /// Displacement of the hole in cell `k` along the first axis.
    pub fn shift(&self, cell: &[i64]) -> f64 {
        match self.perturbation {
            PerforationPerturbation::DecayingShift { max_shift } => {
                let norm = cell.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
                if norm == 0.0 {
                    max_shift
                } else {
                    max_shift.min(1.0 / norm)
                }
            }
            _ => 0.0,
        }
    }

    pub fn hole_removed(&self, cell: &[i64]) -> bool {
        matches!(self.perturbation, PerforationPerturbation::SparseRemoval)
            && cell.iter().all(|&k| is_power_of_two(k))
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        if !self.has_holes() {
            return false;
        }
        let mut cell = [0i64; 2];
        let mut local = [0.0; 2];
        for (a, &ya) in y.iter().enumerate() {
            let k = ya.floor();
            cell[a] = k as i64;
            local[a] = ya - k - 0.5;
        }
        let cell = &cell[..y.len()];
        if self.hole_removed(cell) {
            return false;
        }
        local[0] -= self.shift(cell);
        let local = &local[..y.len()];
        match self.pattern {
            HolePattern::NoHoles => false,
            HolePattern::Balls { radius } => {
                local.iter().map(|v| v * v).sum::<f64>() < radius * radius
            }
            HolePattern::Squares { half_width } => local.iter().all(|v| v.abs() < half_width),
        }
    }

    /// Measure of one hole in dimension `dim`.
    pub fn hole_volume(&self, dim: usize) -> f64 {
        match self.pattern {
            HolePattern::NoHoles => 0.0,
            HolePattern::Balls { radius } => {
                if dim == 1 {
                    2.0 * radius
                } else {
                    std::f64::consts::PI * radius * radius
                }
            }
            HolePattern::Squares { half_width } => (2.0 * half_width).powi(dim as i32),
        }
    }

    /// Perforated volume fraction of the unperturbed periodic pattern.
    pub fn periodic_fraction(&self, dim: usize) -> f64 {
        1.0 - self.hole_volume(dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_of_two() {
        let p: Vec<i64> = (-4..=17).filter(|&z| is_power_of_two(z)).collect();
        assert_eq!(p, vec![1, 2, 4, 8, 16]);
    }

    #[test]
    fn membership() {
        let e = PerforationSet::balls(0.25);
        assert!(e.contains(&[0.5, 0.5]));
        assert!(e.contains(&[-2.5, 3.6]));
        assert!(!e.contains(&[0.1, 0.5]));
        let s = e.with_perturbation(PerforationPerturbation::SparseRemoval);
        assert!(!s.contains(&[1.5, 2.5]));
        assert!(s.contains(&[3.5, 2.5]));
        let d = e.with_perturbation(PerforationPerturbation::DecayingShift { max_shift: 0.1 });
        // cell (0,0) shifts by the full 0.1
        assert!(d.contains(&[0.8, 0.5]));
        assert!(!e.contains(&[0.8, 0.5]));
    }

    #[test]
    fn validation() {
        assert!(PerforationSet::balls(0.5).validate().is_err());
        assert!(PerforationSet::balls(0.25).validate().is_ok());
        let d = PerforationSet::balls(0.45)
            .with_perturbation(PerforationPerturbation::DecayingShift { max_shift: 0.1 });
        assert!(d.validate().is_err());
    }
}
