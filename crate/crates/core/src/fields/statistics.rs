//! Cube averages of `sup_{|ξ|<=t} |f − g|` and their Monte-Carlo expectations.
//!
//! Averages are taken over cubes `Q_R = (−R/2, R/2)^d` with a midpoint rule
//! of `resolution` points per unit length.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::random::trial_seed;
use super::EnergyDensity;
use crate::error::{Error, Result};

fn check_window(dim: usize, r: f64, resolution: usize) -> Result<usize> {
    if dim != 1 && dim != 2 {
        return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("window size must be positive, got {r}")));
    }
    if resolution == 0 {
        return Err(Error::invalid("quadrature resolution must be positive"));
    }
    Ok(((r * resolution as f64).round() as usize).max(1))
}

/// Midpoint-rule average of `integrand` over `Q_R` in dimension `dim`.
fn cube_average(dim: usize, r: f64, m: usize, integrand: impl Fn(&[f64]) -> f64) -> f64 {
    let h = r / m as f64;
    let x0 = -0.5 * r;
    let mut total = 0.0;
    if dim == 1 {
        for i in 0..m {
            total += integrand(&[x0 + (i as f64 + 0.5) * h]);
        }
        total / m as f64
    } else {
        for j in 0..m {
            let y = x0 + (j as f64 + 0.5) * h;
            for i in 0..m {
                total += integrand(&[x0 + (i as f64 + 0.5) * h, y]);
            }
        }
        total / (m * m) as f64
    }
}

/// `R^{-d} ∫_{Q_R} sup_{|ξ|<=t} |f(y,ξ) − g(y,ξ)| dy`.
pub fn mean_abs_statistic(
    f: &EnergyDensity,
    g: &EnergyDensity,
    t: f64,
    r: f64,
    resolution: usize,
    dim: usize,
) -> Result<f64> {
    f.check_same_form(g)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    let m = check_window(dim, r, resolution)?;
    Ok(cube_average(dim, r, m, |y| f.sup_abs_difference(g, y, t)))
}

/// `R^{-d} ∫_{Q_R} (a − b) dy` for scalar forms: the signed mean whose
/// vanishing is strictly weaker than the absolute one.
pub fn signed_mean_statistic(
    f: &EnergyDensity,
    g: &EnergyDensity,
    r: f64,
    resolution: usize,
    dim: usize,
) -> Result<f64> {
    f.check_same_form(g)?;
    if f.scalar_coefficient().is_none() {
        return Err(Error::MixedForms("signed mean needs scalar coefficients".into()));
    }
    let m = check_window(dim, r, resolution)?;
    Ok(cube_average(dim, r, m, |y| f.signed_difference(g, y).unwrap_or(0.0)))
}

/// A random energy density: realizations differ only in the seed fed to
/// their random fields. Families sharing a base seed are paired trial by trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFamily {
    pub template: EnergyDensity,
}

impl FieldFamily {
    pub fn new(template: EnergyDensity) -> Self {
        FieldFamily { template }
    }

    pub fn realize(&self, seed: u64) -> EnergyDensity {
        self.template.with_seed(seed)
    }

    /// Realization used for trial `index` of an experiment seeded with `base`.
    pub fn trial(&self, base: u64, index: usize) -> EnergyDensity {
        self.realize(trial_seed(base, index as u64))
    }
}

/// Sample mean and standard error.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo mean and standard error of [`mean_abs_statistic`] over
/// seed-paired realizations of the two families.
#[allow(clippy::too_many_arguments)]
pub fn expectation_statistic(
    f_family: &FieldFamily,
    g_family: &FieldFamily,
    t: f64,
    r: f64,
    trials: usize,
    seed: u64,
    resolution: usize,
    dim: usize,
) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::invalid(format!("need at least 2 trials, got {trials}")));
    }
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            mean_abs_statistic(
                &f_family.trial(seed, i),
                &g_family.trial(seed, i),
                t,
                r,
                resolution,
                dim,
            )
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_std_error(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{CoefficientField, PerturbationSupport, SparsePerturbationRule};

    #[test]
    fn identical_fields_vanish() {
        let f = EnergyDensity::isotropic(CoefficientField::checkerboard(1.0, 4.0));
        for r in [1.0, 4.0, 16.0] {
            assert_eq!(mean_abs_statistic(&f, &f, 2.0, r, 8, 2).unwrap(), 0.0);
        }
    }

    #[test]
    fn swapped_phases_give_constant_three() {
        let f = EnergyDensity::isotropic(CoefficientField::two_phase(1.0, 4.0));
        let g = EnergyDensity::isotropic(CoefficientField::two_phase(4.0, 1.0));
        for r in [2.0, 4.0, 8.0, 32.0] {
            assert_eq!(mean_abs_statistic(&f, &g, 1.0, r, 16, 1).unwrap(), 3.0);
        }
        // exact t² scaling
        let s1 = mean_abs_statistic(&f, &g, 1.0, 8.0, 16, 2).unwrap();
        let s3 = mean_abs_statistic(&f, &g, 3.0, 8.0, 16, 2).unwrap();
        assert_eq!(s3, 9.0 * s1);
    }

    #[test]
    fn compact_support_decays_like_volume() {
        let base = CoefficientField::constant(2.0);
        let rule = SparsePerturbationRule::new(PerturbationSupport::Ball { radius: 1.0 }, 1.0);
        let f = EnergyDensity::isotropic(base.clone());
        let g = EnergyDensity::isotropic(CoefficientField::perturbed(base, rule));
        for r in [4.0, 8.0, 16.0] {
            let s = mean_abs_statistic(&f, &g, 1.0, r, 64, 1).unwrap();
            assert!((s - 2.0 / r).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn expectation_of_identical_families_is_zero() {
        let fam = FieldFamily::new(EnergyDensity::isotropic(CoefficientField::random_checkerboard(1.0, 4.0, 0.5, 0)));
        assert_eq!(expectation_statistic(&fam, &fam, 1.0, 8.0, 4, 3, 4, 2).unwrap(), (0.0, 0.0));
        assert!(expectation_statistic(&fam, &fam, 1.0, 8.0, 1, 3, 4, 2).is_err());
    }
}
