//! Seed-paired Monte-Carlo comparison of two random coefficient families.
//!
//! Each trial realizes both families with the same seed, homogenizes them on
//! a periodic box `(−R/2, R/2)^d`, and records the paired difference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trace_verdict, ConditionVerdict};
use crate::cell::homogenize_matrix_on_period;
use crate::error::{Error, Result};
use crate::fields::statistics::mean_and_std_error;
use crate::fields::{expectation_statistic, FieldFamily};
use crate::numerics::SolverConfig;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticConfig {
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    /// Side of the periodic box.
    pub box_size: f64,
    /// Elements per unit length in the box.
    pub resolution: usize,
    /// Windows for the expectation statistic.
    pub r_list: Vec<f64>,
    pub quadrature_resolution: usize,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl StochasticConfig {
    pub fn new(dim: usize, trials: usize, seed: u64) -> Self {
        StochasticConfig {
            dim,
            trials,
            seed,
            box_size: 32.0,
            resolution: 4,
            r_list: vec![8.0, 16.0, 32.0],
            quadrature_resolution: 4,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.trials < 8 {
            return Err(Error::invalid(format!("need at least 8 trials, got {}", self.trials)));
        }
        if !(self.box_size >= 1.0 && self.box_size.fract() == 0.0) {
            return Err(Error::invalid("box size must be a positive integer"));
        }
        if self.r_list.len() < 3 || self.r_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("statistic windows must be strictly increasing, at least 3"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticReport {
    pub f_id: String,
    pub g_id: String,
    pub trials: usize,
    pub seed: u64,
    /// Per-trial homogenized matrices, in trial order.
    pub samples_f: Vec<Vec<Vec<f64>>>,
    pub samples_g: Vec<Vec<Vec<f64>>>,
    pub mean_f: Vec<Vec<f64>>,
    pub std_error_f: Vec<Vec<f64>>,
    pub mean_g: Vec<Vec<f64>>,
    pub std_error_g: Vec<Vec<f64>>,
    /// Mean and standard error of the paired differences `A_f − A_g`.
    pub paired_mean: Vec<Vec<f64>>,
    pub paired_std_error: Vec<Vec<f64>>,
    /// Paired mean entry of largest magnitude, with its sign.
    pub discrepancy: f64,
    /// `(R, mean, standard error)` of the expectation statistic.
    pub expectation_trace: Vec<(f64, f64, f64)>,
    pub condition_verdict: ConditionVerdict,
    /// Every entry satisfies `|mean_f − mean_g| ≤ 1.96 (se_f + se_g)`.
    pub intervals_overlap: bool,
    pub diagnostics: Vec<String>,
}

fn entrywise<F: Fn(&[f64]) -> (f64, f64)>(samples: &[Vec<Vec<f64>>], d: usize, stat: F) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut mean = vec![vec![0.0; d]; d];
    let mut se = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let col: Vec<f64> = samples.iter().map(|m| m[i][j]).collect();
            (mean[i][j], se[i][j]) = stat(&col);
        }
    }
    (mean, se)
}

/// Runs the paired experiment. Swapping the families negates the paired
/// differences exactly, since each is the negation of the same floating
/// point subtraction and the reductions run in trial order.
pub fn stochastic_stability_experiment(
    f_family: &FieldFamily,
    g_family: &FieldFamily,
    config: &StochasticConfig,
) -> Result<StochasticReport> {
    config.validate()?;
    f_family.template.check_same_form(&g_family.template)?;
    let d = config.dim;
    let homogenize = |fam: &FieldFamily, i: usize| -> Result<Vec<Vec<f64>>> {
        let a = fam
            .trial(config.seed, i)
            .as_matrix_field(d)
            .ok_or_else(|| Error::invalid("stochastic experiments need quadratic densities"))?;
        let m = homogenize_matrix_on_period(
            &a,
            &vec![-0.5 * config.box_size; d],
            config.box_size,
            config.resolution,
            &config.solver,
        )
        .map_err(|e| e.at_stage(format!("trial {i}")))?;
        Ok(m.matrix().expect("matrix result").clone())
    };
    type Pair = (Vec<Vec<f64>>, Vec<Vec<f64>>);
    let pairs: Vec<Pair> = (0..config.trials)
        .into_par_iter()
        .map(|i| Ok((homogenize(f_family, i)?, homogenize(g_family, i)?)))
        .collect::<Result<_>>()?;
    let (samples_f, samples_g): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let diffs: Vec<Vec<Vec<f64>>> = samples_f
        .iter()
        .zip(&samples_g)
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
                .collect()
        })
        .collect();
    let (mean_f, std_error_f) = entrywise(&samples_f, d, mean_and_std_error);
    let (mean_g, std_error_g) = entrywise(&samples_g, d, mean_and_std_error);
    let (paired_mean, paired_std_error) = entrywise(&diffs, d, mean_and_std_error);
    let discrepancy = paired_mean
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| if v.abs() > m.abs() { v } else { m });
    let expectation_trace: Vec<(f64, f64, f64)> = config
        .r_list
        .iter()
        .map(|&r| {
            let (m, se) = expectation_statistic(
                f_family,
                g_family,
                1.0,
                r,
                config.trials,
                config.seed,
                config.quadrature_resolution,
                d,
            )?;
            Ok((r, m, se))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = expectation_trace.iter().map(|t| t.1).collect();
    let condition_verdict = trace_verdict(&values);
    let mut intervals_overlap = true;
    for i in 0..d {
        for j in 0..d {
            let gap = (mean_f[i][j] - mean_g[i][j]).abs();
            intervals_overlap &= gap <= Z95 * (std_error_f[i][j] + std_error_g[i][j]);
        }
    }
    let mut diagnostics = Vec::new();
    if condition_verdict == ConditionVerdict::Vanishing && !intervals_overlap {
        diagnostics.push(
            "soundness guard: expectation statistic vanishes but the homogenized intervals do not overlap".into(),
        );
    }
    Ok(StochasticReport {
        f_id: f_family.template.describe(),
        g_id: g_family.template.describe(),
        trials: config.trials,
        seed: config.seed,
        samples_f,
        samples_g,
        mean_f,
        std_error_f,
        mean_g,
        std_error_g,
        paired_mean,
        paired_std_error,
        discrepancy,
        expectation_trace,
        condition_verdict,
        intervals_overlap,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{CoefficientField, EnergyDensity};

    #[test]
    fn identical_families_match_per_seed() {
        let fam = FieldFamily::new(EnergyDensity::isotropic(CoefficientField::random_checkerboard(1.0, 4.0, 0.5, 0)));
        let mut cfg = StochasticConfig::new(2, 8, 11);
        cfg.box_size = 8.0;
        cfg.r_list = vec![2.0, 4.0, 8.0];
        let r = stochastic_stability_experiment(&fam, &fam, &cfg).unwrap();
        assert_eq!(r.samples_f, r.samples_g);
        assert_eq!(r.discrepancy, 0.0);
        assert!(r.intervals_overlap);
        assert_eq!(r.condition_verdict, ConditionVerdict::Vanishing);
    }

    #[test]
    fn too_few_trials() {
        let fam = FieldFamily::new(EnergyDensity::isotropic(CoefficientField::random_checkerboard(1.0, 4.0, 0.5, 0)));
        assert!(stochastic_stability_experiment(&fam, &fam, &StochasticConfig::new(2, 4, 0)).is_err());
    }
}
