//! Stability experiments: pair two energy densities, evaluate the averaged
//! difference statistic, compare their homogenized outputs and classify
//! the outcome.
//!
//! The executable content of the stability results is the soundness guard:
//! a vanishing statistic together with differing limits is never reported
//! silently.

pub mod approximation;
pub mod counterexamples;
pub mod stochastic;

pub use approximation::{run_approximation_scheme, ApproximationConfig, ApproximationEntry, ApproximationTrace};
pub use counterexamples::{counterexample_suite, CounterexampleConfig, CounterexampleSuite};
pub use stochastic::{stochastic_stability_experiment, StochasticConfig, StochasticReport};

use serde::{Deserialize, Serialize};

use crate::cell::{homogenize_matrix, homogenize_p_energy_samples, HomogenizedForm, HomogenizedResult};
use crate::error::{Error, Result};
use crate::fields::{mean_abs_statistic, signed_mean_statistic, EnergyDensity};
use crate::numerics::SolverConfig;
use crate::rve::{window_sequence, WindowEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticPoint {
    pub t: f64,
    pub r: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionVerdict {
    Vanishing,
    NonVanishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conclusion {
    ConditionHoldsLimitsAgree,
    ConditionFailsLimitsAgree,
    ConditionFailsLimitsDiffer,
    /// Contradicts the stability theorem; always carries the soundness flag.
    ConditionHoldsLimitsDiffer,
}

impl Conclusion {
    pub fn name(&self) -> &'static str {
        match self {
            Conclusion::ConditionHoldsLimitsAgree => "ConditionHoldsLimitsAgree",
            Conclusion::ConditionFailsLimitsAgree => "ConditionFailsLimitsAgree",
            Conclusion::ConditionFailsLimitsDiffer => "ConditionFailsLimitsDiffer",
            Conclusion::ConditionHoldsLimitsDiffer => "ConditionHoldsLimitsDiffer",
        }
    }
}

/// How homogenized outputs are estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum HomogMethod {
    /// Unit-cell problems; both densities must be 1-periodic.
    Cell { resolution: usize },
    /// Window estimates at each center; the largest window is the estimate.
    Windows {
        centers: Vec<Vec<f64>>,
        window_sizes: Vec<f64>,
        resolution_per_unit: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub dim: usize,
    /// `t` values for the statistic; empty selects `{1}` for quadratic forms
    /// and `{1, 2}` for p-energies.
    #[serde(default)]
    pub t_list: Vec<f64>,
    pub r_list: Vec<f64>,
    /// Midpoint points per unit length for the statistic.
    pub quadrature_resolution: usize,
    pub method: HomogMethod,
    /// Sample directions; empty selects the coordinate vectors.
    #[serde(default)]
    pub xis: Vec<Vec<f64>>,
    /// Fixed comparison tolerance; `None` derives it from observed convergence gaps.
    #[serde(default)]
    pub tolerance: Option<f64>,
    pub tolerance_floor: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl StabilityConfig {
    pub fn cell(dim: usize, resolution: usize) -> Self {
        StabilityConfig {
            dim,
            t_list: Vec::new(),
            r_list: vec![8.0, 16.0, 32.0, 64.0],
            quadrature_resolution: 16,
            method: HomogMethod::Cell { resolution },
            xis: Vec::new(),
            tolerance: None,
            tolerance_floor: 1e-6,
            solver: SolverConfig::default(),
        }
    }

    pub fn windows(dim: usize, centers: Vec<Vec<f64>>, window_sizes: Vec<f64>, resolution_per_unit: usize) -> Self {
        StabilityConfig {
            method: HomogMethod::Windows {
                centers,
                window_sizes,
                resolution_per_unit,
            },
            ..Self::cell(dim, 2)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.r_list.len() < 3 || self.r_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("statistic windows must be strictly increasing, at least 3"));
        }
        if self.t_list.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::invalid("t values must be positive"));
        }
        if self.xis.iter().any(|x| x.len() != self.dim || x.iter().all(|v| *v == 0.0)) {
            return Err(Error::invalid("sample directions must be nonzero vectors of the field dimension"));
        }
        if !(self.tolerance_floor >= 0.0) || self.tolerance.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        match &self.method {
            HomogMethod::Cell { resolution } if *resolution < 4 => {
                Err(Error::invalid("cell resolution must be at least 4"))
            }
            HomogMethod::Windows { centers, .. } if centers.is_empty() || centers.iter().any(|c| c.len() != self.dim) => {
                Err(Error::invalid("window centers must be points of the field dimension"))
            }
            _ => self.solver.validate(),
        }
    }

    fn t_values(&self, f: &EnergyDensity) -> Vec<f64> {
        if !self.t_list.is_empty() {
            self.t_list.clone()
        } else if f.is_quadratic() {
            vec![1.0]
        } else {
            vec![1.0, 2.0]
        }
    }

    fn directions(&self) -> Vec<Vec<f64>> {
        if !self.xis.is_empty() {
            return self.xis.clone();
        }
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomogenizedOutput {
    Cell { result: HomogenizedResult },
    Windows { estimates: Vec<WindowEstimate> },
}

impl HomogenizedOutput {
    /// Estimated `f_hom(ξ)` for each sample direction, per center.
    fn values(&self) -> Vec<f64> {
        match self {
            HomogenizedOutput::Cell { result } => match &result.form {
                HomogenizedForm::Matrix(m) => m.iter().flatten().copied().collect(),
                HomogenizedForm::EnergySamples(s) => s.iter().map(|(_, v)| *v).collect(),
            },
            HomogenizedOutput::Windows { estimates } => estimates.iter().map(WindowEstimate::last).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub name: String,
    pub f_id: String,
    pub g_id: String,
    pub statistic_trace: Vec<StatisticPoint>,
    pub condition_verdict: ConditionVerdict,
    /// `(R, R^{-d} ∫_{Q_R} (a − b))` for scalar forms.
    pub signed_mean_trace: Vec<(f64, f64)>,
    pub homogenized_f: HomogenizedOutput,
    pub homogenized_g: HomogenizedOutput,
    /// Largest difference between window limits at different centers
    /// (0 for cell estimates); a large spread means the density is not
    /// homogenizable.
    pub center_spread_f: f64,
    pub center_spread_g: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub conclusion: Conclusion,
    pub soundness_violation: bool,
    pub diagnostics: Vec<String>,
}

/// `Vanishing` when the trace is identically zero, or strictly decreasing
/// over the last three windows with the final value below half the first.
pub fn trace_verdict(values: &[f64]) -> ConditionVerdict {
    if values.iter().all(|v| *v <= 1e-14) {
        return ConditionVerdict::Vanishing;
    }
    let tail = &values[values.len().saturating_sub(3)..];
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let first = values[0];
    let last = values[values.len() - 1];
    if decreasing && last < 0.5 * first {
        ConditionVerdict::Vanishing
    } else {
        ConditionVerdict::NonVanishing
    }
}

/// Classifies a pair; the fourth case raises the soundness flag.
pub fn classify(verdict: ConditionVerdict, discrepancy: f64, tolerance: f64) -> (Conclusion, bool) {
    let agree = discrepancy <= tolerance;
    match (verdict, agree) {
        (ConditionVerdict::Vanishing, true) => (Conclusion::ConditionHoldsLimitsAgree, false),
        (ConditionVerdict::Vanishing, false) => (Conclusion::ConditionHoldsLimitsDiffer, true),
        (ConditionVerdict::NonVanishing, true) => (Conclusion::ConditionFailsLimitsAgree, false),
        (ConditionVerdict::NonVanishing, false) => (Conclusion::ConditionFailsLimitsDiffer, false),
    }
}

fn statistic_trace(
    f: &EnergyDensity,
    g: &EnergyDensity,
    config: &StabilityConfig,
) -> Result<(Vec<StatisticPoint>, ConditionVerdict)> {
    let mut trace = Vec::new();
    let mut verdict = ConditionVerdict::Vanishing;
    for t in config.t_values(f) {
        let values: Vec<f64> = config
            .r_list
            .iter()
            .map(|&r| mean_abs_statistic(f, g, t, r, config.quadrature_resolution, config.dim))
            .collect::<Result<_>>()?;
        if trace_verdict(&values) == ConditionVerdict::NonVanishing {
            verdict = ConditionVerdict::NonVanishing;
        }
        trace.extend(config.r_list.iter().zip(&values).map(|(&r, &value)| StatisticPoint { t, r, value }));
    }
    Ok((trace, verdict))
}

/// Homogenized output and its convergence gap (resolution halving for
/// cells, the Cauchy gap for windows).
fn homogenize(f: &EnergyDensity, config: &StabilityConfig) -> Result<(HomogenizedOutput, f64)> {
    let xis = config.directions();
    match &config.method {
        HomogMethod::Cell { resolution } => {
            let run = |res: usize| -> Result<HomogenizedResult> {
                match f {
                    EnergyDensity::PPower { a, p } => homogenize_p_energy_samples(a, *p, &xis, res, &config.solver),
                    _ => homogenize_matrix(&f.as_matrix_field(config.dim).expect("quadratic"), res, &config.solver),
                }
            };
            let fine = run(*resolution)?;
            let coarse = run(resolution / 2)?;
            let fv = HomogenizedOutput::Cell { result: fine.clone() }.values();
            let cv = HomogenizedOutput::Cell { result: coarse }.values();
            let gap = fv.iter().zip(&cv).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            Ok((HomogenizedOutput::Cell { result: fine }, gap))
        }
        HomogMethod::Windows {
            centers,
            window_sizes,
            resolution_per_unit,
        } => {
            let mut estimates = Vec::new();
            for x0 in centers {
                for xi in &xis {
                    estimates.push(window_sequence(f, x0, xi, window_sizes, *resolution_per_unit, &config.solver)?);
                }
            }
            let gap = estimates.iter().fold(0.0f64, |m, e| m.max(e.cauchy_gap));
            Ok((HomogenizedOutput::Windows { estimates }, gap))
        }
    }
}

/// Largest spread of window limits across centers, per direction,
/// normalized by `|ξ|^p`.
fn center_spread(out: &HomogenizedOutput, n_dirs: usize, p: f64) -> f64 {
    let HomogenizedOutput::Windows { estimates } = out else {
        return 0.0;
    };
    let mut spread = 0.0f64;
    for d in 0..n_dirs {
        let vals: Vec<&WindowEstimate> = estimates.iter().skip(d).step_by(n_dirs).collect();
        let norm = xi_norm(&vals[0].xi).powf(p);
        let lo = vals.iter().map(|e| e.last()).fold(f64::INFINITY, f64::min);
        let hi = vals.iter().map(|e| e.last()).fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max((hi - lo) / norm);
    }
    spread
}

fn xi_norm(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs the full comparison of `f` and `g`.
pub fn run_stability_pair(
    name: &str,
    f: &EnergyDensity,
    g: &EnergyDensity,
    config: &StabilityConfig,
) -> Result<StabilityReport> {
    config.validate()?;
    f.validate()?;
    g.validate()?;
    f.check_same_form(g)?;
    let (trace, verdict) = statistic_trace(f, g, config).map_err(|e| e.at_stage("statistic"))?;
    let signed_mean_trace = if f.scalar_coefficient().is_some() {
        config
            .r_list
            .iter()
            .map(|&r| Ok((r, signed_mean_statistic(f, g, r, config.quadrature_resolution, config.dim)?)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let (hf, gap_f) = homogenize(f, config).map_err(|e| e.at_stage("homogenize f"))?;
    let (hg, gap_g) = homogenize(g, config).map_err(|e| e.at_stage("homogenize g"))?;
    let p = f.exponent();
    let xis = config.directions();
    let (vf, vg) = (hf.values(), hg.values());
    // Window values are normalized by |ξ|^p; matrix entries are compared directly.
    let weights: Vec<f64> = match &hf {
        HomogenizedOutput::Cell {
            result: HomogenizedResult {
                form: HomogenizedForm::EnergySamples(s),
                ..
            },
        } => s.iter().map(|(xi, _)| xi_norm(xi).powf(p)).collect(),
        HomogenizedOutput::Cell { .. } => vec![1.0; vf.len()],
        HomogenizedOutput::Windows { estimates } => estimates.iter().map(|e| xi_norm(&e.xi).powf(p)).collect(),
    };
    let discrepancy = vf
        .iter()
        .zip(&vg)
        .zip(&weights)
        .fold(0.0f64, |m, ((a, b), w)| m.max((a - b).abs() / w));
    let tolerance = config
        .tolerance
        .unwrap_or(3.0 * gap_f.max(gap_g) + config.tolerance_floor);
    let spread_f = center_spread(&hf, xis.len(), p);
    let spread_g = center_spread(&hg, xis.len(), p);
    let (conclusion, soundness_violation) = classify(verdict, discrepancy, tolerance);
    let mut diagnostics = Vec::new();
    if soundness_violation {
        diagnostics.push(format!(
            "soundness guard: vanishing statistic but discrepancy {discrepancy:e} exceeds tolerance {tolerance:e}; numerical failure"
        ));
    }
    for (label, spread) in [("f", spread_f), ("g", spread_g)] {
        if spread > tolerance {
            diagnostics.push(format!(
                "{label}: window limits depend on the center (spread {spread:.6}); not homogenizable"
            ));
        }
    }
    Ok(StabilityReport {
        name: name.to_string(),
        f_id: f.describe(),
        g_id: g.describe(),
        statistic_trace: trace,
        condition_verdict: verdict,
        signed_mean_trace,
        homogenized_f: hf,
        homogenized_g: hg,
        center_spread_f: spread_f,
        center_spread_g: spread_g,
        discrepancy,
        tolerance,
        conclusion,
        soundness_violation,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::CoefficientField;

    #[test]
    fn verdicts() {
        assert_eq!(trace_verdict(&[0.0, 0.0, 0.0]), ConditionVerdict::Vanishing);
        assert_eq!(trace_verdict(&[1.0, 0.6, 0.4]), ConditionVerdict::Vanishing);
        assert_eq!(trace_verdict(&[1.0, 0.8, 0.6]), ConditionVerdict::NonVanishing);
        assert_eq!(trace_verdict(&[3.0, 3.0, 3.0]), ConditionVerdict::NonVanishing);
        assert_eq!(trace_verdict(&[1.0, 0.3, 0.35]), ConditionVerdict::NonVanishing);
        // only the last three windows need to decrease
        assert_eq!(trace_verdict(&[1.0, 1.2, 0.4, 0.3]), ConditionVerdict::Vanishing);
    }

    #[test]
    fn classification_flags_the_contradiction() {
        assert_eq!(
            classify(ConditionVerdict::Vanishing, 1.0, 0.1),
            (Conclusion::ConditionHoldsLimitsDiffer, true)
        );
        assert_eq!(
            classify(ConditionVerdict::NonVanishing, 0.0, 0.1),
            (Conclusion::ConditionFailsLimitsAgree, false)
        );
    }

    #[test]
    fn identical_pair() {
        let f = EnergyDensity::isotropic(CoefficientField::checkerboard(1.0, 4.0));
        let r = run_stability_pair("same", &f, &f, &StabilityConfig::cell(2, 16)).unwrap();
        assert!(r.statistic_trace.iter().all(|p| p.value == 0.0));
        assert_eq!(r.discrepancy, 0.0);
        assert_eq!(r.conclusion, Conclusion::ConditionHoldsLimitsAgree);
    }

    #[test]
    fn cell_method_needs_periodic_fields() {
        let f = EnergyDensity::isotropic(CoefficientField::half_space_step(2.0, 0.5));
        let g = EnergyDensity::isotropic(CoefficientField::constant(2.0));
        let err = run_stability_pair("x", &f, &g, &StabilityConfig::cell(1, 16)).unwrap_err();
        assert!(matches!(err, Error::Stage { .. }));
    }
}
