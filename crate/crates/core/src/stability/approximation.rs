//! Homogenization by approximation for almost periodic trigonometric
//! coefficients.
//!
//! The approximant `g^j` replaces every frequency by its `j`-th continued
//! fraction convergent, so `g^j` is periodic with an integer period and its
//! homogenized matrix comes from a cell solve on that period. The original
//! field is only ever estimated with windows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell::homogenize_matrix_on_period;
use crate::error::{Error, Result};
use crate::fields::{mean_abs_statistic, CoefficientField, EnergyDensity, FieldKind, MatrixField, TrigTerm};
use crate::numerics::SolverConfig;
use crate::rve::{window_sequence, WindowEstimate};

/// Largest period accepted for a rational approximant.
const MAX_PERIOD: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationConfig {
    pub dim: usize,
    pub j_max: usize,
    /// Elements per unit length for the cell solves on the approximant period.
    pub cell_resolution: usize,
    /// Window for the statistic between `f` and `g^j`.
    pub statistic_window: f64,
    pub quadrature_resolution: usize,
    pub window_sizes: Vec<f64>,
    pub window_resolution: usize,
    /// Relative tolerance for the Cauchy test and the agreement with the window value.
    pub relative_tolerance: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ApproximationConfig {
    pub fn new(dim: usize, j_max: usize) -> Self {
        ApproximationConfig {
            dim,
            j_max,
            cell_resolution: 64,
            statistic_window: 8.0,
            quadrature_resolution: 64,
            window_sizes: vec![16.0, 32.0, 64.0],
            window_resolution: 32,
            relative_tolerance: 0.02,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationEntry {
    pub j: usize,
    pub description: String,
    pub period: u64,
    pub homogenized: Vec<Vec<f64>>,
    /// Statistic between `f` and `g^j` on the statistic window (`t = 1`).
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationTrace {
    pub entries: Vec<ApproximationEntry>,
    /// Window estimate of `<f_hom e₁, e₁>`.
    pub window: WindowEstimate,
    /// Relative change of `<g^j_hom e₁, e₁>` between consecutive `j`.
    pub cauchy_gaps: Vec<f64>,
    /// Relative distance of the last approximant to the window value.
    pub window_gap: f64,
    pub statistic_monotone: bool,
    pub approximates: bool,
}

/// Convergents `p/q` of the continued fraction of `x`, stopping once `x`
/// is matched exactly.
pub fn convergents(x: f64, count: usize) -> Vec<(i64, u64)> {
    let mut out = Vec::with_capacity(count);
    let (mut h0, mut h1) = (1i64, x.floor() as i64);
    let (mut k0, mut k1) = (0u64, 1u64);
    let mut rest = x - x.floor();
    out.push((h1, k1));
    while out.len() < count {
        if rest.abs() < 1e-12 || (h1 as f64 / k1 as f64 - x).abs() < 1e-14 {
            out.push((h1, k1));
            continue;
        }
        let inv = 1.0 / rest;
        let a = inv.floor();
        rest = inv - a;
        let a = a as i64;
        let h2 = a * h1 + h0;
        let k2 = a as u64 * k1 + k0;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        out.push((h1, k1));
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `g^j` and its integer period.
fn approximant(a: &CoefficientField, j: usize) -> Result<(CoefficientField, u64)> {
    let FieldKind::TrigPolynomialClamped { constant, terms } = &a.kind else {
        return Err(Error::invalid("approximation needs a clamped trigonometric field"));
    };
    let mut period = 1u64;
    let mut new_terms = Vec::new();
    for t in terms.iter().filter(|t| t.amplitude != 0.0) {
        let mut frequency = Vec::with_capacity(t.frequency.len());
        for &f in &t.frequency {
            let (p, q) = convergents(f, j)[j - 1];
            period = period / gcd(period, q) * q;
            frequency.push(p as f64 / q as f64);
        }
        new_terms.push(TrigTerm {
            amplitude: t.amplitude,
            frequency,
            phase: t.phase,
        });
    }
    if period > MAX_PERIOD {
        return Err(Error::invalid(format!("approximant {j} has period {period}, above {MAX_PERIOD}")));
    }
    Ok((CoefficientField::trig_clamped(*constant, new_terms, a.bounds), period))
}

fn describe(g: &CoefficientField) -> String {
    let FieldKind::TrigPolynomialClamped { constant, terms } = &g.kind else {
        return g.describe();
    };
    let mut s = format!("{constant}");
    for t in terms {
        let f: Vec<String> = t.frequency.iter().map(|v| format!("{v:.6}")).collect();
        s.push_str(&format!("{:+}sin[{}]", t.amplitude, f.join(";")));
    }
    s
}

/// Runs `g^1, …, g^{j_max}` and the window estimate of `f`.
pub fn run_approximation_scheme(a: &CoefficientField, config: &ApproximationConfig) -> Result<ApproximationTrace> {
    a.validate()?;
    config.solver.validate()?;
    let dim = config.dim;
    if dim != 1 && dim != 2 {
        return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
    }
    if config.j_max < 2 {
        return Err(Error::invalid("need at least two approximants"));
    }
    if let FieldKind::TrigPolynomialClamped { terms, .. } = &a.kind {
        if terms.iter().any(|t| t.frequency.len() != dim) {
            return Err(Error::invalid("frequency vectors must match the dimension"));
        }
    }
    let f = EnergyDensity::isotropic(a.clone());
    let entries: Vec<ApproximationEntry> = (1..=config.j_max)
        .into_par_iter()
        .map(|j| {
            let (g, period) = approximant(a, j)?;
            let m = homogenize_matrix_on_period(
                &MatrixField::isotropic(g.clone(), dim),
                &vec![0.0; dim],
                period as f64,
                config.cell_resolution,
                &config.solver,
            )
            .map_err(|e| e.at_stage(format!("approximant {j}")))?;
            let statistic = mean_abs_statistic(
                &f,
                &EnergyDensity::isotropic(g.clone()),
                1.0,
                config.statistic_window,
                config.quadrature_resolution,
                dim,
            )?;
            Ok(ApproximationEntry {
                j,
                description: describe(&g),
                period,
                homogenized: m.matrix().expect("matrix result").clone(),
                statistic,
            })
        })
        .collect::<Result<_>>()?;
    let mut xi = vec![0.0; dim];
    xi[0] = 1.0;
    let window = window_sequence(
        &f,
        &vec![0.0; dim],
        &xi,
        &config.window_sizes,
        config.window_resolution,
        &config.solver,
    )
    .map_err(|e| e.at_stage("window estimate"))?;
    let values: Vec<f64> = entries.iter().map(|e| e.homogenized[0][0]).collect();
    let cauchy_gaps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs() / w[1].abs()).collect();
    let last = values[values.len() - 1];
    let window_gap = (last - window.last()).abs() / window.last().abs();
    let statistic_monotone = entries.windows(2).all(|w| w[1].statistic <= w[0].statistic);
    let approximates = statistic_monotone
        && cauchy_gaps.last().is_some_and(|g| *g <= config.relative_tolerance)
        && window_gap <= config.relative_tolerance;
    Ok(ApproximationTrace {
        entries,
        window,
        cauchy_gaps,
        window_gap,
        statistic_monotone,
        approximates,
    })
}
