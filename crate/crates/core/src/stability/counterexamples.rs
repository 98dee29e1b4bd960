//! The four canonical pairs with known outcomes: the averaged condition is
//! not necessary (two pairs), and a vanishing signed mean does not give
//! homogenizability (two pairs built on the half-space step).

use serde::{Deserialize, Serialize};

use super::{run_stability_pair, Conclusion, HomogMethod, StabilityConfig, StabilityReport};
use crate::error::{Error, Result};
use crate::fields::{CoefficientField, EnergyDensity};
use crate::numerics::SolverConfig;

pub const ALPHA: f64 = 1.0;
pub const BETA: f64 = 4.0;
pub const GAMMA: f64 = 2.0;
pub const C: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub r_list: Vec<f64>,
    pub quadrature_resolution: usize,
    pub cell_resolution_1d: usize,
    pub cell_resolution_2d: usize,
    /// Window centers `±offset` and sizes for the half-space pairs.
    pub window_offset: f64,
    pub window_sizes: Vec<f64>,
    pub window_resolution: usize,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            r_list: vec![8.0, 16.0, 32.0, 64.0],
            quadrature_resolution: 16,
            cell_resolution_1d: 1024,
            cell_resolution_2d: 64,
            window_offset: 4.0,
            window_sizes: vec![2.0, 4.0, 8.0],
            window_resolution: 16,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSuite {
    pub reports: Vec<StabilityReport>,
    pub expected: Vec<Conclusion>,
}

impl CounterexampleSuite {
    /// Errors on the first report whose conclusion differs from the expected one.
    pub fn check(&self) -> Result<()> {
        for (r, want) in self.reports.iter().zip(&self.expected) {
            if r.conclusion != *want || r.soundness_violation {
                return Err(Error::UnexpectedConclusion {
                    name: r.name.clone(),
                    expected: want.name().into(),
                    found: r.conclusion.name().into(),
                });
            }
        }
        Ok(())
    }

    pub fn has_non_necessity_instance(&self) -> bool {
        self.reports
            .iter()
            .any(|r| r.conclusion == Conclusion::ConditionFailsLimitsAgree)
    }
}

fn iso(a: CoefficientField) -> EnergyDensity {
    EnergyDensity::isotropic(a)
}

/// Runs the four pairs and fails if any conclusion disagrees with the
/// known outcome.
pub fn counterexample_suite(config: &CounterexampleConfig) -> Result<CounterexampleSuite> {
    let cell_1d = StabilityConfig {
        r_list: config.r_list.clone(),
        quadrature_resolution: config.quadrature_resolution,
        solver: config.solver,
        ..StabilityConfig::cell(1, config.cell_resolution_1d)
    };
    let cell_2d = StabilityConfig {
        dim: 2,
        method: HomogMethod::Cell {
            resolution: config.cell_resolution_2d,
        },
        ..cell_1d.clone()
    };
    let windows = StabilityConfig {
        r_list: config.r_list.clone(),
        quadrature_resolution: config.quadrature_resolution,
        solver: config.solver,
        ..StabilityConfig::windows(
            1,
            vec![vec![-config.window_offset], vec![config.window_offset]],
            config.window_sizes.clone(),
            config.window_resolution,
        )
    };
    let step = iso(CoefficientField::half_space_step(GAMMA, C));
    let cases = [
        (
            "swapped_phases_1d",
            iso(CoefficientField::two_phase(ALPHA, BETA)),
            iso(CoefficientField::two_phase(BETA, ALPHA)),
            &cell_1d,
            Conclusion::ConditionFailsLimitsAgree,
        ),
        (
            "swapped_layers_2d",
            iso(CoefficientField::two_phase(ALPHA, BETA)),
            iso(CoefficientField::two_phase(BETA, ALPHA)),
            &cell_2d,
            Conclusion::ConditionFailsLimitsAgree,
        ),
        (
            "half_space_vs_upper_phase",
            step.clone(),
            iso(CoefficientField::constant(GAMMA + C)),
            &windows,
            Conclusion::ConditionFailsLimitsDiffer,
        ),
        (
            "half_space_vs_mean",
            step,
            iso(CoefficientField::constant(GAMMA)),
            &windows,
            Conclusion::ConditionFailsLimitsDiffer,
        ),
    ];
    let mut reports = Vec::new();
    let mut expected = Vec::new();
    for (name, f, g, cfg, want) in cases {
        let report = run_stability_pair(name, &f, &g, cfg).map_err(|e| e.at_stage(name))?;
        reports.push(report);
        expected.push(want);
    }
    let suite = CounterexampleSuite { reports, expected };
    suite.check()?;
    Ok(suite)
}
