//! The λ-problem on a perforated box and its homogenized counterpart.
//!
//! At scale `ε` we minimize `∫ a^{εE,n} |∇u|² + ∫_{outside εE} (λu² − 2fu)`
//! with `u = 0` on the boundary of the box `(−L/2, L/2)²`; the reference
//! problem is `∫ <A_hom ∇u, ∇u> + θ ∫ (λu² − 2fu)` with `A_hom` from the
//! masked cell problem and `θ` the volume fraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{masked_cell_matrix, volume_fraction, PerforationSet};
use crate::error::{Error, Result};
use crate::numerics::assembly::l2_norm_squared;
use crate::numerics::{cg_solve_with, scalar_matrix, DofMap, Grid, LowerOrder, Mat2, QuadraticProblem, SolverConfig, Topology};

/// Source term `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Zero,
    /// `amplitude · exp(−|x|² / (2 width²))`
    Gaussian { amplitude: f64, width: f64 },
}

impl Source {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            Source::Zero => 0.0,
            Source::Gaussian { amplitude, width } => {
                amplitude * (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * width * width)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSetup {
    pub lambda: f64,
    pub source: Source,
    pub epsilons: Vec<f64>,
    pub box_size: f64,
    /// Coefficient `1/n_penal` inside the holes.
    pub n_penal: u32,
    /// Elements per unit length of the box grid.
    pub resolution: usize,
    /// Elements per axis of the cell problem giving `A_hom`.
    pub cell_resolution: usize,
}

impl LambdaSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.box_size > 0.0 && self.box_size.is_finite()) {
            return Err(Error::invalid("box size must be positive"));
        }
        if self.n_penal == 0 {
            return Err(Error::invalid("penalization index n must be at least 1"));
        }
        if self.epsilons.is_empty() {
            return Err(Error::invalid("need at least one epsilon"));
        }
        for &eps in &self.epsilons {
            if !(eps > 0.0) || eps * (self.resolution as f64) < 4.0 {
                return Err(Error::invalid(format!(
                    "epsilon {eps} needs at least 4 elements per period at resolution {}",
                    self.resolution
                )));
            }
        }
        if let Source::Gaussian { amplitude, width } = self.source {
            if !(amplitude.is_finite() && width > 0.0) {
                return Err(Error::invalid("gaussian source needs finite amplitude and positive width"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub epsilons: Vec<f64>,
    /// `‖u_ε − u_hom‖_{L²(box)}` per epsilon.
    pub distances: Vec<f64>,
    /// `‖u_hom‖_{L²(box)}`.
    pub reference_norm: f64,
    pub theta: f64,
    pub a_hom: Vec<Vec<f64>>,
    pub n_penal: u32,
    pub resolution: usize,
}

impl LambdaReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }
}

fn solve(
    grid: &Grid,
    coeffs: &[Option<Mat2>],
    weights: &[f64],
    lambda: f64,
    source: &Source,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let dofs = DofMap::dirichlet(grid)?;
    let problem = QuadraticProblem::new(grid, &dofs, coeffs)?;
    let f = |x: [f64; 2]| source.eval(x);
    let lower = LowerOrder {
        lambda,
        weights,
        source: &f,
    };
    let (k, rhs) = problem.assemble(&[0.0, 0.0], None, Some(&lower))?;
    let sol = cg_solve_with(&k, &rhs, config, dofs.kernel())?;
    Ok(dofs.expand(&sol.x, None))
}

pub fn lambda_problem_experiment(
    set: &PerforationSet,
    setup: &LambdaSetup,
    config: &SolverConfig,
) -> Result<LambdaReport> {
    setup.validate()?;
    set.validate()?;
    let a_hom = masked_cell_matrix(set, 2, setup.cell_resolution, config)
        .map_err(|e| e.at_stage("homogenized cell problem"))?;
    let m = a_hom.matrix().expect("matrix result").clone();
    let theta = volume_fraction(set, 64.0, setup.cell_resolution, 2)?.theta;

    let l = setup.box_size;
    let n = (l * setup.resolution as f64).round() as usize;
    let grid = Grid::new(2, n, &[-0.5 * l, -0.5 * l], l, Topology::Box)?;
    let ne = grid.num_elements();

    let hom_coeffs = vec![Some([[m[0][0], m[0][1]], [m[1][0], m[1][1]]]); ne];
    let u_hom = solve(&grid, &hom_coeffs, &vec![theta; ne], setup.lambda, &setup.source, config)
        .map_err(|e| e.at_stage("homogenized problem"))?;

    let inside = scalar_matrix(1.0 / setup.n_penal as f64);
    let distances: Vec<f64> = setup
        .epsilons
        .par_iter()
        .map(|&eps| {
            let mut coeffs = Vec::with_capacity(ne);
            let mut weights = Vec::with_capacity(ne);
            for e in 0..ne {
                let c = grid.element_center(e);
                let hole = set.contains(&[c[0] / eps, c[1] / eps]);
                coeffs.push(Some(if hole { inside } else { scalar_matrix(1.0) }));
                weights.push(if hole { 0.0 } else { 1.0 });
            }
            let u = solve(&grid, &coeffs, &weights, setup.lambda, &setup.source, config)
                .map_err(|err| err.at_stage(format!("perforated problem at epsilon {eps}")))?;
            let diff: Vec<f64> = u.iter().zip(&u_hom).map(|(a, b)| a - b).collect();
            Ok(l2_norm_squared(&grid, &diff).sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(LambdaReport {
        epsilons: setup.epsilons.clone(),
        distances,
        reference_norm: l2_norm_squared(&grid, &u_hom).sqrt(),
        theta,
        a_hom: m,
        n_penal: setup.n_penal,
        resolution: setup.resolution,
    })
}
