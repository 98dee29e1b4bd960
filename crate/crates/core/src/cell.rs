//! Periodic cell problems.
//!
//! For a matrix field `A` the corrector `w_i` solves
//! `∫ <A(e_i + ∇w_i), ∇φ> = 0` for all periodic `φ`, and column `i` of the
//! homogenized matrix is the flux average `∫ A(e_i + ∇w_i)`. Symmetric
//! fields are solved with conjugate gradients and cross-checked against the
//! minimum energy; nonsymmetric ones go through GMRES.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{CoefficientField, MatrixField};
use crate::numerics::{
    cg_solve_with, gmres_solve_with, minimize_p_energy, DofMap, Grid, Mat2, PEnergyFunctional,
    QuadraticProblem, SolverConfig, Topology,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogenizedForm {
    /// Row-major `d × d` matrix.
    Matrix(Vec<Vec<f64>>),
    /// `(ξ, f_hom(ξ))` samples of a nonlinear density.
    EnergySamples(Vec<(Vec<f64>, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedResult {
    pub form: HomogenizedForm,
    /// Cells per unit length.
    pub resolution: usize,
    pub field_id: String,
    /// Final relative residual (linear) or gradient norm (nonlinear) per solve.
    pub residuals: Vec<f64>,
    /// `max_i |<M e_i, e_i> − min energy_i|` for symmetric fields.
    pub energy_flux_gap: Option<f64>,
}

impl HomogenizedResult {
    pub fn matrix(&self) -> Option<&Vec<Vec<f64>>> {
        match &self.form {
            HomogenizedForm::Matrix(m) => Some(m),
            HomogenizedForm::EnergySamples(_) => None,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix().map_or(f64::NAN, |m| m[i][j])
    }
}

/// Raw output of a set of corrector solves.
#[derive(Debug, Clone)]
pub(crate) struct CorrectorOutput {
    pub matrix: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub energy_flux_gap: Option<f64>,
}

/// Solves the `d` corrector problems on a torus grid with per-element
/// coefficients (`None` marks inactive elements). Integrals are normalized
/// by the full cell volume.
pub(crate) fn periodic_correctors(
    grid: &Grid,
    coeffs: &[Option<Mat2>],
    config: &SolverConfig,
) -> Result<CorrectorOutput> {
    let active: Vec<bool> = coeffs.iter().map(Option::is_some).collect();
    let dofs = DofMap::restricted(grid, &active)?;
    let problem = QuadraticProblem::new(grid, &dofs, coeffs)?;
    let symmetric = coeffs.iter().flatten().all(|m| m[0][1] == m[1][0]);
    let d = grid.dim();
    let vol = grid.volume();
    let columns: Vec<(Vec<f64>, f64, Option<f64>)> = (0..d)
        .into_par_iter()
        .map(|i| {
            let mut xi = vec![0.0; d];
            xi[i] = 1.0;
            let (k, rhs) = problem.assemble(&xi, None, None)?;
            let sol = if symmetric {
                cg_solve_with(&k, &rhs, config, dofs.kernel())?
            } else {
                gmres_solve_with(&k, &rhs, config, dofs.kernel())?
            };
            let u = dofs.expand(&sol.x, None);
            let flux = problem.flux(&xi, &u);
            let column: Vec<f64> = flux[..d].iter().map(|v| v / vol).collect();
            let gap = symmetric.then(|| (problem.energy(&xi, &u) / vol - column[i]).abs());
            Ok((column, sol.relative_residual, gap))
        })
        .collect::<Result<_>>()?;
    let mut matrix = vec![vec![0.0; d]; d];
    for (j, (col, _, _)) in columns.iter().enumerate() {
        for i in 0..d {
            matrix[i][j] = col[i];
        }
    }
    let energy_flux_gap = symmetric.then(|| {
        columns
            .iter()
            .filter_map(|c| c.2)
            .fold(0.0, f64::max)
    });
    Ok(CorrectorOutput {
        matrix,
        residuals: columns.iter().map(|c| c.1).collect(),
        energy_flux_gap,
    })
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(Error::invalid(format!("resolution must be at least 2, got {resolution}")));
    }
    Ok(())
}

/// Homogenized matrix of a 1-periodic matrix field on the unit cell with
/// `resolution` elements per axis.
pub fn homogenize_matrix(a: &MatrixField, resolution: usize, config: &SolverConfig) -> Result<HomogenizedResult> {
    if !a.is_one_periodic() {
        return Err(Error::invalid(
            "cell problems need a 1-periodic field; use the window estimators or a periodic box",
        ));
    }
    let d = a.dim();
    homogenize_matrix_on_period(a, &vec![0.0; d], 1.0, resolution, config)
}

/// Homogenized matrix of the periodization of `a` restricted to the cube
/// `origin + [0, period)^d`, with `resolution` elements per unit length.
/// This is the periodic representative volume element used for random fields.
pub fn homogenize_matrix_on_period(
    a: &MatrixField,
    origin: &[f64],
    period: f64,
    resolution: usize,
    config: &SolverConfig,
) -> Result<HomogenizedResult> {
    check_resolution(resolution)?;
    let d = a.dim();
    let cells = (period * resolution as f64).round() as usize;
    let grid = Grid::new(d, cells, origin, period, Topology::Torus)?;
    let coeffs: Vec<Option<Mat2>> = (0..grid.num_elements())
        .map(|e| Some(a.eval(&grid.element_center(e)[..d])))
        .collect();
    let out = periodic_correctors(&grid, &coeffs, config)?;
    Ok(HomogenizedResult {
        form: HomogenizedForm::Matrix(out.matrix),
        resolution,
        field_id: a.describe(),
        residuals: out.residuals,
        energy_flux_gap: out.energy_flux_gap,
    })
}

/// `min { ∫_{(0,1)^d} a(y) |ξ + ∇u|^p : u periodic }`.
pub fn homogenize_p_energy(
    a: &CoefficientField,
    p: f64,
    xi: &[f64],
    resolution: usize,
    config: &SolverConfig,
) -> Result<f64> {
    Ok(p_energy_cell(a, p, xi, resolution, config)?.0)
}

fn p_energy_cell(
    a: &CoefficientField,
    p: f64,
    xi: &[f64],
    resolution: usize,
    config: &SolverConfig,
) -> Result<(f64, f64)> {
    check_resolution(resolution)?;
    if !a.is_one_periodic() {
        return Err(Error::invalid("cell problems need a 1-periodic field"));
    }
    let d = xi.len();
    let grid = Grid::new(d, resolution, &vec![0.0; d], 1.0, Topology::Torus)?;
    let coeffs: Vec<Option<f64>> = (0..grid.num_elements())
        .map(|e| Some(a.eval(&grid.element_center(e)[..d])))
        .collect();
    let dofs = DofMap::periodic(&grid)?;
    let functional = PEnergyFunctional::new(&grid, &dofs, &coeffs, p, xi, 1.0)?;
    let start = vec![0.0; dofs.n_free()];
    let m = minimize_p_energy(&functional, &start, config)?;
    Ok((m.value, m.grad_norm))
}

/// Homogenized p-energy sampled at several `ξ`.
pub fn homogenize_p_energy_samples(
    a: &CoefficientField,
    p: f64,
    xis: &[Vec<f64>],
    resolution: usize,
    config: &SolverConfig,
) -> Result<HomogenizedResult> {
    let out: Vec<(f64, f64)> = xis
        .par_iter()
        .map(|xi| p_energy_cell(a, p, xi, resolution, config))
        .collect::<Result<_>>()?;
    Ok(HomogenizedResult {
        form: HomogenizedForm::EnergySamples(
            xis.iter().cloned().zip(out.iter().map(|o| o.0)).collect(),
        ),
        resolution,
        field_id: format!("{}|p={p}", a.describe()),
        residuals: out.iter().map(|o| o.1).collect(),
        energy_flux_gap: None,
    })
}

/// `<M ξ, ξ>` for a matrix result.
pub fn homogenized_quadratic_form(result: &HomogenizedResult, xi: &[f64]) -> Result<f64> {
    let m = result
        .matrix()
        .ok_or_else(|| Error::invalid("result holds energy samples, not a matrix"))?;
    if xi.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            found: xi.len(),
        });
    }
    let mut s = 0.0;
    for i in 0..m.len() {
        for j in 0..m.len() {
            s += xi[i] * m[i][j] * xi[j];
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn constant_matrix_is_reproduced() {
        let a = MatrixField::isotropic(CoefficientField::constant(3.0), 2);
        let r = homogenize_matrix(&a, 8, &cfg()).unwrap();
        assert_eq!(r.matrix().unwrap(), &vec![vec![3.0, 0.0], vec![0.0, 3.0]]);
    }

    #[test]
    fn nonsymmetric_constant_is_exact() {
        let a = MatrixField::constant(&[vec![2.0, 1.0], vec![-1.0, 2.0]]).unwrap();
        let r = homogenize_matrix(&a, 8, &cfg()).unwrap();
        let m = r.matrix().unwrap();
        let want = [[2.0, 1.0], [-1.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - want[i][j]).abs() < 1e-10);
            }
        }
        assert!(r.energy_flux_gap.is_none());
    }

    #[test]
    fn quadratic_form_examples() {
        let r = HomogenizedResult {
            form: HomogenizedForm::Matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            resolution: 1,
            field_id: "id".into(),
            residuals: vec![],
            energy_flux_gap: None,
        };
        assert_eq!(homogenized_quadratic_form(&r, &[3.0, 4.0]).unwrap(), 25.0);
        let r = HomogenizedResult {
            form: HomogenizedForm::Matrix(vec![vec![1.6, 0.0], vec![0.0, 2.5]]),
            ..r
        };
        assert_eq!(homogenized_quadratic_form(&r, &[1.0, 0.0]).unwrap(), 1.6);
        assert!((homogenized_quadratic_form(&r, &[1.0, 1.0]).unwrap() - 4.1).abs() < 1e-15);
        assert!(homogenized_quadratic_form(&r, &[1.0]).is_err());
    }

    #[test]
    fn constant_p_energy() {
        let a = CoefficientField::constant(2.0);
        let v = homogenize_p_energy(&a, 3.0, &[0.6, 0.8], 8, &cfg()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_periodic_field_is_rejected() {
        let a = MatrixField::isotropic(CoefficientField::half_space_step(2.0, 0.5), 2);
        assert!(homogenize_matrix(&a, 8, &cfg()).is_err());
    }
}
