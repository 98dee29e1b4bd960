//! Perforated domains: hole patterns, volume fractions, penalized and
//! masked cell problems, the extension operator and the λ-problem.

pub mod extension;
pub mod geometry;
pub mod lambda;

pub use extension::{extend_over_ball, Extension};
pub use geometry::{is_power_of_two, HolePattern, PerforationPerturbation, PerforationSet};
pub use lambda::{lambda_problem_experiment, LambdaReport, LambdaSetup, Source};

use serde::{Deserialize, Serialize};

use crate::cell::{periodic_correctors, HomogenizedForm, HomogenizedResult};
use crate::error::{Error, Result};
use crate::numerics::{cg_solve_with, scalar_matrix, DofMap, Grid, Mat2, QuadraticProblem, SolverConfig, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionMethod {
    /// Whole cells in the window; hole areas counted exactly.
    CellCount,
    /// Midpoint rule.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeFraction {
    pub theta: f64,
    pub window: f64,
    pub method: FractionMethod,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim != 1 && dim != 2 {
        return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
    }
    Ok(())
}

/// Midpoint-rule fraction of `Q_R` where `pred` holds.
fn cube_fraction(dim: usize, r: f64, resolution: usize, pred: impl Fn(&[f64]) -> bool) -> f64 {
    let m = ((r * resolution as f64).round() as usize).max(1);
    let h = r / m as f64;
    let x0 = -0.5 * r;
    let mut hits = 0usize;
    if dim == 1 {
        for i in 0..m {
            hits += pred(&[x0 + (i as f64 + 0.5) * h]) as usize;
        }
        hits as f64 / m as f64
    } else {
        for j in 0..m {
            let y = x0 + (j as f64 + 0.5) * h;
            for i in 0..m {
                hits += pred(&[x0 + (i as f64 + 0.5) * h, y]) as usize;
            }
        }
        hits as f64 / (m * m) as f64
    }
}

/// `|Q_R \ E| / R^d`. Exact when the window is a union of whole cells (every
/// hole lies inside its own cell) or when the pattern is unperturbed and
/// `R` is an integer; midpoint quadrature otherwise.
pub fn volume_fraction(e: &PerforationSet, r: f64, resolution: usize, dim: usize) -> Result<VolumeFraction> {
    check_dim(dim)?;
    e.validate()?;
    if !(r >= 4.0 && r.is_finite()) {
        return Err(Error::invalid(format!("volume fraction window must be at least 4, got {r}")));
    }
    let hole = e.hole_volume(dim);
    let half = 0.5 * r;
    let unperturbed = e.perturbation == PerforationPerturbation::None;
    if unperturbed && r.fract() == 0.0 {
        return Ok(VolumeFraction {
            theta: 1.0 - hole,
            window: r,
            method: FractionMethod::CellCount,
        });
    }
    if half.fract() == 0.0 {
        let k = half as i64;
        let mut holes = 0usize;
        let mut total = 0usize;
        for j in if dim == 1 { 0..1 } else { -k..k } {
            for i in -k..k {
                let cell = [i, j];
                total += 1;
                holes += !e.hole_removed(&cell[..dim]) as usize;
            }
        }
        return Ok(VolumeFraction {
            theta: 1.0 - hole * holes as f64 / total as f64,
            window: r,
            method: FractionMethod::CellCount,
        });
    }
    if resolution == 0 {
        return Err(Error::invalid("quadrature resolution must be positive"));
    }
    Ok(VolumeFraction {
        theta: cube_fraction(dim, r, resolution, |y| !e.contains(y)),
        window: r,
        method: FractionMethod::Quadrature,
    })
}

/// `|(E △ E') ∩ Q_R| / R^d` by midpoint quadrature.
pub fn symmetric_difference_density(
    e: &PerforationSet,
    other: &PerforationSet,
    r: f64,
    resolution: usize,
    dim: usize,
) -> Result<f64> {
    check_dim(dim)?;
    e.validate()?;
    other.validate()?;
    if !(r > 0.0 && r.is_finite()) || resolution == 0 {
        return Err(Error::invalid("window and resolution must be positive"));
    }
    if e == other {
        return Ok(0.0);
    }
    Ok(cube_fraction(dim, r, resolution, |y| e.contains(y) != other.contains(y)))
}

fn check_cell_resolution(e: &PerforationSet, resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(Error::invalid(format!("resolution must be at least 2, got {resolution}")));
    }
    e.validate()
}

fn cell_grid(dim: usize, resolution: usize) -> Result<Grid> {
    Grid::new(dim, resolution, &vec![0.0; dim], 1.0, Topology::Torus)
}

/// Minimum of `∫_cell a |ξ + ∇u|²` over periodic `u` for the given
/// element coefficients (`None` for removed elements).
fn cell_energy(grid: &Grid, coeffs: &[Option<Mat2>], xi: &[f64], config: &SolverConfig) -> Result<f64> {
    let active: Vec<bool> = coeffs.iter().map(Option::is_some).collect();
    let dofs = DofMap::restricted(grid, &active)?;
    let problem = QuadraticProblem::new(grid, &dofs, coeffs)?;
    let (k, rhs) = problem.assemble(xi, None, None)?;
    let sol = cg_solve_with(&k, &rhs, config, dofs.kernel())?;
    let u = dofs.expand(&sol.x, None);
    Ok(problem.energy(xi, &u) / grid.volume())
}

/// Cell minimum for the coefficient equal to 1 outside `E` and `1/n` inside.
pub fn penalized_cell_value(
    e: &PerforationSet,
    n: u32,
    xi: &[f64],
    resolution: usize,
    config: &SolverConfig,
) -> Result<f64> {
    check_cell_resolution(e, resolution)?;
    if n == 0 {
        return Err(Error::invalid("penalization index n must be at least 1"));
    }
    let grid = cell_grid(xi.len(), resolution)?;
    let d = xi.len();
    let inside = scalar_matrix(1.0 / n as f64);
    let coeffs: Vec<Option<Mat2>> = (0..grid.num_elements())
        .map(|el| {
            Some(if e.contains(&grid.element_center(el)[..d]) {
                inside
            } else {
                scalar_matrix(1.0)
            })
        })
        .collect();
    cell_energy(&grid, &coeffs, xi, config)
}

fn masked_coeffs(grid: &Grid, e: &PerforationSet) -> Vec<Option<Mat2>> {
    let d = grid.dim();
    (0..grid.num_elements())
        .map(|el| (!e.contains(&grid.element_center(el)[..d])).then(|| scalar_matrix(1.0)))
        .collect()
}

/// `min { ∫_{cell \ E} |ξ + ∇u|² : u periodic }`, assembled only over
/// elements whose centers lie outside `E`.
pub fn masked_cell_value(e: &PerforationSet, xi: &[f64], resolution: usize, config: &SolverConfig) -> Result<f64> {
    check_cell_resolution(e, resolution)?;
    let grid = cell_grid(xi.len(), resolution)?;
    cell_energy(&grid, &masked_coeffs(&grid, e), xi, config)
}

/// Homogenized matrix of the perforated cell (flux columns).
pub fn masked_cell_matrix(
    e: &PerforationSet,
    dim: usize,
    resolution: usize,
    config: &SolverConfig,
) -> Result<HomogenizedResult> {
    check_cell_resolution(e, resolution)?;
    let grid = cell_grid(dim, resolution)?;
    let out = periodic_correctors(&grid, &masked_coeffs(&grid, e), config)?;
    Ok(HomogenizedResult {
        form: HomogenizedForm::Matrix(out.matrix),
        resolution,
        field_id: format!("masked:{e:?}"),
        residuals: out.residuals,
        energy_flux_gap: out.energy_flux_gap,
    })
}

/// Window analogue of [`masked_cell_value`]: `R^{-d} min ∫_{Q_R(x0) \ E} |ξ + ∇w|²`
/// with `w = 0` on the outer boundary of the window.
pub fn masked_window_value(
    e: &PerforationSet,
    x0: &[f64],
    r: f64,
    xi: &[f64],
    resolution_per_unit: usize,
    config: &SolverConfig,
) -> Result<f64> {
    e.validate()?;
    let d = xi.len();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }
    let n = (r * resolution_per_unit as f64).round() as usize;
    if n < 8 {
        return Err(Error::invalid(format!("window needs at least 8 elements per axis, got {n}")));
    }
    let origin: Vec<f64> = x0.iter().map(|c| c - 0.5 * r).collect();
    let grid = Grid::new(d, n, &origin, r, Topology::Box)?;
    let coeffs = masked_coeffs(&grid, e);
    let active: Vec<bool> = coeffs.iter().map(Option::is_some).collect();
    let dofs = DofMap::restricted(&grid, &active)?;
    let problem = QuadraticProblem::new(&grid, &dofs, &coeffs)?;
    let (k, rhs) = problem.assemble(xi, None, None)?;
    let sol = cg_solve_with(&k, &rhs, config, dofs.kernel())?;
    let u = dofs.expand(&sol.x, None);
    Ok(problem.energy(xi, &u) / grid.volume())
}

/// Safety factor applied to the measured extension constant.
pub const EXTENSION_SAFETY: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenalizationRow {
    pub n: u32,
    pub penalized: f64,
    /// `(1 + safety · Ĉ² / n) · masked`.
    pub upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizationReport {
    pub masked: f64,
    /// Measured ratio of [`extend_over_ball`] for `u = x₁` at the hole scale.
    pub extension_constant: f64,
    pub rows: Vec<PenalizationRow>,
    pub strictly_decreasing: bool,
    /// `masked <= penalized(n) <= upper_bound(n)` for every `n`.
    pub sandwich_holds: bool,
}

/// Penalized cell values for each `n` next to the masked value and the
/// upper bound built from the measured extension constant.
pub fn penalization_sandwich(
    e: &PerforationSet,
    n_list: &[u32],
    xi: &[f64],
    resolution: usize,
    config: &SolverConfig,
) -> Result<PenalizationReport> {
    if n_list.is_empty() {
        return Err(Error::invalid("n list must not be empty"));
    }
    let masked = masked_cell_value(e, xi, resolution, config)?;
    let extension_constant = match e.pattern {
        HolePattern::NoHoles => 0.0,
        HolePattern::Balls { radius } => extend_over_ball(&|x| x[0], radius, 32)?.ratio,
        HolePattern::Squares { half_width } => {
            extend_over_ball(&|x| x[0], half_width * std::f64::consts::SQRT_2, 32)?.ratio
        }
    };
    let rows: Vec<PenalizationRow> = n_list
        .iter()
        .map(|&n| {
            let penalized = penalized_cell_value(e, n, xi, resolution, config)?;
            let c2 = extension_constant * extension_constant;
            Ok(PenalizationRow {
                n,
                penalized,
                upper_bound: (1.0 + EXTENSION_SAFETY * c2 / n as f64) * masked,
            })
        })
        .collect::<Result<_>>()?;
    let strictly_decreasing = rows.windows(2).all(|w| w[1].penalized < w[0].penalized);
    let sandwich_holds = rows
        .iter()
        .all(|r| masked <= r.penalized && r.penalized <= r.upper_bound);
    Ok(PenalizationReport {
        masked,
        extension_constant,
        rows,
        strictly_decreasing,
        sandwich_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn fractions() {
        let none = PerforationSet::empty();
        assert_eq!(volume_fraction(&none, 8.0, 4, 2).unwrap().theta, 1.0);
        let balls = PerforationSet::balls(0.25);
        let v = volume_fraction(&balls, 8.0, 4, 2).unwrap();
        assert!((v.theta - (1.0 - std::f64::consts::PI / 16.0)).abs() < 1e-15);
        let q = volume_fraction(&balls, 4.5, 200, 2).unwrap();
        assert_eq!(q.method, FractionMethod::Quadrature);
        let mid = cube_fraction(2, 8.0, 200, |y| !balls.contains(y));
        assert!((mid - (1.0 - std::f64::consts::PI / 16.0)).abs() < 0.002, "{mid}");
        assert!(volume_fraction(&balls, 2.0, 4, 2).is_err());
    }

    #[test]
    fn removal_fraction_counts_cells() {
        let e = PerforationSet::balls(0.25).with_perturbation(PerforationPerturbation::SparseRemoval);
        // cells (1,1),(1,2),(2,1),(2,2) lose their holes in Q_8
        let v = volume_fraction(&e, 8.0, 4, 2).unwrap();
        let want = 1.0 - std::f64::consts::PI / 16.0 * 60.0 / 64.0;
        assert!((v.theta - want).abs() < 1e-15);
    }

    #[test]
    fn identical_sets_have_no_difference() {
        let e = PerforationSet::balls(0.25);
        assert_eq!(symmetric_difference_density(&e, &e, 16.0, 16, 2).unwrap(), 0.0);
    }

    #[test]
    fn trivial_cell_values() {
        let none = PerforationSet::empty();
        let xi = [0.6, 0.8];
        assert!((masked_cell_value(&none, &xi, 8, &cfg()).unwrap() - 1.0).abs() < 1e-12);
        assert!((penalized_cell_value(&none, 7, &xi, 8, &cfg()).unwrap() - 1.0).abs() < 1e-12);
        let balls = PerforationSet::balls(0.25);
        assert!((penalized_cell_value(&balls, 1, &xi, 16, &cfg()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn holes_in_1d_cut_the_line() {
        let e = PerforationSet::balls(0.25);
        assert!(matches!(
            masked_cell_value(&e, &[1.0], 16, &cfg()),
            Err(Error::NonPercolating { .. })
        ));
    }
}
