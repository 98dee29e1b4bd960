//! The explicit extension from an annulus into a ball.
//!
//! At scale `s`, with `ū` the mean of `u` over `B_3s \ B_2s`:
//! `Tu = ū` on `B_s` and `Tu(x) = (|x|/s − 1) u(L(x)) + (2 − |x|/s) ū` on
//! `B_2s \ B_s`, where `L(x) = (4s − |x|) x/|x|` reflects the shell onto the
//! annulus. Outside `B_2s` the extension is `u` itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{scalar_matrix, DofMap, Grid, Mat2, QuadraticProblem, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extension {
    pub scale: f64,
    /// Elements per unit of `s`.
    pub resolution: usize,
    pub annulus_mean: f64,
    /// Grid nodes in the closed ball `B_2s` and the values of `Tu` there.
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    /// `‖∇Tu‖²` over `B_2s`.
    pub inner_energy: f64,
    /// `‖∇u‖²` over `B_3s \ B_2s`.
    pub annulus_energy: f64,
    /// `‖∇Tu‖_{B_2s} / ‖∇u‖_{B_3s \ B_2s}`, 0 for constant data.
    pub ratio: f64,
}

/// Applies the extension to `u` in 2D on a grid of `6·resolution` elements
/// per axis covering `(−3s, 3s)²`. Regions are resolved by element centers,
/// so the grid is homothetic in `s` and the discrete ratio inherits the
/// scale invariance of the construction.
pub fn extend_over_ball(u: &(dyn Fn([f64; 2]) -> f64 + Sync), scale: f64, resolution: usize) -> Result<Extension> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("scale must be positive, got {scale}")));
    }
    if resolution < 2 {
        return Err(Error::invalid(format!("resolution must be at least 2, got {resolution}")));
    }
    let s = scale;
    let grid = Grid::new(2, 6 * resolution, &[-3.0 * s, -3.0 * s], 6.0 * s, Topology::Box)?;
    let radius = |x: [f64; 2]| (x[0] * x[0] + x[1] * x[1]).sqrt();

    let mut sum = 0.0;
    let mut count = 0usize;
    for e in 0..grid.num_elements() {
        let c = grid.element_center(e);
        let r = radius(c);
        if (2.0 * s..3.0 * s).contains(&r) {
            let v = u(c);
            if !v.is_finite() {
                return Err(Error::invalid("function values on the annulus must be finite"));
            }
            sum += v;
            count += 1;
        }
    }
    let mean = sum / count as f64;

    let extended = |x: [f64; 2]| -> f64 {
        let r = radius(x);
        if r < s {
            mean
        } else if r < 2.0 * s {
            let k = (4.0 * s - r) / r;
            (r / s - 1.0) * u([k * x[0], k * x[1]]) + (2.0 - r / s) * mean
        } else {
            u(x)
        }
    };
    let tu: Vec<f64> = (0..grid.num_nodes()).map(|k| extended(grid.node_coords(k))).collect();
    let plain: Vec<f64> = (0..grid.num_nodes()).map(|k| u(grid.node_coords(k))).collect();

    let region = |lo: f64, hi: f64| -> Vec<Option<Mat2>> {
        (0..grid.num_elements())
            .map(|e| {
                let r = radius(grid.element_center(e));
                (lo..hi).contains(&r).then(|| scalar_matrix(1.0))
            })
            .collect()
    };
    let dofs = DofMap::dirichlet(&grid)?;
    let zero = [0.0, 0.0];
    let inner_coeffs = region(0.0, 2.0 * s);
    let inner_energy = QuadraticProblem::new(&grid, &dofs, &inner_coeffs)?.energy(&zero, &tu);
    let outer_coeffs = region(2.0 * s, 3.0 * s);
    let annulus_energy = QuadraticProblem::new(&grid, &dofs, &outer_coeffs)?.energy(&zero, &plain);
    let ratio = if annulus_energy > 0.0 {
        (inner_energy / annulus_energy).sqrt()
    } else {
        0.0
    };

    let mut points = Vec::new();
    let mut values = Vec::new();
    for k in 0..grid.num_nodes() {
        let x = grid.node_coords(k);
        if radius(x) <= 2.0 * s {
            points.push(x);
            values.push(tu[k]);
        }
    }
    Ok(Extension {
        scale,
        resolution,
        annulus_mean: mean,
        points,
        values,
        inner_energy,
        annulus_energy,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_extends_to_itself() {
        let ext = extend_over_ball(&|_| 5.0, 1.0, 8).unwrap();
        assert!(ext.values.iter().all(|&v| v == 5.0));
        assert_eq!(ext.ratio, 0.0);
        assert_eq!(ext.annulus_mean, 5.0);
    }

    #[test]
    fn continuous_across_the_shell() {
        let u = |x: [f64; 2]| x[0] + 0.5 * x[1] * x[1];
        let ext = extend_over_ball(&u, 1.0, 16).unwrap();
        for (x, v) in ext.points.iter().zip(&ext.values) {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if (r - 2.0).abs() < 1e-12 {
                assert!((v - u(*x)).abs() < 1e-12);
            }
        }
        assert!(ext.ratio.is_finite() && ext.ratio > 0.0);
    }

    #[test]
    fn bad_arguments() {
        assert!(extend_over_ball(&|_| 0.0, 0.0, 8).is_err());
        assert!(extend_over_ball(&|_| 0.0, 1.0, 1).is_err());
    }
}
