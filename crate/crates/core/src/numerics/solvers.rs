//! Krylov solvers for the assembled stiffness systems.
//!
//! Both solvers use diagonal (Jacobi) preconditioning and run sequentially,
//! so identical inputs give bit-identical outputs.

use serde::{Deserialize, Serialize};

use super::sparse::{dot, norm, project_mean_zero, SparseSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rel_tolerance: f64,
    /// Iteration cap; `None` means `20 * dim` of the system being solved.
    pub max_iterations: Option<usize>,
    pub nonlinear_grad_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tolerance: 1e-10,
            max_iterations: None,
            nonlinear_grad_tolerance: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.nonlinear_grad_tolerance > 0.0) {
            return Err(Error::invalid("solver tolerances must be strictly positive"));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, dim: usize) -> usize {
        self.max_iterations.unwrap_or(20 * dim.max(1))
    }
}

/// Null space of the operator that the solver must factor out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Trivial,
    /// Constant vectors (periodic problems); solutions are returned with zero mean.
    Constants,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True residual `|b - M x| / |b|` of the returned solution.
    pub relative_residual: f64,
}

fn jacobi(system: &SparseSystem) -> Vec<f64> {
    system
        .diagonal()
        .into_iter()
        .map(|d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

fn check_rhs(system: &SparseSystem, rhs: &[f64]) -> Result<()> {
    if rhs.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: rhs.len(),
        });
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("right-hand side contains non-finite values"));
    }
    Ok(())
}

fn true_residual(system: &SparseSystem, x: &[f64], b: &[f64], kernel: Kernel) -> Vec<f64> {
    let mut r = system.mul_vec(x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    if kernel == Kernel::Constants {
        project_mean_zero(&mut r);
    }
    r
}

/// Preconditioned conjugate gradients for symmetric positive (semi)definite systems.
pub fn cg_solve(system: &SparseSystem, rhs: &[f64], config: &SolverConfig) -> Result<Solution> {
    cg_solve_with(system, rhs, config, Kernel::Trivial)
}

pub fn cg_solve_with(
    system: &SparseSystem,
    rhs: &[f64],
    config: &SolverConfig,
    kernel: Kernel,
) -> Result<Solution> {
    config.validate()?;
    check_rhs(system, rhs)?;
    let n = system.dim();
    let mut b = rhs.to_vec();
    if kernel == Kernel::Constants {
        project_mean_zero(&mut b);
    }
    let bnorm = norm(&b);
    if bnorm == 0.0 {
        return Ok(Solution {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = config.rel_tolerance * bnorm;
    let cap = config.iteration_cap(n);
    let dinv = jacobi(system);

    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rnorm = bnorm;

    for it in 1..=cap {
        system.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Breakdown {
                solver: "conjugate gradients",
                iteration: it,
                residual: rnorm / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if kernel == Kernel::Constants {
            project_mean_zero(&mut r);
        }
        rnorm = norm(&r);
        if rnorm <= target {
            // Guard against drift between recursive and true residuals.
            let rt = true_residual(system, &x, &b, kernel);
            let tn = norm(&rt);
            if tn <= target {
                if kernel == Kernel::Constants {
                    project_mean_zero(&mut x);
                }
                return Ok(Solution {
                    x,
                    iterations: it,
                    relative_residual: tn / bnorm,
                });
            }
            r = rt;
            rnorm = tn;
            z = r.iter().zip(&dinv).map(|(a, d)| a * d).collect();
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        solver: "conjugate gradients",
        iterations: cap,
        residual: rnorm / bnorm,
    })
}

/// Restarted GMRES with right Jacobi preconditioning for nonsymmetric systems.
pub fn krylov_solve_nonsymmetric(
    system: &SparseSystem,
    rhs: &[f64],
    config: &SolverConfig,
) -> Result<Solution> {
    gmres_solve_with(system, rhs, config, Kernel::Trivial)
}

const GMRES_RESTART: usize = 60;

pub fn gmres_solve_with(
    system: &SparseSystem,
    rhs: &[f64],
    config: &SolverConfig,
    kernel: Kernel,
) -> Result<Solution> {
    config.validate()?;
    check_rhs(system, rhs)?;
    let n = system.dim();
    let mut b = rhs.to_vec();
    if kernel == Kernel::Constants {
        project_mean_zero(&mut b);
    }
    let bnorm = norm(&b);
    if bnorm == 0.0 {
        return Ok(Solution {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = config.rel_tolerance * bnorm;
    let cap = config.iteration_cap(n);
    let dinv = jacobi(system);
    let m = GMRES_RESTART.min(n.max(1));

    let mut x = vec![0.0; n];
    let mut total = 0usize;
    let mut rnorm = bnorm;
    let mut w = vec![0.0; n];
    let mut zw = vec![0.0; n];

    while total < cap {
        let r = true_residual(system, &x, &b, kernel);
        let beta = norm(&r);
        rnorm = beta;
        if beta <= target {
            break;
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns, Givens rotations, and rotated residual vector.
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            if total >= cap {
                break;
            }
            total += 1;
            for i in 0..n {
                zw[i] = basis[k][i] * dinv[i];
            }
            system.mul_vec_into(&zw, &mut w);
            if kernel == Kernel::Constants {
                project_mean_zero(&mut w);
            }
            let mut h = vec![0.0; k + 2];
            // Modified Gram-Schmidt.
            for (j, v) in basis.iter().enumerate().take(k + 1) {
                let hj = dot(&w, v);
                h[j] = hj;
                for i in 0..n {
                    w[i] -= hj * v[i];
                }
            }
            let wn = norm(&w);
            h[k + 1] = wn;
            for j in 0..k {
                let t = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            let denom = (h[k] * h[k] + h[k + 1] * h[k + 1]).sqrt();
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::Breakdown {
                    solver: "GMRES",
                    iteration: total,
                    residual: rnorm / bnorm,
                });
            }
            let c = h[k] / denom;
            let s = h[k + 1] / denom;
            cs.push(c);
            sn.push(s);
            h[k] = denom;
            h[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            hess.push(h);
            k_used = k + 1;
            rnorm = g[k + 1].abs();
            if rnorm <= target || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[j][i] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * basis[j][i] * dinv[i];
            }
        }
    }

    let r = true_residual(system, &x, &b, kernel);
    let tn = norm(&r);
    if tn <= target {
        if kernel == Kernel::Constants {
            project_mean_zero(&mut x);
        }
        Ok(Solution {
            x,
            iterations: total,
            relative_residual: tn / bnorm,
        })
    } else {
        Err(Error::NoConvergence {
            solver: "GMRES",
            iterations: total,
            residual: tn.max(rnorm) / bnorm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sparse::TripletBuilder;

    fn torus_laplacian_1d(n: usize) -> SparseSystem {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.0);
            b.add(i, (i + 1) % n, -1.0);
            b.add(i, (i + n - 1) % n, -1.0);
        }
        b.build(true).unwrap()
    }

    #[test]
    fn identity_returns_rhs() {
        let m = SparseSystem::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        let s = cg_solve(&m, &b, &SolverConfig::default()).unwrap();
        assert_eq!(s.x, b);
    }

    #[test]
    fn torus_laplacian_mean_zero() {
        let n = 32;
        let m = torus_laplacian_1d(n);
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        project_mean_zero(&mut b);
        let cfg = SolverConfig::default();
        let s = cg_solve_with(&m, &b, &cfg, Kernel::Constants).unwrap();
        let mean: f64 = s.x.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-12);
        assert!(s.relative_residual <= cfg.rel_tolerance);
    }

    #[test]
    fn gmres_two_by_two() {
        let m = SparseSystem::from_dense(&[vec![2.0, 1.0], vec![0.0, 2.0]], false).unwrap();
        let s = krylov_solve_nonsymmetric(&m, &[3.0, 2.0], &SolverConfig::default()).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gmres_agrees_with_cg_on_symmetric_input() {
        let n = 40;
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.5);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
                b.add(i + 1, i, -1.0);
            }
        }
        let m = b.build(true).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let cfg = SolverConfig::default();
        let a = cg_solve(&m, &rhs, &cfg).unwrap();
        let g = krylov_solve_nonsymmetric(&m, &rhs, &cfg).unwrap();
        for (x, y) in a.x.iter().zip(&g.x) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let m = torus_laplacian_1d(64);
        let mut b: Vec<f64> = (0..64).map(|i| (i as f64).cos()).collect();
        project_mean_zero(&mut b);
        let cfg = SolverConfig {
            max_iterations: Some(2),
            ..SolverConfig::default()
        };
        match cg_solve_with(&m, &b, &cfg, Kernel::Constants) {
            Err(Error::NoConvergence { iterations, residual, .. }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let m = SparseSystem::identity(2);
        let cfg = SolverConfig {
            rel_tolerance: 0.0,
            ..SolverConfig::default()
        };
        assert!(cg_solve(&m, &[1.0, 1.0], &cfg).is_err());
    }
}
