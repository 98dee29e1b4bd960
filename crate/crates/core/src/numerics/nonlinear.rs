//! Damped Newton descent for convex p-power energies.

use super::assembly::{gather, pad, DofMap, ElementBasis};
use super::grid::Grid;
use super::solvers::{cg_solve_with, Kernel, SolverConfig};
use super::sparse::{dot, norm, project_mean_zero, SparseSystem, TripletBuilder};
use crate::error::{Error, Result};

/// A smooth convex functional on a vector of unknowns.
pub trait ConvexFunctional {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value(&self, u: &[f64]) -> f64;

    fn gradient(&self, u: &[f64], grad: &mut [f64]);

    /// Symmetric positive semidefinite Hessian.
    fn hessian(&self, u: &[f64]) -> Result<SparseSystem>;

    /// Null space factored out of search directions and gradients.
    fn kernel(&self) -> Kernel {
        Kernel::Trivial
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimization {
    pub u: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Energy after each accepted step, starting with the initial value.
    pub energies: Vec<f64>,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const ROUNDOFF_DECREASE: f64 = 1e-12;

/// Minimizes `energy` from `start` by Newton directions safeguarded with
/// Armijo backtracking; falls back to steepest descent when the Newton
/// system fails or does not yield a descent direction. Stops once the
/// (projected) gradient norm drops below `nonlinear_grad_tolerance`, or
/// once no step can lower the energy and the Newton decrement is below
/// `1e-12·|energy|` (fine grids reach this before the absolute gradient test).
pub fn minimize_p_energy<F: ConvexFunctional>(
    energy: &F,
    start: &[f64],
    config: &SolverConfig,
) -> Result<Minimization> {
    config.validate()?;
    let n = energy.len();
    if start.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: start.len(),
        });
    }
    let kernel = energy.kernel();
    let mut u = start.to_vec();
    let mut value = energy.value(&u);
    let mut energies = vec![value];
    let mut grad = vec![0.0; n];
    let cap = config.max_iterations.unwrap_or(200);
    let inner = SolverConfig {
        rel_tolerance: 1e-10,
        max_iterations: None,
        ..*config
    };
    for it in 0..=cap {
        energy.gradient(&u, &mut grad);
        if kernel == Kernel::Constants {
            project_mean_zero(&mut grad);
        }
        let gnorm = norm(&grad);
        if gnorm <= config.nonlinear_grad_tolerance {
            return Ok(Minimization {
                u,
                value,
                grad_norm: gnorm,
                iterations: it,
                energies,
            });
        }
        if it == cap {
            return Err(Error::NoConvergence {
                solver: "Newton descent",
                iterations: cap,
                residual: gnorm,
            });
        }
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut dir = energy
            .hessian(&u)
            .and_then(|h| cg_solve_with(&h, &neg, &inner, kernel))
            .map(|s| s.x)
            .unwrap_or_else(|_| neg.clone());
        if !(dot(&dir, &grad) < 0.0) {
            dir = neg;
        }
        let slope = dot(&dir, &grad);
        // The predicted decrease is below the rounding error of the energy
        // itself: the minimum is attained to working precision.
        if -slope <= ROUNDOFF_DECREASE * value.abs().max(f64::MIN_POSITIVE) {
            return Ok(Minimization {
                u,
                value,
                grad_norm: gnorm,
                iterations: it,
                energies,
            });
        }
        let mut t = 1.0;
        let mut trial = vec![0.0; n];
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                trial[i] = u[i] + t * dir[i];
            }
            let v = energy.value(&trial);
            if v <= value + ARMIJO_C * t * slope {
                // Armijo guarantees v <= value; assert the monotone contract.
                debug_assert!(v <= value);
                std::mem::swap(&mut u, &mut trial);
                value = v;
                energies.push(v);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                solver: "Newton descent (line search)",
                iterations: it,
                residual: gnorm,
            });
        }
    }
    unreachable!("loop returns at the iteration cap")
}

/// Discrete energy `scale · ∫ a(y) |ξ + ∇w|^p` with one coefficient per
/// element (`None` for inactive elements) and `w` fixed on non-free nodes.
pub struct PEnergyFunctional<'a> {
    grid: &'a Grid,
    basis: ElementBasis,
    dofs: &'a DofMap,
    coeffs: &'a [Option<f64>],
    p: f64,
    xi: [f64; 2],
    scale: f64,
}

impl<'a> PEnergyFunctional<'a> {
    pub fn new(
        grid: &'a Grid,
        dofs: &'a DofMap,
        coeffs: &'a [Option<f64>],
        p: f64,
        xi: &[f64],
        scale: f64,
    ) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("exponent p must exceed 1, got {p}")));
        }
        if xi.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: xi.len(),
            });
        }
        if coeffs.len() != grid.num_elements() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_elements(),
                found: coeffs.len(),
            });
        }
        Ok(PEnergyFunctional {
            grid,
            basis: ElementBasis::new(grid),
            dofs,
            coeffs,
            p,
            xi: pad(xi),
            scale,
        })
    }

    pub fn full(&self, free: &[f64]) -> Vec<f64> {
        self.dofs.expand(free, None)
    }
}

impl ConvexFunctional for PEnergyFunctional<'_> {
    fn len(&self) -> usize {
        self.dofs.n_free()
    }

    fn kernel(&self) -> Kernel {
        self.dofs.kernel()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let u = self.full(w);
        let npe = self.basis.nodes();
        let mut total = 0.0;
        for e in 0..self.grid.num_elements() {
            let Some(a) = self.coeffs[e] else { continue };
            let local = gather(&self.grid.element_nodes(e), npe, &u);
            for q in self.basis.points() {
                let g = self.basis.shifted_gradient(q, &self.xi, &local);
                let m = (g[0] * g[0] + g[1] * g[1]).sqrt();
                total += q.weight * a * m.powf(self.p);
            }
        }
        self.scale * total
    }

    fn gradient(&self, w: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let u = self.full(w);
        let npe = self.basis.nodes();
        for e in 0..self.grid.num_elements() {
            let Some(a) = self.coeffs[e] else { continue };
            let nodes = self.grid.element_nodes(e);
            let local = gather(&nodes, npe, &u);
            for q in self.basis.points() {
                let g = self.basis.shifted_gradient(q, &self.xi, &local);
                let m2 = g[0] * g[0] + g[1] * g[1];
                if m2 == 0.0 {
                    continue;
                }
                let c = self.scale * q.weight * a * self.p * m2.powf(0.5 * self.p - 1.0);
                for k in 0..npe {
                    if let Some(i) = self.dofs.dof(nodes[k]) {
                        grad[i] += c * (g[0] * q.grads[k][0] + g[1] * q.grads[k][1]);
                    }
                }
            }
        }
    }

    fn hessian(&self, w: &[f64]) -> Result<SparseSystem> {
        let u = self.full(w);
        let npe = self.basis.nodes();
        let n = self.dofs.n_free();
        let mut b = TripletBuilder::with_capacity(n, self.grid.num_elements() * npe * npe);
        for e in 0..self.grid.num_elements() {
            let Some(a) = self.coeffs[e] else { continue };
            let nodes = self.grid.element_nodes(e);
            let local = gather(&nodes, npe, &u);
            let mut ke = [[0.0; 4]; 4];
            for q in self.basis.points() {
                let g = self.basis.shifted_gradient(q, &self.xi, &local);
                let m2 = g[0] * g[0] + g[1] * g[1];
                if m2 == 0.0 {
                    continue;
                }
                let base = self.scale * q.weight * a * self.p * m2.powf(0.5 * self.p - 1.0);
                let aniso = (self.p - 2.0) / m2;
                for j in 0..npe {
                    let gj = q.grads[j];
                    let dj = g[0] * gj[0] + g[1] * gj[1];
                    for k in 0..npe {
                        let gk = q.grads[k];
                        let dk = g[0] * gk[0] + g[1] * gk[1];
                        ke[j][k] += base * (gj[0] * gk[0] + gj[1] * gk[1] + aniso * dj * dk);
                    }
                }
            }
            for j in 0..npe {
                let Some(r) = self.dofs.dof(nodes[j]) else { continue };
                for k in 0..npe {
                    if let Some(c) = self.dofs.dof(nodes[k]) {
                        b.add(r, c, ke[j][k]);
                    }
                }
            }
        }
        // Rounding in the anisotropic term can break exact symmetry.
        b.build(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grid::Topology;

    struct Quadratic {
        m: SparseSystem,
        b: Vec<f64>,
    }

    impl ConvexFunctional for Quadratic {
        fn len(&self) -> usize {
            self.b.len()
        }
        fn value(&self, u: &[f64]) -> f64 {
            0.5 * dot(u, &self.m.mul_vec(u)) - dot(u, &self.b)
        }
        fn gradient(&self, u: &[f64], grad: &mut [f64]) {
            let mu = self.m.mul_vec(u);
            for i in 0..u.len() {
                grad[i] = mu[i] - self.b[i];
            }
        }
        fn hessian(&self, _u: &[f64]) -> Result<SparseSystem> {
            Ok(self.m.clone())
        }
    }

    #[test]
    fn quadratic_converges_in_one_step() {
        let m = SparseSystem::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]], true).unwrap();
        let f = Quadratic { m, b: vec![1.0, 2.0] };
        let r = minimize_p_energy(&f, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert!(r.iterations <= 2);
        assert!((r.u[0] - 1.0 / 11.0).abs() < 1e-9 && (r.u[1] - 7.0 / 11.0).abs() < 1e-9);
    }

    #[test]
    fn constant_coefficient_has_zero_corrector() {
        let g = Grid::new(2, 8, &[0.0, 0.0], 1.0, Topology::Torus).unwrap();
        let dofs = DofMap::periodic(&g).unwrap();
        let coeffs = vec![Some(1.5); g.num_elements()];
        let f = PEnergyFunctional::new(&g, &dofs, &coeffs, 3.0, &[0.6, -0.8], 1.0).unwrap();
        let r = minimize_p_energy(&f, &vec![0.0; f.len()], &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!((r.value - 1.5).abs() < 1e-12);
        assert!(r.u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_exponent() {
        let g = Grid::new(1, 4, &[0.0], 1.0, Topology::Torus).unwrap();
        let dofs = DofMap::periodic(&g).unwrap();
        let coeffs = vec![Some(1.0); 4];
        assert!(PEnergyFunctional::new(&g, &dofs, &coeffs, 1.0, &[1.0], 1.0).is_err());
    }
}
