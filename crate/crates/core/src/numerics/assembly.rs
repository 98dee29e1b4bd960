//! Q1 element assembly on uniform grids.
//!
//! Every problem in the crate has the shape
//! `min { ∫ f(y, ξ + ∇w) + lower-order terms : w ∈ V }`
//! where `V` is periodic (torus), vanishes on the boundary (box), or lives
//! on a subset of active elements (perforations). Coefficients are constant
//! per element; gradients and masses are integrated with 2-point Gauss rules
//! per axis, which is exact for Q1 stiffness and mass products.

use super::grid::{Grid, Topology};
use super::solvers::Kernel;
use super::sparse::{SparseSystem, TripletBuilder};
use crate::error::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

pub fn scalar_matrix(a: f64) -> Mat2 {
    [[a, 0.0], [0.0, a]]
}

pub(crate) fn mat_vec(a: &Mat2, v: &[f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

/// Basis values and physical gradients at the Gauss points of one element.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    dim: usize,
    points: Vec<QuadPoint>,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// Reference coordinates in `[0,1]^d`.
    pub local: [f64; 2],
    pub weight: f64,
    pub values: [f64; 4],
    pub grads: [[f64; 2]; 4],
}

impl ElementBasis {
    pub fn new(grid: &Grid) -> Self {
        let dim = grid.dim();
        let h = grid.h();
        let g = 0.5 / 3f64.sqrt();
        let gauss = [0.5 - g, 0.5 + g];
        let mut points = Vec::new();
        if dim == 1 {
            for &s in &gauss {
                let mut q = QuadPoint {
                    local: [s, 0.0],
                    weight: h / 2.0,
                    values: [1.0 - s, s, 0.0, 0.0],
                    grads: [[0.0; 2]; 4],
                };
                q.grads[0][0] = -1.0 / h;
                q.grads[1][0] = 1.0 / h;
                points.push(q);
            }
        } else {
            for &t in &gauss {
                for &s in &gauss {
                    let vals = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
                    let grads = [
                        [-(1.0 - t) / h, -(1.0 - s) / h],
                        [(1.0 - t) / h, -s / h],
                        [-t / h, (1.0 - s) / h],
                        [t / h, s / h],
                    ];
                    points.push(QuadPoint {
                        local: [s, t],
                        weight: h * h / 4.0,
                        values: vals,
                        grads,
                    });
                }
            }
        }
        ElementBasis { dim, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[QuadPoint] {
        &self.points
    }

    pub fn nodes(&self) -> usize {
        1 << self.dim
    }

    /// `ξ + ∇u` at quadrature point `q` given local nodal values.
    #[inline]
    pub fn shifted_gradient(&self, q: &QuadPoint, xi: &[f64; 2], local: &[f64; 4]) -> [f64; 2] {
        let mut g = *xi;
        for (a, v) in local.iter().enumerate().take(self.nodes()) {
            g[0] += v * q.grads[a][0];
            g[1] += v * q.grads[a][1];
        }
        g
    }
}

/// Maps grid nodes to unknowns. Nodes without an unknown are either fixed
/// (box boundary) or unused (interior of a hole).
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    map: Vec<Option<usize>>,
    fixed: Vec<bool>,
    n_free: usize,
    kernel: Kernel,
}

impl DofMap {
    /// All nodes free on a torus; constants span the kernel.
    pub fn periodic(grid: &Grid) -> Result<Self> {
        Self::restricted(grid, &vec![true; grid.num_elements()])
    }

    /// Interior nodes of a box free, boundary nodes fixed.
    pub fn dirichlet(grid: &Grid) -> Result<Self> {
        Self::restricted(grid, &vec![true; grid.num_elements()])
    }

    /// Unknowns on nodes touched by active elements. On a torus the active
    /// set must be connected; on a box every component must reach the
    /// boundary. Either failure leaves zero-energy modes beyond constants.
    pub fn restricted(grid: &Grid, active: &[bool]) -> Result<Self> {
        if active.len() != grid.num_elements() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_elements(),
                found: active.len(),
            });
        }
        let nn = grid.num_nodes();
        let npe = grid.nodes_per_element();
        let n = grid.cells_per_axis();
        let torus = grid.topology() == Topology::Torus;
        let mut touched = vec![false; nn];
        let mut uf = UnionFind::new(nn);
        for e in (0..grid.num_elements()).filter(|&e| active[e]) {
            let nodes = grid.element_nodes(e);
            let [ei, ej] = grid.element_multi_index(e);
            // Cell offset of each local node in the periodic lift.
            let lift = |a: usize| -> [i64; 2] {
                if !torus {
                    return [0, 0];
                }
                [((ei + (a & 1)) / n) as i64, ((ej + (a >> 1)) / n) as i64]
            };
            for a in 0..npe {
                touched[nodes[a]] = true;
                uf.union(nodes[0], lift(0), nodes[a], lift(a));
            }
        }
        let fixed: Vec<bool> = (0..nn)
            .map(|k| touched[k] && grid.is_boundary_node(k))
            .collect();
        let mut map = vec![None; nn];
        let mut n_free = 0;
        for k in 0..nn {
            if touched[k] && !fixed[k] {
                map[k] = Some(n_free);
                n_free += 1;
            }
        }
        // Component analysis.
        let mut roots: Vec<usize> = (0..nn).filter(|&k| touched[k]).map(|k| uf.find(k).0).collect();
        roots.sort_unstable();
        roots.dedup();
        let kernel = match grid.topology() {
            Topology::Torus => {
                if roots.len() > 1 {
                    return Err(Error::DisconnectedDomain {
                        components: roots.len(),
                    });
                }
                // The lift to the whole space is connected only if the
                // windings of closed paths generate every lattice translation.
                let index = uf.windings.index(grid.dim());
                if index != Some(1) {
                    return Err(Error::NonPercolating { lattice_index: index });
                }
                Kernel::Constants
            }
            Topology::Box => {
                let mut anchored: Vec<usize> = (0..nn)
                    .filter(|&k| fixed[k])
                    .map(|k| uf.find(k).0)
                    .collect();
                anchored.sort_unstable();
                anchored.dedup();
                let floating = roots.iter().filter(|r| anchored.binary_search(r).is_err()).count();
                if floating > 0 {
                    return Err(Error::DisconnectedDomain {
                        components: roots.len(),
                    });
                }
                Kernel::Trivial
            }
        };
        if n_free == 0 {
            return Err(Error::invalid("discrete problem has no unknowns"));
        }
        Ok(DofMap {
            map,
            fixed,
            n_free,
            kernel,
        })
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    #[inline]
    pub fn dof(&self, node: usize) -> Option<usize> {
        self.map[node]
    }

    pub fn is_fixed(&self, node: usize) -> bool {
        self.fixed[node]
    }

    /// Full nodal vector: unknowns from `free`, fixed nodes from `fixed_values`,
    /// unused nodes zero.
    pub fn expand(&self, free: &[f64], fixed_values: Option<&[f64]>) -> Vec<f64> {
        self.map
            .iter()
            .enumerate()
            .map(|(k, d)| match d {
                Some(i) => free[*i],
                None if self.fixed[k] => fixed_values.map_or(0.0, |v| v[k]),
                None => 0.0,
            })
            .collect()
    }
}

/// Union-find over torus nodes that records, for every node, its cell
/// offset relative to the root in the periodic lift. Closing a loop whose
/// lifted endpoints differ yields a winding vector.
struct UnionFind {
    parent: Vec<usize>,
    offset: Vec<[i64; 2]>,
    windings: Lattice,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            offset: vec![[0, 0]; n],
            windings: Lattice::default(),
        }
    }

    /// Root of `x` and the offset of `x` relative to it.
    fn find(&mut self, x: usize) -> (usize, [i64; 2]) {
        let mut path = Vec::new();
        let mut root = x;
        while self.parent[root] != root {
            path.push(root);
            root = self.parent[root];
        }
        // Walk back from the node nearest the root, accumulating offsets.
        let mut acc = [0i64, 0];
        for &node in path.iter().rev() {
            let o = self.offset[node];
            acc = [acc[0] + o[0], acc[1] + o[1]];
            self.parent[node] = root;
            self.offset[node] = acc;
        }
        (root, if path.is_empty() { [0, 0] } else { self.offset[x] })
    }

    /// Joins the copy of `a` in lift cell `oa` with the copy of `b` in cell `ob`.
    fn union(&mut self, a: usize, oa: [i64; 2], b: usize, ob: [i64; 2]) {
        let (ra, da) = self.find(a);
        let (rb, db) = self.find(b);
        // Cells of the two roots' copies that the new edge connects.
        let ca = [oa[0] - da[0], oa[1] - da[1]];
        let cb = [ob[0] - db[0], ob[1] - db[1]];
        let w = [ca[0] - cb[0], ca[1] - cb[1]];
        if ra == rb {
            self.windings.insert(w);
            return;
        }
        let (lo, hi, w) = if ra < rb { (ra, rb, w) } else { (rb, ra, [-w[0], -w[1]]) };
        self.parent[hi] = lo;
        self.offset[hi] = w;
    }
}

/// Sublattice of Z² in Hermite normal form `[[a, b], [0, c]]`.
#[derive(Debug, Default)]
struct Lattice {
    a: i64,
    b: i64,
    c: i64,
}

fn ext_gcd(x: i64, y: i64) -> (i64, i64, i64) {
    if y == 0 {
        (x.abs(), x.signum(), 0)
    } else {
        let (g, s, t) = ext_gcd(y, x.rem_euclid(y));
        (g, t, s - x.div_euclid(y) * t)
    }
}

impl Lattice {
    fn insert(&mut self, v: [i64; 2]) {
        if v == [0, 0] {
            return;
        }
        // Combine v with the first basis row on the first coordinate.
        let (g, s, t) = ext_gcd(self.a, v[0]);
        let (row, rest) = if g == 0 {
            ([0, self.b], [0, v[1]])
        } else {
            let row = [g, s * self.b + t * v[1]];
            let (ka, kv) = (self.a / g, v[0] / g);
            // kv·(a, b) − ka·(v0, v1) has zero first coordinate.
            (row, [0, kv * self.b - ka * v[1]])
        };
        self.a = row[0];
        self.b = row[1];
        self.c = ext_gcd(self.c, rest[1]).0;
        if g == 0 {
            // No first-coordinate generator yet: b belongs to the second axis.
            self.c = ext_gcd(self.c, self.b).0;
            self.b = 0;
        } else if self.c != 0 {
            self.b = self.b.rem_euclid(self.c);
        }
    }

    /// Index of the lattice in `Z^dim`, or `None` when it is not full rank.
    fn index(&self, dim: usize) -> Option<i64> {
        if dim == 1 {
            return (self.a != 0).then_some(self.a);
        }
        (self.a != 0 && self.c != 0).then_some(self.a * self.c)
    }
}

/// Reaction and source terms `∫ w (λ u² − 2 s u)` with an element weight `w`.
pub struct LowerOrder<'a> {
    pub lambda: f64,
    pub weights: &'a [f64],
    pub source: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
}

/// Quadratic problem data on a grid: one coefficient matrix per element,
/// `None` for inactive (hole) elements.
pub struct QuadraticProblem<'a> {
    pub grid: &'a Grid,
    pub basis: ElementBasis,
    pub dofs: &'a DofMap,
    pub coeffs: &'a [Option<Mat2>],
}

impl<'a> QuadraticProblem<'a> {
    pub fn new(grid: &'a Grid, dofs: &'a DofMap, coeffs: &'a [Option<Mat2>]) -> Result<Self> {
        if coeffs.len() != grid.num_elements() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_elements(),
                found: coeffs.len(),
            });
        }
        Ok(QuadraticProblem {
            grid,
            basis: ElementBasis::new(grid),
            dofs,
            coeffs,
        })
    }

    fn is_symmetric(&self) -> bool {
        self.coeffs
            .iter()
            .flatten()
            .all(|m| m[0][1] == m[1][0])
    }

    fn local_nodes(&self, e: usize) -> [usize; 4] {
        self.grid.element_nodes(e)
    }

    /// Assembles `K w = rhs` for the Euler equation
    /// `∫ <A(ξ + ∇w), ∇φ> + λ w_e w φ − w_e s φ = 0` over free test functions,
    /// with fixed nodal values taken from `fixed_values`.
    pub fn assemble(
        &self,
        xi: &[f64],
        fixed_values: Option<&[f64]>,
        lower: Option<&LowerOrder>,
    ) -> Result<(SparseSystem, Vec<f64>)> {
        let dim = self.grid.dim();
        if xi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: xi.len(),
            });
        }
        let mut xi2 = [0.0; 2];
        xi2[..dim].copy_from_slice(xi);
        let npe = self.basis.nodes();
        let n = self.dofs.n_free();
        let mut builder = TripletBuilder::with_capacity(n, self.grid.num_elements() * npe * npe);
        let mut rhs = vec![0.0; n];
        for e in 0..self.grid.num_elements() {
            let Some(a) = self.coeffs[e] else { continue };
            let nodes = self.local_nodes(e);
            let mut ke = [[0.0; 4]; 4];
            let mut fe = [0.0; 4];
            let (react, weight) = match lower {
                Some(l) => (l.lambda * l.weights[e], l.weights[e]),
                None => (0.0, 0.0),
            };
            let corner = self.grid.element_corner(e);
            let h = self.grid.h();
            for q in self.basis.points() {
                let axi = mat_vec(&a, &xi2);
                let src = if weight != 0.0 {
                    let x = [corner[0] + h * q.local[0], corner[1] + h * q.local[1]];
                    lower.map_or(0.0, |l| (l.source)(x)) * weight
                } else {
                    0.0
                };
                let mut ag = [[0.0; 2]; 4];
                for k in 0..npe {
                    ag[k] = mat_vec(&a, &q.grads[k]);
                }
                for j in 0..npe {
                    let gj = q.grads[j];
                    fe[j] -= q.weight * (axi[0] * gj[0] + axi[1] * gj[1]);
                    fe[j] += q.weight * src * q.values[j];
                    for k in 0..npe {
                        let agk = ag[k];
                        ke[j][k] += q.weight
                            * (agk[0] * gj[0] + agk[1] * gj[1] + react * q.values[j] * q.values[k]);
                    }
                }
            }
            for j in 0..npe {
                let Some(row) = self.dofs.dof(nodes[j]) else { continue };
                rhs[row] += fe[j];
                for k in 0..npe {
                    match self.dofs.dof(nodes[k]) {
                        Some(col) => builder.add(row, col, ke[j][k]),
                        None => {
                            if let Some(v) = fixed_values {
                                if self.dofs.is_fixed(nodes[k]) {
                                    rhs[row] -= ke[j][k] * v[nodes[k]];
                                }
                            }
                        }
                    }
                }
            }
        }
        let sys = builder.build(self.is_symmetric())?;
        Ok((sys, rhs))
    }

    /// `∫ <A(ξ+∇u), ξ+∇u>` over active elements for a full nodal vector.
    pub fn energy(&self, xi: &[f64], u: &[f64]) -> f64 {
        let xi2 = pad(xi);
        let npe = self.basis.nodes();
        let mut total = 0.0;
        for e in 0..self.grid.num_elements() {
            let Some(a) = self.coeffs[e] else { continue };
            let local = gather(&self.local_nodes(e), npe, u);
            for q in self.basis.points() {
                let g = self.basis.shifted_gradient(q, &xi2, &local);
                let ag = mat_vec(&a, &g);
                total += q.weight * (ag[0] * g[0] + ag[1] * g[1]);
            }
        }
        total
    }

    /// `∫ A(ξ+∇u)` over active elements.
    pub fn flux(&self, xi: &[f64], u: &[f64]) -> [f64; 2] {
        let xi2 = pad(xi);
        let npe = self.basis.nodes();
        let mut total = [0.0; 2];
        for e in 0..self.grid.num_elements() {
            let Some(a) = self.coeffs[e] else { continue };
            let local = gather(&self.local_nodes(e), npe, u);
            for q in self.basis.points() {
                let g = self.basis.shifted_gradient(q, &xi2, &local);
                let ag = mat_vec(&a, &g);
                total[0] += q.weight * ag[0];
                total[1] += q.weight * ag[1];
            }
        }
        total
    }
}

/// `∫ u²` of the Q1 interpolant over the whole grid.
pub fn l2_norm_squared(grid: &Grid, u: &[f64]) -> f64 {
    let basis = ElementBasis::new(grid);
    let npe = basis.nodes();
    let mut total = 0.0;
    for e in 0..grid.num_elements() {
        let local = gather(&grid.element_nodes(e), npe, u);
        for q in basis.points() {
            let v: f64 = (0..npe).map(|a| q.values[a] * local[a]).sum();
            total += q.weight * v * v;
        }
    }
    total
}

#[inline]
pub(crate) fn pad(xi: &[f64]) -> [f64; 2] {
    let mut x = [0.0; 2];
    x[..xi.len()].copy_from_slice(xi);
    x
}

#[inline]
pub(crate) fn gather(nodes: &[usize; 4], npe: usize, u: &[f64]) -> [f64; 4] {
    let mut local = [0.0; 4];
    for a in 0..npe {
        local[a] = u[nodes[a]];
    }
    local
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::solvers::{cg_solve_with, SolverConfig};

    #[test]
    fn basis_partition_of_unity() {
        let g = Grid::new(2, 4, &[0.0, 0.0], 1.0, Topology::Box).unwrap();
        let b = ElementBasis::new(&g);
        let total_weight: f64 = b.points().iter().map(|q| q.weight).sum();
        assert!((total_weight - g.element_volume()).abs() < 1e-15);
        for q in b.points() {
            let s: f64 = q.values.iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
            let gx: f64 = q.grads.iter().map(|g| g[0]).sum();
            assert!(gx.abs() < 1e-12);
        }
    }

    #[test]
    fn manufactured_bilinear_solution_is_exact() {
        // u = xy is harmonic and bilinear, so Q1 reproduces it at the nodes.
        let g = Grid::new(2, 16, &[0.0, 0.0], 1.0, Topology::Box).unwrap();
        let dofs = DofMap::dirichlet(&g).unwrap();
        let coeffs = vec![Some(scalar_matrix(1.0)); g.num_elements()];
        let prob = QuadraticProblem::new(&g, &dofs, &coeffs).unwrap();
        let exact: Vec<f64> = (0..g.num_nodes())
            .map(|k| {
                let x = g.node_coords(k);
                x[0] * x[1]
            })
            .collect();
        let (k, rhs) = prob.assemble(&[0.0, 0.0], Some(&exact), None).unwrap();
        let cfg = SolverConfig::default();
        let sol = cg_solve_with(&k, &rhs, &cfg, dofs.kernel()).unwrap();
        let u = dofs.expand(&sol.x, Some(&exact));
        let err = u.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-8, "nodal error {err}");
    }

    #[test]
    fn disconnected_active_set_is_detected() {
        let g = Grid::new(1, 8, &[0.0], 1.0, Topology::Torus).unwrap();
        let active: Vec<bool> = (0..8).map(|e| e != 2 && e != 6).collect();
        assert!(matches!(
            DofMap::restricted(&g, &active),
            Err(Error::DisconnectedDomain { components: 2 })
        ));
        // A circle with one gap is connected, but its lift to the line is not.
        let active: Vec<bool> = (0..8).map(|e| e != 2).collect();
        assert!(matches!(
            DofMap::restricted(&g, &active),
            Err(Error::NonPercolating { lattice_index: None })
        ));
        assert!(DofMap::periodic(&g).is_ok());
    }

    #[test]
    fn winding_lattice() {
        let mut l = Lattice::default();
        l.insert([2, 0]);
        assert_eq!(l.index(2), None);
        l.insert([0, 4]);
        assert_eq!(l.index(2), Some(8));
        l.insert([1, 1]);
        assert_eq!(l.index(2), Some(2));
        l.insert([0, 1]);
        assert_eq!(l.index(2), Some(1));
        let mut l = Lattice::default();
        l.insert([0, 1]);
        l.insert([0, -1]);
        assert_eq!(l.index(2), None);
        l.insert([1, 5]);
        assert_eq!(l.index(2), Some(1));
    }
}
