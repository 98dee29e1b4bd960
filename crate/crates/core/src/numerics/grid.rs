//! Uniform rectangular meshes in one and two dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary identification of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Opposite faces identified; `n` nodes per axis.
    Torus,
    /// Closed box; `n + 1` nodes per axis.
    Box,
}

/// A uniform mesh of `n^d` square cells carrying P1 (1D) or Q1 (2D) elements.
///
/// Nodes are numbered lexicographically with the first axis fastest.
/// Elements use the local ordering `i + 2 j` for the corner `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    origin: [f64; 2],
    side: f64,
    topology: Topology,
}

impl Grid {
    pub fn new(
        dim: usize,
        cells_per_axis: usize,
        origin: &[f64],
        side_length: f64,
        topology: Topology,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if cells_per_axis < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 cells per axis, got {cells_per_axis}"
            )));
        }
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(Error::invalid(format!(
                "side length must be positive, got {side_length}"
            )));
        }
        if origin.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: origin.len(),
            });
        }
        if origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        let mut o = [0.0; 2];
        o[..dim].copy_from_slice(origin);
        Ok(Grid {
            dim,
            n: cells_per_axis,
            origin: o,
            side: side_length,
            topology,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn side_length(&self) -> f64 {
        self.side
    }

    /// Cell size `L / n`.
    pub fn h(&self) -> f64 {
        self.side / self.n as f64
    }

    /// Measure of the whole domain, `L^d`.
    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn element_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn nodes_per_axis(&self) -> usize {
        match self.topology {
            Topology::Torus => self.n,
            Topology::Box => self.n + 1,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    pub fn num_elements(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Nodes per element, `2^d`.
    pub fn nodes_per_element(&self) -> usize {
        1 << self.dim
    }

    /// Node index of the multi-index `(i, j)`; torus indices wrap.
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        let m = self.nodes_per_axis();
        let (i, j) = match self.topology {
            Topology::Torus => (i % m, j % m),
            Topology::Box => (i, j),
        };
        if self.dim == 1 {
            i
        } else {
            i + m * j
        }
    }

    pub fn node_multi_index(&self, k: usize) -> [usize; 2] {
        let m = self.nodes_per_axis();
        if self.dim == 1 {
            [k, 0]
        } else {
            [k % m, k / m]
        }
    }

    /// Physical coordinates `origin + h * multi_index` of node `k`.
    pub fn node_coords(&self, k: usize) -> [f64; 2] {
        let idx = self.node_multi_index(k);
        let h = self.h();
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = self.origin[a] + h * idx[a] as f64;
        }
        x
    }

    /// True when node `k` lies on the boundary of a box grid.
    pub fn is_boundary_node(&self, k: usize) -> bool {
        if self.topology == Topology::Torus {
            return false;
        }
        let idx = self.node_multi_index(k);
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] == self.n)
    }

    pub fn element_multi_index(&self, e: usize) -> [usize; 2] {
        if self.dim == 1 {
            [e, 0]
        } else {
            [e % self.n, e / self.n]
        }
    }

    /// Global node indices of element `e` in local order; only the first
    /// `nodes_per_element()` entries are meaningful.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let [i, j] = self.element_multi_index(e);
        if self.dim == 1 {
            [self.node_index(i, 0), self.node_index(i + 1, 0), 0, 0]
        } else {
            [
                self.node_index(i, j),
                self.node_index(i + 1, j),
                self.node_index(i, j + 1),
                self.node_index(i + 1, j + 1),
            ]
        }
    }

    pub fn element_center(&self, e: usize) -> [f64; 2] {
        let idx = self.element_multi_index(e);
        let h = self.h();
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = self.origin[a] + h * (idx[a] as f64 + 0.5);
        }
        x
    }

    /// Lower-left corner of element `e`.
    pub fn element_corner(&self, e: usize) -> [f64; 2] {
        let idx = self.element_multi_index(e);
        let h = self.h();
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = self.origin[a] + h * idx[a] as f64;
        }
        x
    }
}

/// Samples the affine function `x -> <xi, x>` at the nodes of a box grid.
pub fn interpolate_affine(grid: &Grid, xi: &[f64]) -> Result<Vec<f64>> {
    if xi.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: xi.len(),
        });
    }
    if grid.topology() != Topology::Box {
        return Err(Error::invalid(
            "affine boundary data needs a box grid; a torus cannot carry a non-periodic affine function",
        ));
    }
    Ok((0..grid.num_nodes())
        .map(|k| {
            let x = grid.node_coords(k);
            xi.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
        })
        .collect())
}
