//! Periodic simplicial meshes.
//!
//! A [`Mesh`] keeps the full grid of vertices as they appear in the
//! triangulation together with a periodic identification that maps every
//! grid vertex onto a logical node. All finite-element quantities live on
//! logical nodes.

mod io;
mod quality;

pub use io::{load_mesh, parse_mesh, write_mesh};
pub use quality::{check_mesh, MeshQualityReport};

use std::str::FromStr;

use crate::error::{Error, Result};

/// Direction of the diagonal used to split each square of a structured grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagonal {
    /// From the lower-left to the upper-right corner.
    NE,
    /// From the lower-right to the upper-left corner.
    NW,
}

impl FromStr for Diagonal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ne" => Ok(Diagonal::NE),
            "nw" => Ok(Diagonal::NW),
            other => Err(Error::invalid(format!("unknown diagonal '{other}'"))),
        }
    }
}

/// Barycentric gradients and volume of a single cell.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub volume: f64,
    /// Gradient of each local barycentric coordinate; only the first
    /// `dim + 1` rows are meaningful and unused components are zero.
    pub gradients: [[f64; 3]; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    node_of_vertex: Vec<usize>,
    node_vertex: Vec<usize>,
    h: f64,
    domain_volume: f64,
}

impl Mesh {
    /// Builds and validates a mesh.
    ///
    /// `coords` is a flat list of `dim` coordinates per vertex and `cells` a
    /// flat list of `dim + 1` vertex indices per cell. Each periodic pair
    /// `(slave, master)` identifies two vertices; chains are followed so the
    /// identification is transitive.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
        periodic_pairs: &[(usize, usize)],
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidMesh(format!(
                "coordinate array length {} is not a multiple of {dim}",
                coords.len()
            )));
        }
        let n_vertices = coords.len() / dim;
        let per_cell = dim + 1;
        if cells.is_empty() || !cells.len().is_multiple_of(per_cell) {
            return Err(Error::InvalidMesh(format!(
                "cell array length {} is not a positive multiple of {per_cell}",
                cells.len()
            )));
        }
        if let Some(&v) = cells.iter().find(|&&v| v >= n_vertices) {
            return Err(Error::InvalidMesh(format!(
                "cell references vertex {v}, but the mesh has {n_vertices} vertices"
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }

        let (node_of_vertex, node_vertex) = identify_periodic(n_vertices, periodic_pairs)?;

        let mut mesh = Mesh {
            dim,
            coords,
            cells,
            node_of_vertex,
            node_vertex,
            h: 0.0,
            domain_volume: 0.0,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&mut self) -> Result<()> {
        let dim = self.dim;

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in 0..self.n_vertices() {
            for (d, &x) in self.vertex(v).iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        let extent: Vec<f64> = (0..dim).map(|d| hi[d] - lo[d]).collect();
        self.domain_volume = extent.iter().product();
        if self.domain_volume <= 0.0 {
            return Err(Error::InvalidMesh("mesh has an empty bounding box".into()));
        }

        let mut h: f64 = 0.0;
        let mut total = 0.0;
        for c in 0..self.n_cells() {
            let verts = self.cell(c);
            let mut diam: f64 = 0.0;
            for a in 0..verts.len() {
                for b in a + 1..verts.len() {
                    let pa = self.vertex(verts[a]);
                    let pb = self.vertex(verts[b]);
                    let d2: f64 = pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum();
                    diam = diam.max(d2.sqrt());
                }
            }
            let vol = self.signed_volume(c);
            if vol < 0.0 {
                return Err(Error::InvertedElement {
                    cell: c,
                    volume: vol,
                });
            }
            if vol <= 1e-14 * diam.powi(dim as i32) {
                return Err(Error::DegenerateElement {
                    cell: c,
                    volume: vol,
                });
            }
            h = h.max(diam);
            total += vol;

            let nodes = self.cell_nodes(c);
            for a in 0..nodes.len() {
                if nodes[a + 1..].contains(&nodes[a]) {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} has two vertices identified with logical node {}",
                        nodes[a]
                    )));
                }
            }
        }
        if (total - self.domain_volume).abs() > 1e-12 * self.domain_volume.max(1.0) {
            return Err(Error::InvalidMesh(format!(
                "cells cover volume {total}, bounding box volume is {}",
                self.domain_volume
            )));
        }
        self.h = h;

        // identified vertices must differ by a lattice translation of the box
        for v in 0..self.n_vertices() {
            let rep = self.representative_vertex(v);
            if rep == v {
                continue;
            }
            let (pv, pr) = (self.vertex(v), self.vertex(rep));
            for d in 0..dim {
                let shift = (pv[d] - pr[d]).abs();
                let tol = 1e-9 * extent[d];
                if shift > tol && (shift - extent[d]).abs() > tol {
                    return Err(Error::InvalidMesh(format!(
                        "periodic vertices {v} and {rep} are not related by a translation of the domain"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.node_of_vertex.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    /// Number of logical nodes after periodic identification.
    pub fn n_nodes(&self) -> usize {
        self.node_vertex.len()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Volume of the axis-aligned bounding box, i.e. |Ω|.
    pub fn domain_volume(&self) -> f64 {
        self.domain_volume
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.cells[c * n..(c + 1) * n]
    }

    /// Logical node of a grid vertex.
    pub fn node_of(&self, v: usize) -> usize {
        self.node_of_vertex[v]
    }

    /// The grid vertex whose coordinates represent logical node `i`.
    pub fn node_vertex(&self, i: usize) -> usize {
        self.node_vertex[i]
    }

    /// Coordinates of logical node `i`.
    pub fn node_coord(&self, i: usize) -> &[f64] {
        self.vertex(self.node_vertex[i])
    }

    /// Applies the periodic identification to a grid vertex.
    pub fn representative_vertex(&self, v: usize) -> usize {
        self.node_vertex[self.node_of_vertex[v]]
    }

    /// `(slave, master)` pairs reproducing this mesh's identification.
    pub fn periodic_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n_vertices())
            .filter_map(|v| {
                let rep = self.representative_vertex(v);
                (rep != v).then_some((v, rep))
            })
            .collect()
    }

    /// Logical nodes of cell `c`, in local vertex order.
    pub fn cell_nodes(&self, c: usize) -> Vec<usize> {
        self.cell(c)
            .iter()
            .map(|&v| self.node_of_vertex[v])
            .collect()
    }

    pub fn signed_volume(&self, c: usize) -> f64 {
        let verts = self.cell(c);
        let p0 = self.vertex(verts[0]);
        let edge = |k: usize| -> [f64; 3] {
            let p = self.vertex(verts[k]);
            let mut e = [0.0; 3];
            for d in 0..self.dim {
                e[d] = p[d] - p0[d];
            }
            e
        };
        match self.dim {
            2 => {
                let (a, b) = (edge(1), edge(2));
                0.5 * (a[0] * b[1] - a[1] * b[0])
            }
            _ => {
                let (a, b, c) = (edge(1), edge(2), edge(3));
                crate::vec3::dot(a, crate::vec3::cross(b, c)) / 6.0
            }
        }
    }

    /// Volume and barycentric gradients of cell `c`.
    pub fn cell_geometry(&self, c: usize) -> CellGeometry {
        use crate::vec3::{cross, dot, scale};

        let verts = self.cell(c);
        let p0 = self.vertex(verts[0]);
        let edge = |k: usize| -> [f64; 3] {
            let p = self.vertex(verts[k]);
            let mut e = [0.0; 3];
            for d in 0..self.dim {
                e[d] = p[d] - p0[d];
            }
            e
        };
        let mut gradients = [[0.0; 3]; 4];
        let volume = match self.dim {
            2 => {
                let (a, b) = (edge(1), edge(2));
                let det = a[0] * b[1] - a[1] * b[0];
                gradients[1] = [b[1] / det, -b[0] / det, 0.0];
                gradients[2] = [-a[1] / det, a[0] / det, 0.0];
                0.5 * det
            }
            _ => {
                let (a, b, e) = (edge(1), edge(2), edge(3));
                let det = dot(a, cross(b, e));
                gradients[1] = scale(1.0 / det, cross(b, e));
                gradients[2] = scale(1.0 / det, cross(e, a));
                gradients[3] = scale(1.0 / det, cross(a, b));
                det / 6.0
            }
        };
        for d in 0..3 {
            gradients[0][d] = -(1..=self.dim).map(|k| gradients[k][d]).sum::<f64>();
        }
        CellGeometry { volume, gradients }
    }

    /// Sum of all cell volumes.
    pub fn total_volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.signed_volume(c)).sum()
    }
}

/// Resolves periodic pairs into a vertex-to-node map and the representative
/// vertex of every node.
fn identify_periodic(
    n_vertices: usize,
    pairs: &[(usize, usize)],
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut parent: Vec<usize> = (0..n_vertices).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }

    let mut is_slave = vec![false; n_vertices];
    for (p, &(slave, master)) in pairs.iter().enumerate() {
        for v in [slave, master] {
            if v >= n_vertices {
                return Err(Error::DanglingPeriodicPair {
                    pair: p,
                    vertex: v,
                    n_vertices,
                });
            }
        }
        if slave == master {
            continue;
        }
        is_slave[slave] = true;
        let (a, b) = (find(&mut parent, slave), find(&mut parent, master));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent[hi] = lo;
        }
    }

    // representative: lowest-index vertex of the class that is never a slave
    let mut rep_of_root = vec![usize::MAX; n_vertices];
    let mut fallback = vec![usize::MAX; n_vertices];
    for v in 0..n_vertices {
        let r = find(&mut parent, v);
        if fallback[r] == usize::MAX {
            fallback[r] = v;
        }
        if !is_slave[v] && rep_of_root[r] == usize::MAX {
            rep_of_root[r] = v;
        }
    }
    let mut reps: Vec<(usize, usize)> = Vec::new();
    for r in 0..n_vertices {
        if parent[r] == r {
            let rep = if rep_of_root[r] != usize::MAX {
                rep_of_root[r]
            } else {
                fallback[r]
            };
            reps.push((rep, r));
        }
    }
    reps.sort_unstable();

    let mut node_of_root = vec![usize::MAX; n_vertices];
    let mut node_vertex = Vec::with_capacity(reps.len());
    for (node, &(rep, root)) in reps.iter().enumerate() {
        node_of_root[root] = node;
        node_vertex.push(rep);
    }
    let node_of_vertex = (0..n_vertices)
        .map(|v| node_of_root[find(&mut parent, v)])
        .collect();
    Ok((node_of_vertex, node_vertex))
}

/// Unit square split into `n x n` squares, each cut into two right
/// triangles along `diagonal`, with all four sides periodically identified.
pub fn generate_structured(n: usize, diagonal: Diagonal) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "structured mesh needs n >= 2, got {n}"
        )));
    }
    let stride = n + 1;
    let idx = |i: usize, j: usize| j * stride + i;

    let mut coords = Vec::with_capacity(2 * stride * stride);
    for j in 0..=n {
        for i in 0..=n {
            coords.push(i as f64 / n as f64);
            coords.push(j as f64 / n as f64);
        }
    }

    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            match diagonal {
                Diagonal::NE => cells.extend_from_slice(&[v00, v10, v11, v00, v11, v01]),
                Diagonal::NW => cells.extend_from_slice(&[v00, v10, v01, v10, v11, v01]),
            }
        }
    }

    let mut pairs = Vec::with_capacity(2 * n + 1);
    for j in 0..=n {
        for i in 0..=n {
            if i == n || j == n {
                pairs.push((idx(i, j), idx(i % n, j % n)));
            }
        }
    }
    Mesh::new(2, coords, cells, &pairs)
}
