//! P1 finite-element operators on the logical (periodic) node set.

mod sparse;

pub use sparse::CsrMatrix;

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::vec3::{self, Vec3};

/// One 3-vector per logical node, representing `sum_i w_i phi_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField(Vec<Vec3>);

impl NodalField {
    pub fn new(values: Vec<Vec3>) -> Self {
        NodalField(values)
    }

    pub fn zeros(n: usize) -> Self {
        NodalField(vec![vec3::ZERO; n])
    }

    pub fn constant(n: usize, value: Vec3) -> Self {
        NodalField(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Vec3] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec3> {
        self.0.iter()
    }
}

impl Index<usize> for NodalField {
    type Output = Vec3;

    fn index(&self, i: usize) -> &Vec3 {
        &self.0[i]
    }
}

impl IndexMut<usize> for NodalField {
    fn index_mut(&mut self, i: usize) -> &mut Vec3 {
        &mut self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    Mass,
    Stiffness,
}

/// Consistent mass matrix, stiffness matrix and lumped mass of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct P1Operators {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    /// `b_i`, the integral of the i-th basis function.
    pub lumped: Vec<f64>,
    pub h: f64,
    pub dim: usize,
}

impl P1Operators {
    pub fn n_nodes(&self) -> usize {
        self.lumped.len()
    }

    pub fn matrix(&self, op: Operator) -> &CsrMatrix {
        match op {
            Operator::Mass => &self.mass,
            Operator::Stiffness => &self.stiffness,
        }
    }

    /// Componentwise product of `M` or `A` with a nodal field.
    pub fn apply(&self, op: Operator, field: &NodalField) -> Result<NodalField> {
        let mut out = NodalField::zeros(self.n_nodes());
        self.matrix(op).apply3(field.values(), out.values_mut())?;
        Ok(out)
    }

    /// `sum_i b_i |w_i|^2`
    pub fn lumped_norm_sq(&self, values: &[Vec3]) -> f64 {
        self.lumped
            .iter()
            .zip(values)
            .map(|(b, w)| b * vec3::norm_sq(*w))
            .sum()
    }
}

/// Local mass matrix entry of a P1 simplex: `vol (1 + delta_ab) / ((d+1)(d+2))`.
fn local_mass(dim: usize, volume: f64, a: usize, b: usize) -> f64 {
    let denom = ((dim + 1) * (dim + 2)) as f64;
    if a == b {
        2.0 * volume / denom
    } else {
        volume / denom
    }
}

/// Assembles `M`, `A` and `b` on the logical nodes of `mesh`.
pub fn assemble(mesh: &Mesh) -> Result<P1Operators> {
    let n = mesh.n_nodes();
    let dim = mesh.dim();
    let local = dim + 1;
    let mut mass = Vec::with_capacity(mesh.n_cells() * local * local);
    let mut stiffness = Vec::with_capacity(mesh.n_cells() * local * local);
    let mut lumped = vec![0.0; n];

    for c in 0..mesh.n_cells() {
        let geo = mesh.cell_geometry(c);
        if !(geo.volume > 0.0) || !geo.volume.is_finite() {
            return Err(Error::DegenerateElement {
                cell: c,
                volume: geo.volume,
            });
        }
        let nodes = mesh.cell_nodes(c);
        for a in 0..local {
            lumped[nodes[a]] += geo.volume / local as f64;
            for b in 0..local {
                mass.push((nodes[a], nodes[b], local_mass(dim, geo.volume, a, b)));
                let k = geo.volume * vec3::dot(geo.gradients[a], geo.gradients[b]);
                stiffness.push((nodes[a], nodes[b], k));
            }
        }
    }

    Ok(P1Operators {
        mass: CsrMatrix::from_triplets(n, mass),
        stiffness: CsrMatrix::from_triplets(n, stiffness),
        lumped,
        h: mesh.h(),
        dim,
    })
}

/// Nodal interpolant: `values[i] = f(x_i)` at each logical node.
pub fn interpolate(mesh: &Mesh, f: impl Fn(&[f64]) -> Vec3) -> NodalField {
    NodalField((0..mesh.n_nodes()).map(|i| f(mesh.node_coord(i))).collect())
}

/// Ratios monitoring the discrete norm equivalence and inverse inequality:
///
/// `(h^d sum_i |w_i|^p / ||w||_{L^p}^p,  h^2 ||grad w||^2 / ||w||^2)`.
///
/// `p = 2` is integrated exactly through the mass matrix. Other exponents
/// use a composite centroid rule on 2D meshes and are not supported in 3D.
pub fn diagnostics_norm_equivalence(
    field: &NodalField,
    p: f64,
    ops: &P1Operators,
    mesh: &Mesh,
) -> Result<(f64, f64)> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!(
            "norm exponent must be >= 1, got {p}"
        )));
    }
    if field.len() != ops.n_nodes() || mesh.n_nodes() != ops.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: ops.n_nodes(),
            actual: field.len(),
        });
    }
    let w = field.values();
    if w.iter().all(|wi| vec3::norm_sq(*wi) == 0.0) {
        return Err(Error::invalid("norm equivalence needs a nonzero field"));
    }

    let l2_sq = ops.mass.bilinear3(w, w)?;
    let lp_p = if p == 2.0 {
        l2_sq
    } else if mesh.dim() == 2 {
        lp_norm_2d(field, p, mesh)
    } else {
        return Err(Error::invalid(
            "L^p quadrature for p != 2 is only available in 2D",
        ));
    };

    let hd = ops.h.powi(ops.dim as i32);
    let nodal: f64 = w.iter().map(|wi| vec3::norm(*wi).powf(p)).sum();
    let grad_sq = ops.stiffness.bilinear3(w, w)?;
    Ok((hd * nodal / lp_p, ops.h * ops.h * grad_sq / l2_sq))
}

fn lp_norm_2d(field: &NodalField, p: f64, mesh: &Mesh) -> f64 {
    const LEVELS: usize = 8;
    let s = LEVELS as f64;
    let mut total = 0.0;
    for c in 0..mesh.n_cells() {
        let vol = mesh.signed_volume(c);
        let nodes = mesh.cell_nodes(c);
        let eval = |l1: f64, l2: f64| {
            let l0 = 1.0 - l1 - l2;
            let mut v = vec3::scale(l0, field[nodes[0]]);
            v = vec3::axpy(v, l1, field[nodes[1]]);
            v = vec3::axpy(v, l2, field[nodes[2]]);
            vec3::norm(v).powf(p)
        };
        let mut sum = 0.0;
        for i in 0..LEVELS {
            for j in 0..LEVELS - i {
                sum += eval((i as f64 + 1.0 / 3.0) / s, (j as f64 + 1.0 / 3.0) / s);
                if i + j + 2 <= LEVELS {
                    sum += eval((i as f64 + 2.0 / 3.0) / s, (j as f64 + 2.0 / 3.0) / s);
                }
            }
        }
        total += sum * vol / (s * s);
    }
    total
}
