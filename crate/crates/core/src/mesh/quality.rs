use std::f64::consts::PI;

use super::Mesh;
use crate::assembly::P1Operators;
use crate::error::{Error, Result};
use crate::vec3;

/// Positive off-diagonal stiffness entries above this value count as
/// violations of the nonobtuse condition.
pub const SIGN_TOLERANCE: f64 = 1e-12;

/// Observed constants of the admissibility conditions on a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshQualityReport {
    /// `min_i b_i / h^d`
    pub c1_obs: f64,
    /// `max_i b_i / h^d`
    pub c2_obs: f64,
    /// `max_ij |M_ij| / h^d`
    pub c3_obs: f64,
    /// `h * max |d phi_i / d x_l|`
    pub c4_obs: f64,
    /// Number of node pairs `i < j` with a positive off-diagonal stiffness entry.
    pub stiffness_offdiag_violations: usize,
    /// Largest interior angle (2D) or dihedral angle (3D), in radians.
    pub max_angle: f64,
}

impl MeshQualityReport {
    pub fn is_nonobtuse(&self) -> bool {
        self.stiffness_offdiag_violations == 0
    }
}

pub fn check_mesh(mesh: &Mesh, ops: &P1Operators) -> Result<MeshQualityReport> {
    if ops.n_nodes() != mesh.n_nodes() || ops.dim != mesh.dim() {
        return Err(Error::invalid(format!(
            "operators ({} nodes, dim {}) were not assembled from this mesh ({} nodes, dim {})",
            ops.n_nodes(),
            ops.dim,
            mesh.n_nodes(),
            mesh.dim()
        )));
    }
    let h = mesh.h();
    let hd = h.powi(mesh.dim() as i32);

    let c1_obs = ops.lumped.iter().copied().fold(f64::INFINITY, f64::min) / hd;
    let c2_obs = ops.lumped.iter().copied().fold(0.0, f64::max) / hd;
    let mut max_mass: f64 = 0.0;
    let mut violations = 0;
    for i in 0..ops.n_nodes() {
        for (_, v) in ops.mass.row(i) {
            max_mass = max_mass.max(v.abs());
        }
        violations += ops
            .stiffness
            .row(i)
            .filter(|&(j, v)| j > i && v > SIGN_TOLERANCE)
            .count();
    }

    let mut max_grad: f64 = 0.0;
    let mut max_angle: f64 = 0.0;
    for c in 0..mesh.n_cells() {
        let geo = mesh.cell_geometry(c);
        for g in &geo.gradients[..=mesh.dim()] {
            max_grad = g.iter().fold(max_grad, |acc, x| acc.max(x.abs()));
        }
        max_angle = max_angle.max(match mesh.dim() {
            2 => max_triangle_angle(mesh, c),
            _ => max_dihedral_angle(&geo.gradients),
        });
    }

    Ok(MeshQualityReport {
        c1_obs,
        c2_obs,
        c3_obs: max_mass / hd,
        c4_obs: h * max_grad,
        stiffness_offdiag_violations: violations,
        max_angle,
    })
}

fn max_triangle_angle(mesh: &Mesh, c: usize) -> f64 {
    let verts = mesh.cell(c);
    let p = |k: usize| {
        let x = mesh.vertex(verts[k % 3]);
        [x[0], x[1], 0.0]
    };
    (0..3)
        .map(|k| {
            let u = vec3::sub(p(k + 1), p(k));
            let w = vec3::sub(p(k + 2), p(k));
            let cos = vec3::dot(u, w) / (vec3::norm(u) * vec3::norm(w));
            cos.clamp(-1.0, 1.0).acos()
        })
        .fold(0.0, f64::max)
}

/// The dihedral angle along the edge opposite vertices `c, d` of a
/// tetrahedron is `pi` minus the angle between their barycentric gradients.
fn max_dihedral_angle(gradients: &[[f64; 3]; 4]) -> f64 {
    let mut max: f64 = 0.0;
    for a in 0..4 {
        for b in a + 1..4 {
            let (ga, gb) = (gradients[a], gradients[b]);
            let cos = vec3::dot(ga, gb) / (vec3::norm(ga) * vec3::norm(gb));
            max = max.max(PI - cos.clamp(-1.0, 1.0).acos());
        }
    }
    max
}
