//! Exact precessing solution of the exchange-only equation on the periodic
//! unit square, and the error norms used in convergence studies.

use std::f64::consts::PI;

use crate::assembly::P1Operators;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::Magnetization;
use crate::vec3::{self, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct ExactParams {
    /// Tilt of the magnetization away from `e_3`.
    pub beta: f64,
    /// Spatial wavenumber along `x_1 + x_2`.
    pub wavenumber: f64,
    pub alpha: f64,
}

impl ExactParams {
    /// Tilt `pi / 24` and wavenumber `2 pi`.
    pub fn reference(alpha: f64) -> Self {
        ExactParams {
            beta: PI / 24.0,
            wavenumber: 2.0 * PI,
            alpha,
        }
    }

    /// Whether the solution is 1-periodic in both coordinates.
    pub fn is_periodic(&self) -> bool {
        let cycles = self.wavenumber / (2.0 * PI);
        (cycles - cycles.round()).abs() < 1e-12
    }
}

/// Exact solution at point `x` (only `x[0] + x[1]` matters) and time `t`.
///
/// With `s = x_1 + x_2`, `E(t) = exp(2 kappa^2 alpha t)`,
/// `d = sqrt(sin^2 beta + E^2 cos^2 beta)` and
/// `g = log((d + E cos beta) / (1 + cos beta)) / alpha`:
///
/// `m = (sin beta cos(kappa s + g), sin beta sin(kappa s + g), E cos beta) / d`.
pub fn exact(x: &[f64], t: f64, p: &ExactParams) -> Result<Vec3> {
    if p.alpha == 0.0 {
        return Err(Error::invalid(
            "the exact solution requires a nonzero damping",
        ));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let (sb, cb) = p.beta.sin_cos();
    let growth = (2.0 * p.wavenumber * p.wavenumber * p.alpha * t).exp();
    let d = (sb * sb + growth * growth * cb * cb).sqrt();
    let g = ((d + growth * cb) / (1.0 + cb)).ln() / p.alpha;
    let phase = p.wavenumber * (x[0] + x[1]) + g;
    let (sp, cp) = phase.sin_cos();
    Ok([sb * cp / d, sb * sp / d, growth * cb / d])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// `max_i |e_i|`
    pub linf_nodal: f64,
    /// `||e^h||_{L^2}` of the P1 error function, integrated exactly.
    pub l2_quadrature: f64,
    /// `(sum_i b_i |e_i|^2)^{1/2}`
    pub l2_nodal_weighted: f64,
    /// `(sum_i |e_i|^2)^{1/2}`
    pub l2_nodal_unweighted: f64,
}

/// Error of `m_h` against the exact solution at the nodes at time `t`.
pub fn error_norms(
    m_h: &Magnetization,
    t: f64,
    mesh: &Mesh,
    ops: &P1Operators,
    p: &ExactParams,
) -> Result<ErrorReport> {
    let n = ops.n_nodes();
    if m_h.len() != n || mesh.n_nodes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m_h.len(),
        });
    }
    let errors = (0..n)
        .map(|i| Ok(vec3::sub(exact(mesh.node_coord(i), t, p)?, m_h.values()[i])))
        .collect::<Result<Vec<Vec3>>>()?;

    let linf_nodal = errors.iter().map(|e| vec3::norm(*e)).fold(0.0, f64::max);
    let l2_quadrature = ops.mass.bilinear3(&errors, &errors)?.max(0.0).sqrt();
    let l2_nodal_weighted = ops.lumped_norm_sq(&errors).sqrt();
    let l2_nodal_unweighted = errors.iter().map(|e| vec3::norm_sq(*e)).sum::<f64>().sqrt();
    Ok(ErrorReport {
        linf_nodal,
        l2_quadrature,
        l2_nodal_weighted,
        l2_nodal_unweighted,
    })
}

/// Observed order between two levels whose mesh size differs by a factor 2.
pub fn rate(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::invalid(format!(
            "rates need positive errors, got {e_coarse} and {e_fine}"
        )));
    }
    Ok((e_coarse / e_fine).log2())
}
