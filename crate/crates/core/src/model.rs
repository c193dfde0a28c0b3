//! Physical parameters, the lower-order field and the discrete energy.

use crate::assembly::{NodalField, P1Operators};
use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// Tolerance on `| |m_i| - 1 |` for a valid magnetization.
pub const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Exchange constant.
    pub eta: f64,
    /// Gilbert damping.
    pub alpha: f64,
    /// Anisotropy constant; the easy axis is `e_1`.
    pub anisotropy: f64,
    /// Constant external field.
    pub external_field: Vec3,
    /// Implicitness of the velocity solve, in `[0, 1]`.
    pub theta: f64,
    /// Time step.
    pub dt: f64,
    /// Final time.
    pub t_final: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            eta: 1.0,
            alpha: 1.0,
            anisotropy: 0.0,
            external_field: vec3::ZERO,
            theta: 0.0,
            dt: 1e-6,
            t_final: 1e-3,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta", self.eta),
            ("alpha", self.alpha),
            ("dt", self.dt),
            ("t_final", self.t_final),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.anisotropy >= 0.0 && self.anisotropy.is_finite()) {
            return Err(Error::invalid(format!(
                "anisotropy must be nonnegative, got {}",
                self.anisotropy
            )));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if self.external_field.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("external field must be finite"));
        }
        Ok(())
    }

    /// Number of steps `floor(t_final / dt)`.
    ///
    /// The quotient is nudged by a relative 1e-9 so that horizons which are
    /// exact multiples of the step in decimal (0.001 / 7.8125e-8) do not lose
    /// a step to rounding.
    pub fn n_steps(&self) -> usize {
        let q = self.t_final / self.dt;
        (q * (1.0 + 1e-9)).floor() as usize
    }

    /// Whether the lower-order field vanishes identically.
    pub fn exchange_only(&self) -> bool {
        self.anisotropy == 0.0 && self.external_field == vec3::ZERO
    }
}

/// Nodal magnetization with unit-length vectors at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct Magnetization(NodalField);

impl Magnetization {
    /// Wraps a field, checking the unit-norm invariant.
    pub fn new(field: NodalField) -> Result<Self> {
        let drift = max_norm_drift(field.values());
        if !(drift <= UNIT_NORM_TOL) {
            return Err(Error::invalid(format!(
                "magnetization is not unit length (max drift {drift:e})"
            )));
        }
        Ok(Magnetization(field))
    }

    /// Normalizes every nodal vector.
    pub fn normalized(field: NodalField) -> Result<Self> {
        let mut values = field.into_values();
        for (i, v) in values.iter_mut().enumerate() {
            let n = vec3::norm(*v);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::invalid(format!(
                    "cannot normalize node {i} with norm {n}"
                )));
            }
            *v = vec3::scale(1.0 / n, *v);
        }
        Ok(Magnetization(NodalField::new(values)))
    }

    pub(crate) fn from_field_unchecked(field: NodalField) -> Self {
        Magnetization(field)
    }

    pub fn field(&self) -> &NodalField {
        &self.0
    }

    pub fn values(&self) -> &[Vec3] {
        self.0.values()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_field(self) -> NodalField {
        self.0
    }
}

/// `max_i | |w_i| - 1 |`
pub fn max_norm_drift(values: &[Vec3]) -> f64 {
    values
        .iter()
        .map(|v| (vec3::norm(*v) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Lower-order field `-Q (w_2 e_2 + w_3 e_3) + h_e`, with the constant
/// external part only when `include_constant` is set.
pub fn lower_order_field(
    field: &NodalField,
    params: &ModelParams,
    include_constant: bool,
) -> NodalField {
    let q = params.anisotropy;
    let he = if include_constant {
        params.external_field
    } else {
        vec3::ZERO
    };
    NodalField::new(
        field
            .iter()
            .map(|w| [he[0], he[1] - q * w[1], he[2] - q * w[2]])
            .collect(),
    )
}

/// `(eta / 2) sum_c m_c^T A m_c`
pub fn exchange_energy(m: &[Vec3], ops: &P1Operators, eta: f64) -> Result<f64> {
    Ok(0.5 * eta * ops.stiffness.bilinear3(m, m)?)
}

/// Discrete energy: exchange through `A`, anisotropy through the consistent
/// mass matrix, and the external field through the lumped mass.
pub fn energy(m: &Magnetization, ops: &P1Operators, params: &ModelParams) -> Result<f64> {
    let values = m.values();
    if values.len() != ops.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: ops.n_nodes(),
            actual: values.len(),
        });
    }
    let mut e = exchange_energy(values, ops, params.eta)?;
    if params.anisotropy != 0.0 {
        let hard: Vec<Vec3> = values.iter().map(|v| [0.0, v[1], v[2]]).collect();
        e += 0.5 * params.anisotropy * ops.mass.bilinear3(&hard, &hard)?;
    }
    if params.external_field != vec3::ZERO {
        let he = params.external_field;
        e -= ops
            .lumped
            .iter()
            .zip(values)
            .map(|(b, v)| b * vec3::dot(he, *v))
            .sum::<f64>();
    }
    Ok(e)
}
