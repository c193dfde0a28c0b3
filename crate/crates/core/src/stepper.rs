//! Time stepping.
//!
//! Algorithm 1 computes a tangent velocity `v` at every node from a
//! theta-weighted, mass-lumped discretization of the equation and then
//! renormalizes `m + k v` nodewise. Algorithm 2 uses the same velocity as a
//! predictor and replaces the renormalization by a nodewise linear midpoint
//! corrector that preserves nodal lengths exactly.

use crate::assembly::{NodalField, P1Operators};
use crate::error::{Error, Result};
use crate::krylov;
use crate::model::{self, lower_order_field, Magnetization, ModelParams};
use crate::vec3::{self, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverMethod {
    /// Restarted GMRES with the given restart length.
    Gmres { restart: usize },
    /// Plain fixed-point iteration; converges only when `theta k / h^2` is small.
    FixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-10,
            max_iter: 2000,
            method: SolverMethod::Gmres { restart: 60 },
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if let SolverMethod::Gmres { restart: 0 } = self.method {
            return Err(Error::invalid("GMRES restart length must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Velocity solve followed by nodal renormalization.
    Projection,
    /// Velocity predictor followed by the 3x3 midpoint corrector.
    Midpoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub energy_before: f64,
    pub energy_after: f64,
    /// `max_i | |m_i| - 1 |` after the step.
    pub max_norm_drift: f64,
    /// `max_i |m_i . v_i|` of the velocity.
    pub tangency_residual: f64,
    pub solver_iters: usize,
    /// Relative residual of the velocity relation (0 for explicit steps).
    pub solver_residual: f64,
    /// `||(m^{j+1} - m^j) / k||` in the lumped-mass norm.
    pub dt_m_l2: f64,
    /// `sum_i b_i |v_i|^2`
    pub velocity_norm_sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocitySolve {
    pub velocity: NodalField,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// `eta e + alpha eta m x e - l - alpha m x l`: the vector `F` with
/// `m x F` equal to the right side of the velocity relation at one node.
#[inline]
fn torque_field(m: Vec3, exch: Vec3, low: Vec3, eta: f64, alpha: f64) -> Vec3 {
    let mut f = vec3::scale(eta, exch);
    f = vec3::axpy(f, alpha * eta, vec3::cross(m, exch));
    f = vec3::sub(f, low);
    vec3::axpy(f, -alpha, vec3::cross(m, low))
}

/// Nodewise `eta m x e + alpha eta m x (m x e) - m x l - alpha m x (m x l)`
/// for an exchange part `e` (already multiplied by `A`) and a lower-order
/// part `l` (already multiplied by `M`). The result is orthogonal to `m`.
pub fn gyro_damping_bracket(
    m: &[Vec3],
    exch: &[Vec3],
    low: &[Vec3],
    params: &ModelParams,
) -> Result<NodalField> {
    for len in [exch.len(), low.len()] {
        if len != m.len() {
            return Err(Error::DimensionMismatch {
                expected: m.len(),
                actual: len,
            });
        }
    }
    Ok(NodalField::new(
        m.iter()
            .zip(exch.iter().zip(low))
            .map(|(&mi, (&e, &l))| {
                vec3::cross(mi, torque_field(mi, e, l, params.eta, params.alpha))
            })
            .collect(),
    ))
}

/// `(A w, M hbar(w))`, skipping the mass product when the lower-order field
/// vanishes.
fn field_terms(
    w: &[Vec3],
    ops: &P1Operators,
    params: &ModelParams,
    include_constant: bool,
) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let n = ops.n_nodes();
    let mut exch = vec![vec3::ZERO; n];
    ops.stiffness.apply3(w, &mut exch)?;
    let mut low = vec![vec3::ZERO; n];
    let has_constant = include_constant && params.external_field != vec3::ZERO;
    if params.anisotropy != 0.0 || has_constant {
        let hbar = lower_order_field(&NodalField::new(w.to_vec()), params, include_constant);
        ops.mass.apply3(hbar.values(), &mut low)?;
    }
    Ok((exch, low))
}

/// Right side of the velocity relation with the unknown velocity set to
/// zero, divided by `b`: the explicit velocity plus the constant part of the
/// implicit lower-order term.
fn explicit_velocity(m: &[Vec3], ops: &P1Operators, params: &ModelParams) -> Result<Vec<Vec3>> {
    let (exch, mut low) = field_terms(m, ops, params, true)?;
    let he = params.external_field;
    if params.theta > 0.0 && he != vec3::ZERO {
        let s = params.theta * params.dt;
        for (l, b) in low.iter_mut().zip(&ops.lumped) {
            *l = vec3::axpy(*l, s * b, he);
        }
    }
    let mut v = gyro_damping_bracket(m, &exch, &low, params)?.into_values();
    for (vi, b) in v.iter_mut().zip(&ops.lumped) {
        *vi = vec3::scale(1.0 / b, *vi);
    }
    Ok(v)
}

/// `w -> w - theta k bracket(A w, M hbar_lin(w)) / b`, the linear operator
/// of the implicit velocity relation.
fn implicit_operator(
    m: &[Vec3],
    w: &[Vec3],
    ops: &P1Operators,
    params: &ModelParams,
) -> Result<Vec<Vec3>> {
    let (exch, low) = field_terms(w, ops, params, false)?;
    let bracket = gyro_damping_bracket(m, &exch, &low, params)?;
    let s = params.theta * params.dt;
    Ok(w.iter()
        .zip(bracket.iter())
        .zip(&ops.lumped)
        .map(|((wi, bi), b)| vec3::axpy(*wi, -s / b, *bi))
        .collect())
}

/// Relative residual of `v` in the velocity relation
///
/// `b_i v_i = eta m_i x (A(m + theta k v))_i + alpha eta m_i x (m_i x (A(m + theta k v))_i)
///          - m_i x (M hbar(m) + theta k M hbar(v))_i - alpha m_i x (m_i x (...)_i)`,
///
/// measured as `||r / b||_b / ||f / b||_b` where `f` is the right side at `v = 0`.
pub fn velocity_residual(
    m: &Magnetization,
    v: &NodalField,
    ops: &P1Operators,
    params: &ModelParams,
) -> Result<f64> {
    let mv = m.values();
    let s = params.theta * params.dt;
    let shifted: Vec<Vec3> = mv
        .iter()
        .zip(v.iter())
        .map(|(a, b)| vec3::axpy(*a, s, *b))
        .collect();
    let (exch, _) = field_terms(&shifted, ops, params, false)?;
    let (_, low_m) = field_terms(mv, ops, params, true)?;
    let (_, low_v) = field_terms(v.values(), ops, params, true)?;
    let low: Vec<Vec3> = low_m
        .iter()
        .zip(&low_v)
        .map(|(a, b)| vec3::axpy(*a, s, *b))
        .collect();
    let rhs = gyro_damping_bracket(mv, &exch, &low, params)?;

    let reference = explicit_velocity(mv, ops, params)?;
    let residual: Vec<Vec3> = v
        .iter()
        .zip(rhs.iter())
        .zip(&ops.lumped)
        .map(|((vi, ri), b)| vec3::axpy(*vi, -1.0 / b, *ri))
        .collect();
    let r = ops.lumped_norm_sq(&residual).sqrt();
    let f = ops.lumped_norm_sq(&reference).sqrt();
    Ok(if f > 0.0 { r / f } else { r })
}

/// Computes the tangent velocity of the theta scheme.
///
/// For `theta = 0` this is a closed-form nodal evaluation. Otherwise the
/// linear relation is solved iteratively from the explicit velocity.
pub fn solve_velocity(
    m: &Magnetization,
    ops: &P1Operators,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<VelocitySolve> {
    let mv = m.values();
    if mv.len() != ops.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: ops.n_nodes(),
            actual: mv.len(),
        });
    }
    let explicit = explicit_velocity(mv, ops, params)?;
    if params.theta == 0.0 {
        return Ok(VelocitySolve {
            velocity: NodalField::new(explicit),
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    cfg.validate()?;

    let (mut v, iterations, mut residual, converged) = match cfg.method {
        SolverMethod::Gmres { restart } => {
            let weights: Vec<f64> = ops.lumped.iter().flat_map(|&b| [b; 3]).collect();
            let rhs = explicit.as_flattened().to_vec();
            let mut x = rhs.clone();
            let mut failure = None;
            let outcome = krylov::gmres(
                |w, out| match implicit_operator(mv, as_vec3(w), ops, params) {
                    Ok(y) => out.copy_from_slice(y.as_flattened()),
                    Err(e) => {
                        failure.get_or_insert(e);
                        out.fill(0.0);
                    }
                },
                &rhs,
                &mut x,
                &weights,
                cfg.rel_tol,
                restart,
                cfg.max_iter,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let v = as_vec3(&x).to_vec();
            (
                v,
                outcome.iterations,
                outcome.relative_residual,
                outcome.converged,
            )
        }
        SolverMethod::FixedPoint => fixed_point(mv, &explicit, ops, params, cfg)?,
    };

    // remove the normal component left by the inexact solve; the residual
    // can only shrink because every other term is tangent
    for (vi, mi) in v.iter_mut().zip(mv) {
        *vi = vec3::axpy(*vi, -vec3::dot(*vi, *mi), *mi);
    }
    let velocity = NodalField::new(v);
    if converged {
        residual = velocity_residual(m, &velocity, ops, params)?;
    }
    if !converged || residual > cfg.rel_tol {
        return Err(Error::SolverNonConvergence {
            iterations,
            residual,
        });
    }
    Ok(VelocitySolve {
        velocity,
        iterations,
        relative_residual: residual,
    })
}

fn as_vec3(flat: &[f64]) -> &[Vec3] {
    let (chunks, rest) = flat.as_chunks::<3>();
    debug_assert!(rest.is_empty());
    chunks
}

fn fixed_point(
    m: &[Vec3],
    explicit: &[Vec3],
    ops: &P1Operators,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(Vec<Vec3>, usize, f64, bool)> {
    let reference = ops.lumped_norm_sq(explicit).sqrt();
    if reference == 0.0 {
        return Ok((explicit.to_vec(), 0, 0.0, true));
    }
    let mut v = explicit.to_vec();
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        // v <- explicit + (v - T v)
        let tv = implicit_operator(m, &v, ops, params)?;
        let diff: Vec<Vec3> = explicit
            .iter()
            .zip(&tv)
            .map(|(e, t)| vec3::sub(*e, *t))
            .collect();
        residual = ops.lumped_norm_sq(&diff).sqrt() / reference;
        if residual <= cfg.rel_tol {
            return Ok((v, iter - 1, residual, true));
        }
        for (vi, d) in v.iter_mut().zip(&diff) {
            *vi = vec3::add(*vi, *d);
        }
    }
    Ok((v, cfg.max_iter, residual, false))
}

/// `m_i <- (m_i + k v_i) / |m_i + k v_i|`
pub fn project_renormalize(m: &Magnetization, v: &NodalField, k: f64) -> Result<Magnetization> {
    if v.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            actual: v.len(),
        });
    }
    let values = m
        .values()
        .iter()
        .zip(v.iter())
        .enumerate()
        .map(|(i, (mi, vi))| {
            let w = vec3::axpy(*mi, k, *vi);
            let n = vec3::norm(w);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::StepFailure(format!(
                    "cannot renormalize node {i}: |m + k v| = {n}"
                )));
            }
            Ok(vec3::scale(1.0 / n, w))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Magnetization::from_field_unchecked(NodalField::new(values)))
}

/// Solves `(I + c [F]_x) x = r` in closed form; the determinant is
/// `1 + c^2 |F|^2`.
#[inline]
fn solve_cayley(f: Vec3, c: f64, r: Vec3) -> Vec3 {
    let fxr = vec3::cross(f, r);
    let mut x = vec3::axpy(r, -c, fxr);
    x = vec3::axpy(x, c * c * vec3::dot(f, r), f);
    vec3::scale(1.0 / (1.0 + c * c * vec3::norm_sq(f)), x)
}

/// Midpoint corrector: with `m_half = (m + m_star) / 2` and the frozen
/// nodal vector `F_i` built from `A m_half` and `M hbar(m_half)`, solves
/// `(m_new - m) / k = ((m_new + m) / 2) x F` node by node.
pub fn corrector_3x3(
    m: &Magnetization,
    m_star: &NodalField,
    ops: &P1Operators,
    params: &ModelParams,
) -> Result<Magnetization> {
    let n = ops.n_nodes();
    for len in [m.len(), m_star.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let half: Vec<Vec3> = m
        .values()
        .iter()
        .zip(m_star.iter())
        .map(|(a, b)| vec3::scale(0.5, vec3::add(*a, *b)))
        .collect();
    let (exch, low) = field_terms(&half, ops, params, true)?;
    let c = 0.5 * params.dt;
    let values = (0..n)
        .map(|i| {
            let f = torque_field(half[i], exch[i], low[i], params.eta, params.alpha);
            let f = vec3::scale(1.0 / ops.lumped[i], f);
            let mi = m.values()[i];
            solve_cayley(f, c, vec3::axpy(mi, c, vec3::cross(mi, f)))
        })
        .collect();
    Ok(Magnetization::from_field_unchecked(NodalField::new(values)))
}

fn finish_diagnostics(
    m: &Magnetization,
    next: &Magnetization,
    solve: &VelocitySolve,
    ops: &P1Operators,
    params: &ModelParams,
    energy_before: f64,
) -> Result<StepDiagnostics> {
    let k = params.dt;
    let increments: Vec<Vec3> = next
        .values()
        .iter()
        .zip(m.values())
        .map(|(a, b)| vec3::scale(1.0 / k, vec3::sub(*a, *b)))
        .collect();
    let tangency_residual = m
        .values()
        .iter()
        .zip(solve.velocity.iter())
        .map(|(mi, vi)| vec3::dot(*mi, *vi).abs())
        .fold(0.0, f64::max);
    Ok(StepDiagnostics {
        energy_before,
        energy_after: model::energy(next, ops, params)?,
        max_norm_drift: model::max_norm_drift(next.values()),
        tangency_residual,
        solver_iters: solve.iterations,
        solver_residual: solve.relative_residual,
        dt_m_l2: ops.lumped_norm_sq(&increments).sqrt(),
        velocity_norm_sq: ops.lumped_norm_sq(solve.velocity.values()),
    })
}

fn advance(
    algorithm: Algorithm,
    m: &Magnetization,
    ops: &P1Operators,
    params: &ModelParams,
    cfg: &SolverConfig,
    energy_before: f64,
) -> Result<(Magnetization, StepDiagnostics)> {
    let solve = solve_velocity(m, ops, params, cfg)?;
    let next = match algorithm {
        Algorithm::Projection => project_renormalize(m, &solve.velocity, params.dt)?,
        Algorithm::Midpoint => {
            let star = NodalField::new(
                m.values()
                    .iter()
                    .zip(solve.velocity.iter())
                    .map(|(mi, vi)| vec3::axpy(*mi, params.dt, *vi))
                    .collect(),
            );
            corrector_3x3(m, &star, ops, params)?
        }
    };
    let diag = finish_diagnostics(m, &next, &solve, ops, params, energy_before)?;
    Ok((next, diag))
}

/// One step of Algorithm 1: velocity solve and renormalization.
pub fn step_algorithm1(
    m: &Magnetization,
    ops: &P1Operators,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(Magnetization, StepDiagnostics)> {
    let e = model::energy(m, ops, params)?;
    advance(Algorithm::Projection, m, ops, params, cfg, e)
}

/// One step of Algorithm 2: velocity predictor and midpoint corrector.
pub fn step_algorithm2(
    m: &Magnetization,
    ops: &P1Operators,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(Magnetization, StepDiagnostics)> {
    let e = model::energy(m, ops, params)?;
    advance(Algorithm::Midpoint, m, ops, params, cfg, e)
}

/// Discrete energy inequality `E(m^J) + C sum_j k |v^j|^2 <= E(m^0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMonitor {
    pub initial_energy: f64,
    pub final_energy: f64,
    /// `sum_j k sum_i b_i |v_i^j|^2`
    pub dissipation: f64,
    /// Largest `C` for which the inequality holds, when any dissipation occurred.
    pub observed_constant: Option<f64>,
    /// `alpha / (1 + alpha^2)`
    pub reference_constant: f64,
}

impl EnergyMonitor {
    pub fn holds_with(&self, c: f64) -> bool {
        self.final_energy + c * self.dissipation <= self.initial_energy + 1e-12
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub magnetization: Magnetization,
    pub diagnostics: Vec<StepDiagnostics>,
    pub energy: EnergyMonitor,
    pub steps: usize,
    pub final_time: f64,
}

/// Advances `m0` by `floor(t_final / dt)` steps.
///
/// `observer` is called after every step with the step index (starting at
/// 1), the new state and its diagnostics; an error from it aborts the run.
pub fn run<O>(
    m0: &Magnetization,
    ops: &P1Operators,
    params: &ModelParams,
    cfg: &SolverConfig,
    algorithm: Algorithm,
    mut observer: O,
) -> Result<RunOutcome>
where
    O: FnMut(usize, &Magnetization, &StepDiagnostics) -> Result<()>,
{
    params.validate()?;
    cfg.validate()?;
    if m0.len() != ops.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: ops.n_nodes(),
            actual: m0.len(),
        });
    }
    let steps = params.n_steps();
    let initial_energy = model::energy(m0, ops, params)?;
    let mut energy = initial_energy;
    let mut dissipation = 0.0;
    let mut m = m0.clone();
    let mut diagnostics = Vec::with_capacity(steps);
    for j in 1..=steps {
        let (next, diag) = advance(algorithm, &m, ops, params, cfg, energy)?;
        observer(j, &next, &diag)?;
        energy = diag.energy_after;
        dissipation += params.dt * diag.velocity_norm_sq;
        diagnostics.push(diag);
        m = next;
    }
    let observed_constant = (dissipation > 0.0).then(|| (initial_energy - energy) / dissipation);
    Ok(RunOutcome {
        magnetization: m,
        diagnostics,
        energy: EnergyMonitor {
            initial_energy,
            final_energy: energy,
            dissipation,
            observed_constant,
            reference_constant: params.alpha / (1.0 + params.alpha * params.alpha),
        },
        steps,
        final_time: steps as f64 * params.dt,
    })
}
