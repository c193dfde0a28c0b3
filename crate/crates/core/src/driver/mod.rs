//! Orchestration behind the `llg` command line: single runs, convergence
//! sweeps and mesh checks.

mod config;
mod table;

pub use config::{KRule, MeshSource, RunConfig};
pub use table::{format_float, read_csv, to_csv_string, write_csv, ConvergenceRow, CSV_HEADER};

use std::path::Path;
use std::time::Instant;

use crate::analytic::{self, error_norms};
use crate::assembly::{assemble, interpolate, P1Operators};
use crate::error::{Error, Result};
use crate::mesh::{self, check_mesh, generate_structured, Mesh, MeshQualityReport};
use crate::model::{Magnetization, ModelParams};
use crate::stepper::{self, RunOutcome};

/// A mesh with its operators and the length scale used by the time-step rule.
pub struct Discretization {
    pub mesh: Mesh,
    pub ops: P1Operators,
    /// `1/n` for structured meshes, the maximum element diameter otherwise.
    pub h_rule: f64,
}

impl Discretization {
    pub fn new(source: &MeshSource) -> Result<Self> {
        let (mesh, h_rule) = match source {
            MeshSource::Structured { n, diagonal } => {
                (generate_structured(*n, *diagonal)?, 1.0 / *n as f64)
            }
            MeshSource::File(path) => {
                let mesh = mesh::load_mesh(path)?;
                let h = mesh.h();
                (mesh, h)
            }
        };
        let ops = assemble(&mesh)?;
        Ok(Discretization { mesh, ops, h_rule })
    }
}

/// Runs the configured algorithm from the interpolated exact initial state
/// and measures the error at the final time.
pub fn run_level(disc: &Discretization, cfg: &RunConfig) -> Result<(ConvergenceRow, RunOutcome)> {
    if !cfg.exact.is_periodic() && !disc.mesh.periodic_pairs().is_empty() {
        return Err(Error::invalid(
            "the exact solution is not periodic for this wavenumber",
        ));
    }
    let started = Instant::now();
    let params = ModelParams {
        dt: cfg.k_rule.step(disc.h_rule),
        ..cfg.model.clone()
    };
    let m0 = interpolate(&disc.mesh, |x| {
        analytic::exact(x, 0.0, &cfg.exact).expect("exact parameters were validated")
    });
    let m0 = Magnetization::normalized(m0)?;
    let outcome = stepper::run(
        &m0,
        &disc.ops,
        &params,
        &cfg.solver,
        cfg.algorithm,
        |_, _, _| Ok(()),
    )?;
    let errors = error_norms(
        &outcome.magnetization,
        outcome.final_time,
        &disc.mesh,
        &disc.ops,
        &cfg.exact,
    )?;
    let row = ConvergenceRow {
        inv_h: 1.0 / disc.h_rule,
        k: params.dt,
        steps: outcome.steps,
        linf: errors.linf_nodal,
        l2_quadrature: errors.l2_quadrature,
        l2_nodal_weighted: errors.l2_nodal_weighted,
        l2_nodal_unweighted: errors.l2_nodal_unweighted,
        rate_linf: None,
        rate_l2: None,
        energy_initial: outcome.energy.initial_energy,
        energy_final: outcome.energy.final_energy,
        wall_seconds: cfg.wall_time.then(|| started.elapsed().as_secs_f64()),
    };
    Ok((row, outcome))
}

/// Fills each row's rates towards the next row. Levels need not differ by
/// exactly a factor two; the rate is normalized by `log2` of the ratio of
/// `inv_h`.
pub fn fill_rates(rows: &mut [ConvergenceRow]) -> Result<()> {
    for i in 0..rows.len().saturating_sub(1) {
        let refinement = (rows[i + 1].inv_h / rows[i].inv_h).log2();
        if !(refinement > 0.0) {
            return Err(Error::invalid("convergence levels must refine the mesh"));
        }
        let (c, f) = (&rows[i], &rows[i + 1]);
        let rate_linf = analytic::rate(c.linf, f.linf)? / refinement;
        let rate_l2 = analytic::rate(c.l2_quadrature, f.l2_quadrature)? / refinement;
        rows[i].rate_linf = Some(rate_linf);
        rows[i].rate_l2 = Some(rate_l2);
    }
    Ok(())
}

fn write_output(rows: &[ConvergenceRow], path: Option<&Path>) -> Result<()> {
    if let Some(path) = path {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_csv(rows, std::io::BufWriter::new(file))?;
    }
    Ok(())
}

/// `llg run`: one row for the configured mesh.
pub fn cmd_run(cfg: &RunConfig) -> Result<ConvergenceRow> {
    let disc = Discretization::new(&cfg.mesh)?;
    let (row, _) = run_level(&disc, cfg)?;
    write_output(std::slice::from_ref(&row), cfg.output.as_deref())?;
    Ok(row)
}

/// The mesh sources of a sweep, coarsest first.
pub fn sweep_sources(cfg: &RunConfig) -> Vec<MeshSource> {
    if !cfg.mesh_files.is_empty() {
        return cfg
            .mesh_files
            .iter()
            .cloned()
            .map(MeshSource::File)
            .collect();
    }
    let diagonal = match cfg.mesh {
        MeshSource::Structured { diagonal, .. } => diagonal,
        MeshSource::File(_) => mesh::Diagonal::NE,
    };
    cfg.levels
        .iter()
        .map(|&n| MeshSource::Structured { n, diagonal })
        .collect()
}

/// `llg convergence`: one row per level, with rates between neighbours.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    let sources = sweep_sources(cfg);
    if sources.len() < 2 {
        return Err(Error::invalid(
            "a convergence sweep needs at least two levels",
        ));
    }
    let mut rows = sources
        .iter()
        .map(|s| Ok(run_level(&Discretization::new(s)?, cfg)?.0))
        .collect::<Result<Vec<_>>>()?;
    fill_rates(&mut rows)?;
    write_output(&rows, cfg.output.as_deref())?;
    Ok(rows)
}

/// `llg check-mesh`: the quality report of the configured mesh.
pub fn cmd_check_mesh(cfg: &RunConfig) -> Result<MeshQualityReport> {
    let disc = Discretization::new(&cfg.mesh)?;
    check_mesh(&disc.mesh, &disc.ops)
}
