//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Booleans are `true`/`false`,
//! vectors are comma-separated triples and lists are comma separated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analytic::ExactParams;
use crate::error::{Error, Result};
use crate::mesh::Diagonal;
use crate::model::ModelParams;
use crate::stepper::{Algorithm, SolverConfig, SolverMethod};
use crate::vec3::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Structured { n: usize, diagonal: Diagonal },
    File(PathBuf),
}

/// Time step rule `k = coefficient * h^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KRule {
    pub coefficient: f64,
    pub exponent: f64,
}

impl KRule {
    pub fn step(&self, h: f64) -> f64 {
        self.coefficient * h.powf(self.exponent)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Mesh for single runs and mesh checks.
    pub mesh: MeshSource,
    /// Structured sweep levels; each uses the configured diagonal.
    pub levels: Vec<usize>,
    /// Loaded-mesh sweep, coarsest first. Takes precedence over `levels`.
    pub mesh_files: Vec<PathBuf>,
    /// Model parameters; `dt` is overwritten from `k_rule` for every mesh.
    pub model: ModelParams,
    pub exact: ExactParams,
    pub algorithm: Algorithm,
    pub k_rule: KRule,
    pub output: Option<PathBuf>,
    pub solver: SolverConfig,
    /// Record wall-clock time in the output; off by default so that output
    /// files are reproducible byte for byte.
    pub wall_time: bool,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    /// Parses a configuration; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut entries = Entries::parse(text)?;
        let resolve = |p: &str| -> PathBuf {
            let p = PathBuf::from(p);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };

        // grid keys are accepted, and ignored, for loaded meshes too
        let diagonal = entries.take_or("diagonal", Diagonal::NE)?;
        let n = entries.take_or("n", 32usize)?;
        let mesh = match entries.take_str("mesh").as_deref().unwrap_or("structured") {
            "structured" => MeshSource::Structured { n, diagonal },
            "file" => {
                let (line, p) = entries
                    .take_raw("mesh_file")
                    .ok_or_else(|| missing("mesh_file (required by mesh = file)"))?;
                if p.is_empty() {
                    return Err(Error::Config {
                        line,
                        message: "mesh_file is empty".into(),
                    });
                }
                MeshSource::File(resolve(&p))
            }
            other => {
                return Err(Error::Config {
                    line: 0,
                    message: format!("mesh must be 'structured' or 'file', got '{other}'"),
                })
            }
        };
        let levels: Vec<usize> = entries.take_list("levels")?.unwrap_or_default();
        let mesh_files = entries
            .take_raw("mesh_files")
            .map(|(_, v)| v.split(',').map(|s| resolve(s.trim())).collect())
            .unwrap_or_default();

        let alpha: f64 = entries.take("alpha")?.ok_or_else(|| missing("alpha"))?;
        let defaults = ModelParams::default();
        let model = ModelParams {
            eta: entries.take_or("eta", defaults.eta)?,
            alpha,
            anisotropy: entries.take_or("anisotropy", defaults.anisotropy)?,
            external_field: entries
                .take_vec3("external_field")?
                .unwrap_or(defaults.external_field),
            theta: entries.take_or("theta", defaults.theta)?,
            dt: defaults.dt,
            t_final: entries.take_or("t_final", defaults.t_final)?,
        };
        let reference = ExactParams::reference(alpha);
        let exact = ExactParams {
            beta: entries.take_or("beta", reference.beta)?,
            wavenumber: entries.take_or("wavenumber", reference.wavenumber)?,
            alpha,
        };

        let algorithm = match entries.take_str("algorithm").as_deref().unwrap_or("1") {
            "1" | "alg1" | "projection" => Algorithm::Projection,
            "2" | "alg2" | "midpoint" => Algorithm::Midpoint,
            other => {
                return Err(Error::Config {
                    line: 0,
                    message: format!("unknown algorithm '{other}'"),
                })
            }
        };
        let k_rule = KRule {
            coefficient: entries
                .take("k_coefficient")?
                .ok_or_else(|| missing("k_coefficient"))?,
            exponent: entries.take_or("k_exponent", 2.0)?,
        };
        let output = entries.take_str("output").map(|p| resolve(&p));

        let solver_defaults = SolverConfig::default();
        let restart = match solver_defaults.method {
            SolverMethod::Gmres { restart } => restart,
            SolverMethod::FixedPoint => 60,
        };
        let method = match entries.take_str("solver").as_deref().unwrap_or("gmres") {
            "gmres" => SolverMethod::Gmres {
                restart: entries.take_or("restart", restart)?,
            },
            "fixed-point" | "fixed_point" => SolverMethod::FixedPoint,
            other => {
                return Err(Error::Config {
                    line: 0,
                    message: format!("unknown solver '{other}'"),
                })
            }
        };
        let solver = SolverConfig {
            rel_tol: entries.take_or("rel_tol", solver_defaults.rel_tol)?,
            max_iter: entries.take_or("max_iter", solver_defaults.max_iter)?,
            method,
        };
        let wall_time = entries.take_or("wall_time", false)?;

        entries.finish()?;

        let config = RunConfig {
            mesh,
            levels,
            mesh_files,
            model,
            exact,
            algorithm,
            k_rule,
            output,
            solver,
            wall_time,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_rule.coefficient > 0.0) {
            return Err(Error::invalid("k_coefficient must be positive"));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("levels must be strictly increasing"));
        }
        if let MeshSource::Structured { n, .. } = self.mesh {
            if n < 2 {
                return Err(Error::invalid("n must be at least 2"));
            }
        }
        let mut probe = self.model.clone();
        probe.dt = 1.0;
        probe.validate()?;
        self.solver.validate()
    }
}

fn missing(key: &str) -> Error {
    Error::Config {
        line: 0,
        message: format!("missing required key '{key}'"),
    }
}

/// Raw entries keyed by name, with the line each came from.
struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = key.trim().to_string();
            if map
                .insert(key.clone(), (line, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Entries(map))
    }

    fn take_raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.0.remove(key)
    }

    fn take_str(&mut self, key: &str) -> Option<String> {
        self.take_raw(key).map(|(_, v)| v.to_ascii_lowercase())
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Config {
                line,
                message: format!("invalid value '{v}' for '{key}'"),
            }),
        }
    }

    fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| Error::Config {
                        line,
                        message: format!("invalid list entry '{}' for '{key}'", s.trim()),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn take_vec3(&mut self, key: &str) -> Result<Option<Vec3>> {
        let line = self.0.get(key).map(|(l, _)| *l).unwrap_or(0);
        match self.take_list::<f64>(key)? {
            None => Ok(None),
            Some(v) if v.len() == 3 => Ok(Some([v[0], v[1], v[2]])),
            Some(v) => Err(Error::Config {
                line,
                message: format!("'{key}' needs 3 components, got {}", v.len()),
            }),
        }
    }

    fn finish(self) -> Result<()> {
        match self.0.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::Config {
                line,
                message: format!("unknown key '{key}'"),
            }),
        }
    }
}
