//! Experiment configuration files.
//!
//! A config is a TOML file with an `[experiment]` table and exactly one model
//! table named after `experiment.model`. Unknown keys anywhere are errors.

use crate::error::{HarnessError, Result};
use aging_core::glew::{check_dt, GlQuery, GlRun, Potential};
use aging_core::lpp::LppConfig;
use aging_core::polymer::{PolymerParams, PolymerQuery};
use aging_core::tasep::TasepAgingParams;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Tasep,
    Lpp,
    Polymer,
    Glew,
    Closedform,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub id: String,
    pub model: Model,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// 0 means the environment default.
    #[serde(default)]
    pub workers: usize,
    pub output: PathBuf,
    /// Fill the `wall_s` column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

fn default_replicas() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TasepBlock {
    pub ring_size: usize,
    pub s: f64,
    pub a: Vec<f64>,
    #[serde(default)]
    pub j: i64,
    #[serde(default)]
    pub k: i64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LppBlock {
    pub n: usize,
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerBlock {
    #[serde(default = "default_polymer_n")]
    pub n: usize,
    #[serde(default = "default_polymer_dt")]
    pub dt: f64,
    pub s: f64,
    pub t: Vec<f64>,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

fn default_polymer_n() -> usize {
    32
}

fn default_polymer_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Quadratic,
    LogCosh,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlewBlock {
    #[serde(default = "default_potential")]
    pub potential: PotentialKind,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_ring")]
    pub ring_size: usize,
    #[serde(default = "default_gl_dt")]
    pub dt: f64,
    pub s: f64,
    pub a: Vec<f64>,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

fn default_potential() -> PotentialKind {
    PotentialKind::Quadratic
}

fn default_ring() -> usize {
    256
}

fn default_gl_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Function {
    RhoKpz,
    RhoEw,
    EwVariance,
    RwAbsExpectation,
}

impl Function {
    pub fn name(self) -> &'static str {
        match self {
            Function::RhoKpz => "rho_kpz",
            Function::RhoEw => "rho_ew",
            Function::EwVariance => "ew_variance",
            Function::RwAbsExpectation => "rw_abs_expectation",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [Function::RhoKpz, Function::RhoEw, Function::EwVariance, Function::RwAbsExpectation]
            .into_iter()
            .find(|f| f.name() == name)
    }

    /// Name of the grid variable.
    pub fn argument(self) -> &'static str {
        match self {
            Function::RhoKpz | Function::RhoEw => "a",
            Function::EwVariance | Function::RwAbsExpectation => "t",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedformBlock {
    pub function: Function,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub tasep: Option<TasepBlock>,
    pub lpp: Option<LppBlock>,
    pub polymer: Option<PolymerBlock>,
    pub glew: Option<GlewBlock>,
    pub closedform: Option<ClosedformBlock>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|m| HarnessError::config(path, m))?;
        if cfg.experiment.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.experiment.output = dir.join(&cfg.experiment.output);
            }
        }
        Ok(cfg)
    }

    /// Parse and validate; the error string names the offending field.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let e = &self.experiment;
        if e.id.is_empty() || e.id.contains(',') {
            return Err("experiment.id: must be nonempty and free of commas".into());
        }
        let present = [
            (Model::Tasep, self.tasep.is_some()),
            (Model::Lpp, self.lpp.is_some()),
            (Model::Polymer, self.polymer.is_some()),
            (Model::Glew, self.glew.is_some()),
            (Model::Closedform, self.closedform.is_some()),
        ];
        for (model, there) in present {
            if there != (model == e.model) {
                let name = format!("{model:?}").to_lowercase();
                return Err(if there {
                    format!("[{name}]: table given but experiment.model is {:?}", e.model)
                } else {
                    format!("[{name}]: missing table for experiment.model")
                });
            }
        }
        let field = |name: &str, r: aging_core::Result<()>| r.map_err(|err| format!("{name}: {err}"));
        let grid = |name: &str, v: &[f64]| {
            if v.is_empty() {
                Err(format!("{name}: grid must not be empty"))
            } else {
                Ok(())
            }
        };
        match e.model {
            Model::Tasep => {
                let b = self.tasep.as_ref().unwrap();
                grid("tasep.a", &b.a)?;
                for p in b.params() {
                    field("tasep", p.validate(e.replicas))?;
                }
            }
            Model::Lpp => {
                let b = self.lpp.as_ref().unwrap();
                grid("lpp.a", &b.a)?;
                if e.replicas < 100 {
                    return Err(format!("experiment.replicas: need at least 100, got {}", e.replicas));
                }
                for &a in &b.a {
                    field("lpp", LppConfig { n: b.n, a, replicas: e.replicas }.validate())?;
                }
            }
            Model::Polymer => {
                let b = self.polymer.as_ref().unwrap();
                grid("polymer.t", &b.t)?;
                let params = b.params();
                field("polymer", params.validate())?;
                for q in b.queries() {
                    field("polymer", q.lattice_points(&params).map(|_| ()))?;
                }
            }
            Model::Glew => {
                let b = self.glew.as_ref().unwrap();
                grid("glew.a", &b.a)?;
                let run = b.run().map_err(|err| format!("glew.kappa: {err}"))?;
                field("glew.dt", check_dt(&run.potential, run.dt))?;
                for q in b.queries() {
                    field("glew", q.grid_points(&run).map(|_| ()))?;
                }
                if e.replicas < 2 {
                    return Err(format!("experiment.replicas: need at least 2, got {}", e.replicas));
                }
            }
            Model::Closedform => {
                let b = self.closedform.as_ref().unwrap();
                grid("closedform.grid", &b.grid)?;
                for &x in &b.grid {
                    let ok = match b.function {
                        Function::RhoKpz | Function::RhoEw => x >= 1.0 && x.is_finite(),
                        Function::EwVariance | Function::RwAbsExpectation => x >= 0.0 && x.is_finite(),
                    };
                    if !ok {
                        return Err(format!("closedform.grid: {x} outside the domain of {}", b.function.name()));
                    }
                }
            }
        }
        Ok(())
    }
}

impl TasepBlock {
    pub fn params(&self) -> Vec<TasepAgingParams> {
        self.a
            .iter()
            .map(|&a| TasepAgingParams { ring_size: self.ring_size, s: self.s, a, j: self.j, k: self.k })
            .collect()
    }
}

impl PolymerBlock {
    pub fn params(&self) -> PolymerParams {
        let top = self.t.iter().fold(self.s, |m, &t| m.max(t));
        let levels = ((top * self.n as f64).floor() as usize).max(1);
        PolymerParams::intermediate_disorder(self.n, self.dt, levels)
    }

    pub fn queries(&self) -> Vec<PolymerQuery> {
        self.t.iter().map(|&t| PolymerQuery { s: self.s, t, x: self.x, y: self.y }).collect()
    }
}

impl GlewBlock {
    pub fn run(&self) -> aging_core::Result<GlRun> {
        let potential = match self.potential {
            PotentialKind::Quadratic => Potential::quadratic(),
            PotentialKind::LogCosh => Potential::log_cosh(self.kappa)?,
        };
        Ok(GlRun { potential, ring_size: self.ring_size, dt: self.dt })
    }

    pub fn queries(&self) -> Vec<GlQuery> {
        self.a.iter().map(|&a| GlQuery { s: self.s, a, x: self.x, y: self.y }).collect()
    }
}
