//! Executes a validated experiment and produces its result rows.

use crate::config::{ExperimentConfig, Function, Model};
use crate::error::Result;
use crate::results::{params, write_atomic, ResultRow};
use aging_core::closedform::{ew_correlation, ew_variance, rho_ew, rho_kpz, rw_abs_expectation, EwQuery};
use aging_core::glew::gl_two_time_corr;
use aging_core::lpp::lpp_aging_curve;
use aging_core::polymer::polymer_two_time_corr;
use aging_core::stats::TwoTimeResult;
use aging_core::tasep::two_time_height_corr;
use aging_core::{Ensemble, StreamKey};
use std::path::Path;
use std::time::Instant;

/// Evaluates a closed-form function at one grid point.
pub fn evaluate(f: Function, x: f64) -> aging_core::Result<f64> {
    match f {
        Function::RhoKpz => rho_kpz(x),
        Function::RhoEw => rho_ew(x),
        Function::EwVariance => Ok(ew_variance(x, 0.0)),
        Function::RwAbsExpectation => Ok(rw_abs_expectation(x, 0)),
    }
}

/// Rows for a closed-form table over `grid`.
pub fn table_rows(f: Function, grid: &[f64]) -> aging_core::Result<Vec<ResultRow>> {
    grid.iter()
        .map(|&x| {
            Ok(ResultRow {
                experiment: f.name().to_string(),
                params: params(&[(f.argument(), x.to_string())]),
                estimate: evaluate(f, x)?,
                stderr: None,
                reference: None,
                n: 0,
                wall_s: None,
            })
        })
        .collect()
}

struct Timer {
    on: bool,
    start: Instant,
}

impl Timer {
    fn new(on: bool) -> Self {
        Self { on, start: Instant::now() }
    }

    fn lap(&mut self) -> Option<f64> {
        let elapsed = self.start.elapsed().as_secs_f64();
        self.start = Instant::now();
        self.on.then_some(elapsed)
    }
}

fn two_time_rows(id: &str, base: Vec<(&str, String)>, r: &TwoTimeResult, reference: Option<f64>, n: u64, wall_s: Option<f64>) -> [ResultRow; 2] {
    let row = |estimator: &str, estimate: f64, stderr: f64| {
        let mut p = vec![("estimator", estimator.to_string())];
        p.extend(base.iter().cloned());
        ResultRow { experiment: id.to_string(), params: params(&p), estimate, stderr: Some(stderr), reference, n, wall_s }
    };
    [row("direct", r.direct.value, r.direct.stderr), row("cvtv", r.cvtv.value, r.cvtv.stderr)]
}

/// All result rows of an experiment, in grid order. `workers == 0` uses the
/// global pool.
pub fn execute(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let ens = Ensemble::new(workers);
    let key = StreamKey::new(e.master_seed, &e.id);
    let mut clock = Timer::new(e.timing);
    let mut rows = Vec::new();
    match e.model {
        Model::Tasep => {
            let b = cfg.tasep.as_ref().expect("validated");
            for p in b.params() {
                let r = two_time_height_corr(p, e.replicas, key, ens)?;
                let reference = (p.j == 0 && p.k == 0).then(|| rho_kpz(p.a)).transpose()?;
                let base = vec![
                    ("L", p.ring_size.to_string()),
                    ("s", p.s.to_string()),
                    ("a", p.a.to_string()),
                    ("j", p.j.to_string()),
                    ("k", p.k.to_string()),
                ];
                rows.extend(two_time_rows(&e.id, base, &r, reference, e.replicas as u64, clock.lap()));
            }
        }
        Model::Lpp => {
            let b = cfg.lpp.as_ref().expect("validated");
            let curve = lpp_aging_curve(b.n, &b.a, e.replicas, key, ens)?;
            let wall_s = clock.lap();
            for (&a, c) in b.a.iter().zip(curve) {
                rows.push(ResultRow {
                    experiment: e.id.clone(),
                    params: params(&[("n", b.n.to_string()), ("a", a.to_string())]),
                    estimate: c.value,
                    stderr: Some(c.stderr),
                    reference: Some(rho_kpz(a)?),
                    n: c.n,
                    wall_s,
                });
            }
        }
        Model::Polymer => {
            let b = cfg.polymer.as_ref().expect("validated");
            let p = b.params();
            for q in b.queries() {
                let (r, aborted) = polymer_two_time_corr(p, q, e.replicas, key, ens)?;
                let base = vec![
                    ("n", p.n.to_string()),
                    ("dt", p.dt.to_string()),
                    ("s", q.s.to_string()),
                    ("t", q.t.to_string()),
                    ("x", q.x.to_string()),
                    ("y", q.y.to_string()),
                    ("aborted", aborted.to_string()),
                ];
                rows.extend(two_time_rows(&e.id, base, &r, None, (e.replicas - aborted) as u64, clock.lap()));
            }
        }
        Model::Glew => {
            let b = cfg.glew.as_ref().expect("validated");
            let run = b.run()?;
            for q in b.queries() {
                let r = gl_two_time_corr(&run, q, e.replicas, key, ens)?;
                let reference = ew_correlation(EwQuery { a: 1.0, b: q.a, x: q.x, y: q.y })?;
                let base = vec![
                    ("potential", format!("{:?}", b.potential).to_lowercase()),
                    ("kappa", b.kappa.to_string()),
                    ("L", run.ring_size.to_string()),
                    ("dt", run.dt.to_string()),
                    ("s", q.s.to_string()),
                    ("a", q.a.to_string()),
                    ("x", q.x.to_string()),
                    ("y", q.y.to_string()),
                ];
                rows.extend(two_time_rows(&e.id, base, &r, Some(reference), e.replicas as u64, clock.lap()));
            }
        }
        Model::Closedform => {
            let b = cfg.closedform.as_ref().expect("validated");
            rows = table_rows(b.function, &b.grid)?;
            for r in &mut rows {
                r.experiment = e.id.clone();
                r.wall_s = clock.lap();
            }
        }
    }
    Ok(rows)
}

/// Loads, validates, executes and writes one config. Returns the rows written.
pub fn run(config_path: &Path, workers_override: Option<usize>) -> Result<Vec<ResultRow>> {
    let cfg = ExperimentConfig::load(config_path)?;
    let workers = workers_override.filter(|&w| w > 0).unwrap_or(cfg.experiment.workers);
    let rows = execute(&cfg, workers)?;
    write_atomic(&cfg.experiment.output, &rows)?;
    Ok(rows)
}
