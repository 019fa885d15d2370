//! Stationary O'Connell–Yor polymer, simulated through its lattice SDE.
//!
//! With `z = Z e^{-θt}` the levels evolve as
//! `d log z_j = (e^{-r_j} - θ) dt + β dB_j` for `j >= 1`, where
//! `r_j = log z_j - log z_{j-1}`, and the boundary is `log z_0 = -β B_0`.
//! The noise is additive in log space, so Euler–Maruyama is stable as long as
//! `θ dt` is small. The profile starts from the Gamma product law, which is
//! exactly stationary for `β = 1`.

use statrs::function::gamma::gamma_lr;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::rng::{self, StreamKey, StreamRng};
use crate::stats::{two_point_summary, CvtvTriple, EmpiricalDistribution, TwoTimeResult};

/// Largest admissible `θ dt`.
pub const STIFFNESS_LIMIT: f64 = 1e-2;

/// Largest tolerated fraction of replicas that blow up.
pub const MAX_ABORT_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolymerParams {
    pub n: usize,
    pub theta: f64,
    pub beta: f64,
    pub dt: f64,
    pub levels: usize,
}

impl PolymerParams {
    /// `θ = √n + ½`, `β = 1`: the intermediate-disorder polymer after
    /// Brownian rescaling.
    pub fn intermediate_disorder(n: usize, dt: f64, levels: usize) -> Self {
        Self {
            n,
            theta: (n as f64).sqrt() + 0.5,
            beta: 1.0,
            dt,
            levels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("must be positive, got {}", self.beta)));
        }
        if !(self.theta > 0.5 * self.beta * self.beta && self.theta.is_finite()) {
            return Err(Error::param(
                "theta",
                format!("must exceed beta^2/2 = {}, got {}", 0.5 * self.beta * self.beta, self.theta),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.dt > STIFFNESS_LIMIT / self.theta {
            return Err(Error::param(
                "dt",
                format!("{} exceeds the stiffness guard {}", self.dt, STIFFNESS_LIMIT / self.theta),
            ));
        }
        if self.levels < 1 {
            return Err(Error::param("levels", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps used to reach `time`, rounded to the nearest step.
    pub fn steps_to(&self, time: f64) -> u64 {
        (time / self.dt).round() as u64
    }
}

/// CDF of Gamma(shape, 1).
pub fn gamma_cdf(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(shape, x)
    }
}

#[derive(Debug, Clone)]
pub struct PolymerState {
    params: PolymerParams,
    logz: Vec<f64>,
    time: f64,
    steps: u64,
    noise: StreamRng,
    increments: Vec<f64>,
}

impl PolymerState {
    /// `log z(0) = 0` and `log z(k) - log z(k-1) = -log G_k` with `G_k` i.i.d.
    /// Gamma(θ). The profile is drawn from lane 0 of `key`, the Brownian
    /// increments from lane 1.
    pub fn stationary(params: PolymerParams, key: StreamKey) -> Result<Self> {
        params.validate()?;
        let mut init = key.lane(0).rng();
        let mut logz = Vec::with_capacity(params.levels + 1);
        logz.push(0.0);
        let mut acc = 0.0;
        for _ in 0..params.levels {
            acc -= rng::gamma(&mut init, params.theta).ln();
            logz.push(acc);
        }
        Self::from_profile(params, logz, key.lane(1).rng())
    }

    /// Start from an explicit profile; `logz.len()` must be `levels + 1`.
    pub fn from_profile(params: PolymerParams, logz: Vec<f64>, noise: StreamRng) -> Result<Self> {
        params.validate()?;
        if logz.len() != params.levels + 1 {
            return Err(Error::param(
                "logz",
                format!("expected {} entries, got {}", params.levels + 1, logz.len()),
            ));
        }
        if let Some(&bad) = logz.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self {
            params,
            increments: vec![0.0; logz.len()],
            logz,
            time: 0.0,
            steps: 0,
            noise,
        })
    }

    pub fn params(&self) -> &PolymerParams {
        &self.params
    }

    pub fn logz(&self) -> &[f64] {
        &self.logz
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One Euler–Maruyama step of length `params.dt`.
    pub fn em_step(&mut self) -> Result<()> {
        let scale = self.params.dt.sqrt();
        let mut db = std::mem::take(&mut self.increments);
        for v in db.iter_mut() {
            *v = scale * rng::normal(&mut self.noise);
        }
        let res = self.step_with_increments(self.params.dt, &db);
        self.increments = db;
        res
    }

    /// One step of length `dt` driven by the Brownian increments `db`, one
    /// per level including the boundary. Every level reads the pre-step
    /// value of its lower neighbour.
    pub fn step_with_increments(&mut self, dt: f64, db: &[f64]) -> Result<()> {
        if db.len() != self.logz.len() {
            return Err(Error::param("db", format!("expected {} increments, got {}", self.logz.len(), db.len())));
        }
        let PolymerParams { theta, beta, .. } = self.params;
        // descending order keeps logz[j - 1] at its old value when level j is updated
        for j in (1..self.logz.len()).rev() {
            let ratio = (self.logz[j - 1] - self.logz[j]).exp();
            let next = self.logz[j] + (ratio - theta) * dt + beta * db[j];
            if !ratio.is_finite() || !next.is_finite() {
                return Err(Error::BlowUp(format!(
                    "level {j} at t = {}: e^(-r) = {ratio}",
                    self.time
                )));
            }
            self.logz[j] = next;
        }
        self.logz[0] -= beta * db[0];
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    pub fn advance_steps(&mut self, count: u64) -> Result<()> {
        for _ in 0..count {
            self.em_step()?;
        }
        Ok(())
    }

    /// `e^{-r_k}` for `k = 1..=levels`.
    pub fn burke_residuals(&self) -> Result<EmpiricalDistribution> {
        EmpiricalDistribution::new(residuals(&self.logz))
    }
}

fn residuals(logz: &[f64]) -> Vec<f64> {
    logz.windows(2).map(|w| (w[0] - w[1]).exp()).collect()
}

/// A point of the space-time lattice: `steps` Euler steps, polymer level `level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticePoint {
    pub steps: u64,
    pub level: usize,
}

/// `log z` at each point along one trajectory, in the order given. Only the
/// levels up to the highest requested one are simulated; higher levels never
/// feed back into lower ones.
pub fn observe_log_partition(params: PolymerParams, points: &[LatticePoint], key: StreamKey) -> Result<Vec<f64>> {
    let top = points.iter().map(|p| p.level).max().unwrap_or(0);
    if top > params.levels {
        return Err(Error::OutsideWindow(format!("level {top} above the {} simulated", params.levels)));
    }
    let mut state = PolymerState::stationary(PolymerParams { levels: top.max(1), ..params }, key)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| points[i].steps);
    let mut out = vec![0.0; points.len()];
    for idx in order {
        let p = points[idx];
        state.advance_steps(p.steps - state.steps())?;
        out[idx] = state.logz()[p.level];
    }
    Ok(out)
}

/// Two-time query in skew-scaled coordinates: levels `⌊sn⌋`, `⌊tn⌋` observed
/// at times `s√n - x` and `t√n - y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolymerQuery {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl PolymerQuery {
    /// The first point, the second point and their displacement.
    pub fn lattice_points(&self, params: &PolymerParams) -> Result<[LatticePoint; 3]> {
        let Self { s, t, x, y } = *self;
        if !(0.0 <= s && s <= t && t.is_finite()) {
            return Err(Error::param("s, t", format!("need 0 <= s <= t, got s = {s}, t = {t}")));
        }
        let root = (params.n as f64).sqrt();
        let (tau1, tau2) = (s * root - x, t * root - y);
        if !(tau1 >= 0.0 && tau2 >= tau1) {
            return Err(Error::OutsideWindow(format!(
                "observation times {tau1} and {tau2} must satisfy 0 <= first <= second"
            )));
        }
        let (k1, k2) = (params.steps_to(tau1), params.steps_to(tau2));
        let m1 = (s * params.n as f64).floor() as usize;
        let m2 = (t * params.n as f64).floor() as usize;
        if m2 > params.levels {
            return Err(Error::OutsideWindow(format!("level {m2} above the {} simulated", params.levels)));
        }
        Ok([
            LatticePoint { steps: k1, level: m1 },
            LatticePoint { steps: k2, level: m2 },
            LatticePoint { steps: k2 - k1, level: m2 - m1 },
        ])
    }

    pub fn is_diagonal(&self) -> bool {
        self.s == self.t && self.x == self.y
    }
}

/// Per-replica observations for a set of lattice points. Replicas that blow
/// up are dropped and counted; more than [`MAX_ABORT_FRACTION`] of them is an
/// error.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymerObservations {
    pub values: Vec<Vec<f64>>,
    pub aborted: usize,
}

pub fn polymer_ensemble(
    params: PolymerParams,
    points: &[LatticePoint],
    replicas: usize,
    key: StreamKey,
    ensemble: Ensemble,
) -> Result<PolymerObservations> {
    params.validate()?;
    let runs = ensemble.map(replicas, |r| observe_log_partition(params, points, key.replica(r as u64)));
    let mut values = Vec::with_capacity(replicas);
    let mut aborted = 0;
    for run in runs {
        match run {
            Ok(v) => values.push(v),
            Err(Error::BlowUp(_)) => aborted += 1,
            Err(e) => return Err(e),
        }
    }
    if aborted as f64 > MAX_ABORT_FRACTION * replicas as f64 {
        return Err(Error::BlowUp(format!("{aborted} of {replicas} replicas aborted")));
    }
    Ok(PolymerObservations { values, aborted })
}

/// Triples for [`two_point_summary`] from observations at
/// `[first, second, displacement]` columns.
pub fn triples(values: &[Vec<f64>], columns: [usize; 3]) -> Vec<CvtvTriple> {
    values
        .iter()
        .map(|v| CvtvTriple {
            first: v[columns[0]],
            second: v[columns[1]],
            displacement: v[columns[2]],
        })
        .collect()
}

/// Pearson estimate of `Corr(log Z(s√n - x, ⌊sn⌋), log Z(t√n - y, ⌊tn⌋))`
/// with the covariance-to-variance cross-check. The deterministic centering
/// of `log Z` is dropped since correlations ignore affine changes.
pub fn polymer_two_time_corr(
    params: PolymerParams,
    query: PolymerQuery,
    replicas: usize,
    key: StreamKey,
    ensemble: Ensemble,
) -> Result<(TwoTimeResult, usize)> {
    let points = query.lattice_points(&params)?;
    let obs = polymer_ensemble(params, &points, replicas, key, ensemble)?;
    let summary = two_point_summary(&triples(&obs.values, [0, 1, 2]), query.is_diagonal(), key.seed)?;
    Ok((summary, obs.aborted))
}

/// Burke residuals of one replica at `t_end` under successively halved time
/// steps `dt, dt/2, …`, all driven by the same Brownian path and the same
/// initial profile. Entry `k` uses step `params.dt / 2^k`.
pub fn coupled_residuals(params: PolymerParams, t_end: f64, refinements: usize, key: StreamKey) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let finest = params.dt / (1u64 << refinements) as f64;
    let fine_steps = params.steps_to(t_end) << refinements;
    let base = PolymerState::stationary(params, key)?;
    let mut noise = key.lane(1).rng();
    let mut states: Vec<PolymerState> = (0..=refinements)
        .map(|k| {
            let mut st = base.clone();
            st.params.dt = params.dt / (1u64 << k) as f64;
            st
        })
        .collect();
    let width = params.levels + 1;
    let mut pending = vec![vec![0.0; width]; refinements + 1];
    let scale = finest.sqrt();
    let mut db = vec![0.0; width];
    for step in 1..=fine_steps {
        for v in db.iter_mut() {
            *v = scale * rng::normal(&mut noise);
        }
        for (k, st) in states.iter_mut().enumerate() {
            let acc = &mut pending[k];
            for (a, d) in acc.iter_mut().zip(&db) {
                *a += d;
            }
            let stride = 1u64 << (refinements - k);
            if step % stride == 0 {
                let dt = st.params.dt;
                st.step_with_increments(dt, acc)?;
                acc.iter_mut().for_each(|a| *a = 0.0);
            }
        }
    }
    Ok(states.iter().map(|s| residuals(&s.logz)).collect())
}

/// Pooled output of [`coupled_residual_ensemble`].
#[derive(Debug, Clone)]
pub struct Refinement {
    /// Residual law at step `dt / 2^k`.
    pub residuals: Vec<EmpiricalDistribution>,
    /// Mean `|e^{-r}|` difference between step sizes `k` and `k + 1` on the
    /// same path; an upper bound on the Wasserstein-1 distance of the laws.
    pub coupled_gap: Vec<f64>,
}

/// [`coupled_residuals`] pooled over replicas.
pub fn coupled_residual_ensemble(
    params: PolymerParams,
    t_end: f64,
    refinements: usize,
    replicas: usize,
    key: StreamKey,
    ensemble: Ensemble,
) -> Result<Refinement> {
    let runs = ensemble.map(replicas, |r| coupled_residuals(params, t_end, refinements, key.replica(r as u64)));
    let mut pooled = vec![Vec::new(); refinements + 1];
    let mut gap = vec![0.0; refinements];
    let mut pairs = 0usize;
    for run in runs {
        let run = run?;
        for (k, g) in gap.iter_mut().enumerate() {
            *g += run[k].iter().zip(&run[k + 1]).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
        pairs += run[0].len();
        for (p, v) in pooled.iter_mut().zip(run) {
            p.extend(v);
        }
    }
    Ok(Refinement {
        residuals: pooled.into_iter().map(EmpiricalDistribution::new).collect::<Result<_>>()?,
        coupled_gap: gap.into_iter().map(|g| g / pairs.max(1) as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{self, MomentAccumulator};

    fn params(levels: usize) -> PolymerParams {
        PolymerParams::intermediate_disorder(32, 1e-4, levels)
    }

    #[test]
    fn defaults_follow_the_scaling() {
        let p = params(10);
        assert!((p.theta - 6.156_854_249_492_38).abs() < 1e-12);
        assert_eq!(p.beta, 1.0);
        p.validate().unwrap();
        assert!(PolymerParams { dt: 1e-2, ..p }.validate().is_err());
        assert!(PolymerParams { theta: 0.4, ..p }.validate().is_err());
        assert!(PolymerParams { levels: 0, ..p }.validate().is_err());
    }

    #[test]
    fn init_is_gamma_profile() {
        let st = PolymerState::stationary(params(10_000), StreamKey::new(1, "init")).unwrap();
        assert_eq!(st.logz()[0], 0.0);
        let res = st.burke_residuals().unwrap();
        let theta = st.params().theta;
        let ks = stats::ks_statistic(&res, |x| gamma_cdf(theta, x));
        assert!(ks <= 0.02, "{ks}");
        let acc = MomentAccumulator::from_slice(res.samples()).unwrap();
        assert!((acc.mean() - theta).abs() <= 3.0 * acc.stderr().unwrap());
    }

    #[test]
    fn balanced_profile_without_noise_is_fixed() {
        let p = params(20);
        let step = -p.theta.ln();
        let logz: Vec<f64> = (0..=20).map(|k| k as f64 * step).collect();
        let mut st = PolymerState::from_profile(p, logz.clone(), StreamKey::new(1, "x").rng()).unwrap();
        let zeros = vec![0.0; 21];
        for _ in 0..100 {
            st.step_with_increments(p.dt, &zeros).unwrap();
        }
        for (a, b) in st.logz().iter().zip(&logz) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn one_step_increment_variance() {
        let p = PolymerParams::intermediate_disorder(32, 1e-3, 1);
        let reps = 100_000;
        let mut acc = MomentAccumulator::new();
        let key = StreamKey::new(5, "one-step");
        for r in 0..reps {
            let mut st = PolymerState::stationary(p, key.replica(r)).unwrap();
            let before = st.logz()[1];
            st.em_step().unwrap();
            acc.update(st.logz()[1] - before).unwrap();
        }
        let rel = acc.variance().unwrap() / (p.beta * p.beta * p.dt);
        assert!((rel - 1.0).abs() < 0.05, "{rel}");
    }

    #[test]
    fn deterministic_and_blow_up_detected() {
        let key = StreamKey::new(9, "det");
        let run = || {
            let mut st = PolymerState::stationary(params(8), key).unwrap();
            st.advance_steps(200).unwrap();
            st.logz().to_vec()
        };
        assert_eq!(run(), run());
        let p = params(2);
        let mut st = PolymerState::from_profile(p, vec![0.0, -800.0, -801.0], key.rng()).unwrap();
        assert!(matches!(st.step_with_increments(p.dt, &[0.0; 3]), Err(Error::BlowUp(_))));
    }

    #[test]
    fn query_points() {
        let p = PolymerParams::intermediate_disorder(32, 1e-3, 100);
        let q = PolymerQuery { s: 1.0, t: 2.0, x: 0.0, y: 0.0 };
        let [a, b, d] = q.lattice_points(&p).unwrap();
        assert_eq!((a.level, b.level, d.level), (32, 64, 32));
        assert_eq!(a.steps, 5657);
        assert_eq!(d.steps, b.steps - a.steps);
        assert!(PolymerQuery { t: 4.0, ..q }.lattice_points(&p).is_err());
        assert!(PolymerQuery { s: 3.0, ..q }.lattice_points(&p).is_err());
    }

    #[test]
    fn coupled_coarsest_matches_plain_run() {
        // with no refinement the coupled driver is the plain scheme
        let p = PolymerParams::intermediate_disorder(32, 1e-3, 6);
        let key = StreamKey::new(4, "coupled");
        let coupled = coupled_residuals(p, 0.5, 0, key).unwrap();
        let mut st = PolymerState::stationary(p, key).unwrap();
        st.advance_steps(500).unwrap();
        assert_eq!(coupled[0], residuals(st.logz()));
    }

    #[test]
    fn diagonal_query_is_one() {
        let p = PolymerParams::intermediate_disorder(8, 1e-3, 16);
        let q = PolymerQuery { s: 1.0, t: 1.0, x: 0.5, y: 0.5 };
        let (res, aborted) = polymer_two_time_corr(p, q, 100, StreamKey::new(2, "diag"), Ensemble::default()).unwrap();
        assert_eq!(res.direct.value, 1.0);
        assert_eq!(aborted, 0);
    }
}
