//! Ginzburg–Landau gradient interface on a ring.
//!
//! Heights follow `du_j = ½(V'(∇u_j) - V'(∇u_{j-1})) dt + dB_j` with
//! `∇u_j = u_{j+1} - u_j`, i.e. `½Δu` plus noise for `V(x) = x²/2`. The ring is
//! helical: the last gradient closes the loop with the conserved total tilt
//! `S`, so `∇u_{L-1} = u_0 + S - u_{L-1}` and `u_{j+L} = u_j + S`. Gradients
//! start i.i.d. from `μ_0(dx) ∝ e^{-V(x)} dx`, which the dynamics preserve.

use std::fmt;
use std::sync::Arc;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::rng::{self, StreamKey, StreamRng};
use crate::stats::{self, two_point_summary, CvtvTriple, TwoTimeResult, VarianceEstimate};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Quadratic,
    LogCosh(f64),
    Custom { v: RealFn, vprime: RealFn },
}

/// Convex even potential with curvature bounds `c1 <= V'' <= c2`.
#[derive(Clone)]
pub struct Potential {
    shape: Shape,
    c1: f64,
    c2: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.shape {
            Shape::Quadratic => "quadratic".to_string(),
            Shape::LogCosh(k) => format!("log-cosh({k})"),
            Shape::Custom { .. } => "custom".to_string(),
        };
        f.debug_struct("Potential")
            .field("shape", &name)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

const PROBE_RANGE: f64 = 10.0;
const PROBE_POINTS: usize = 401;

impl Potential {
    /// `V(x) = x²/2`.
    pub fn quadratic() -> Self {
        Self {
            shape: Shape::Quadratic,
            c1: 1.0,
            c2: 1.0,
        }
    }

    /// `V(x) = x²/2 + κ log cosh x`, so `1 <= V'' <= 1 + κ` for `κ >= 0`.
    pub fn log_cosh(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::param("kappa", format!("must be finite and nonnegative, got {kappa}")));
        }
        Ok(Self {
            shape: Shape::LogCosh(kappa),
            c1: 1.0,
            c2: 1.0 + kappa,
        })
    }

    /// Arbitrary potential; the symmetry and curvature claims are probed on a
    /// grid and rejected if violated.
    pub fn custom(
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        vprime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c1: f64,
        c2: f64,
    ) -> Result<Self> {
        if !(0.0 < c1 && c1 <= c2 && c2.is_finite()) {
            return Err(Error::param("c1, c2", format!("need 0 < c1 <= c2 < inf, got {c1}, {c2}")));
        }
        let p = Self {
            shape: Shape::Custom {
                v: Arc::new(v),
                vprime: Arc::new(vprime),
            },
            c1,
            c2,
        };
        p.probe()?;
        Ok(p)
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.shape, Shape::Quadratic)
    }

    #[inline]
    pub fn v(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Quadratic => 0.5 * x * x,
            Shape::LogCosh(k) => {
                // log cosh x = |x| + log1p(e^{-2|x|}) - ln 2, stable for large |x|
                let a = x.abs();
                0.5 * x * x + k * (a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
            }
            Shape::Custom { v, .. } => v(x),
        }
    }

    #[inline]
    pub fn vprime(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Quadratic => x,
            Shape::LogCosh(k) => x + k * x.tanh(),
            Shape::Custom { vprime, .. } => vprime(x),
        }
    }

    /// Check evenness of `V`, oddness of `V'` and the curvature bounds at
    /// grid points of `[-10, 10]`.
    pub fn probe(&self) -> Result<()> {
        let h = 1e-4;
        for i in 0..PROBE_POINTS {
            let x = -PROBE_RANGE + 2.0 * PROBE_RANGE * i as f64 / (PROBE_POINTS - 1) as f64;
            let (v, vm) = (self.v(x), self.v(-x));
            if !v.is_finite() || (v - vm).abs() > 1e-9 * (1.0 + v.abs()) {
                return Err(Error::param("V", format!("not even at x = {x}: {v} vs {vm}")));
            }
            let (d, dm) = (self.vprime(x), self.vprime(-x));
            if !d.is_finite() || (d + dm).abs() > 1e-9 * (1.0 + d.abs()) {
                return Err(Error::param("V'", format!("not odd at x = {x}: {d} vs {dm}")));
            }
            let curv = (self.vprime(x + h) - self.vprime(x - h)) / (2.0 * h);
            if curv < self.c1 * (1.0 - 1e-5) || curv > self.c2 * (1.0 + 1e-5) {
                return Err(Error::param(
                    "c1, c2",
                    format!("V''({x}) = {curv} outside [{}, {}]", self.c1, self.c2),
                ));
            }
        }
        Ok(())
    }

    /// One draw from `μ_0`. Exact Gaussian for the quadratic potential,
    /// otherwise rejection from `N(0, 1/c1)`, whose density dominates
    /// `e^{-V}` up to a constant because `V(x) - V(0) >= c1 x²/2`.
    pub fn sample_gradient(&self, rng: &mut StreamRng) -> f64 {
        if self.is_quadratic() {
            return rng::normal(rng);
        }
        let sd = self.c1.recip().sqrt();
        let v0 = self.v(0.0);
        loop {
            let x = sd * rng::normal(rng);
            let log_accept = -(self.v(x) - v0 - 0.5 * self.c1 * x * x);
            if rng::open01(rng).ln() < log_accept {
                return x;
            }
        }
    }
}

/// Tabulated CDF of `μ_0`, for goodness-of-fit tests on gradients.
#[derive(Debug, Clone)]
pub struct GradientLaw {
    lo: f64,
    step: f64,
    cdf: Vec<f64>,
    variance: f64,
}

impl GradientLaw {
    pub fn new(potential: &Potential) -> Self {
        let half = 14.0 / potential.c1.sqrt();
        let cells = 40_000;
        let step = 2.0 * half / cells as f64;
        let v0 = potential.v(0.0);
        let dens: Vec<f64> = (0..=cells)
            .map(|i| (-(potential.v(-half + i as f64 * step) - v0)).exp())
            .collect();
        let mut cdf = vec![0.0; cells + 1];
        let mut second = 0.0;
        for i in 1..=cells {
            cdf[i] = cdf[i - 1] + 0.5 * step * (dens[i - 1] + dens[i]);
            let (x0, x1) = (-half + (i - 1) as f64 * step, -half + i as f64 * step);
            second += 0.5 * step * (x0 * x0 * dens[i - 1] + x1 * x1 * dens[i]);
        }
        let total = cdf[cells];
        cdf.iter_mut().for_each(|c| *c /= total);
        Self {
            lo: -half,
            step,
            cdf,
            variance: second / total,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.cdf.len() {
            return 1.0;
        }
        let frac = pos - i as f64;
        self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

#[derive(Debug, Clone)]
pub struct GlState {
    u: Vec<f64>,
    tilt: f64,
    time: f64,
    steps: u64,
    noise: StreamRng,
    force: Vec<f64>,
}

impl GlState {
    /// Gradients i.i.d. from `μ_0` (lane 0 of `key`), `u_0 = 0`, heights by
    /// cumulative sums. Brownian increments come from lane 1.
    pub fn stationary(potential: &Potential, ring_size: usize, key: StreamKey) -> Result<Self> {
        if ring_size < 2 {
            return Err(Error::param("ring_size", format!("need at least 2 sites, got {ring_size}")));
        }
        let mut init = key.lane(0).rng();
        let mut u = Vec::with_capacity(ring_size);
        let mut h = 0.0;
        for _ in 0..ring_size {
            u.push(h);
            h += potential.sample_gradient(&mut init);
        }
        Self::from_heights(u, h, key.lane(1).rng())
    }

    /// Explicit heights `u_0..u_{L-1}` and tilt `S = u_L - u_0`.
    pub fn from_heights(u: Vec<f64>, tilt: f64, noise: StreamRng) -> Result<Self> {
        if u.len() < 2 {
            return Err(Error::param("ring_size", format!("need at least 2 sites, got {}", u.len())));
        }
        if let Some(&bad) = u.iter().chain([&tilt]).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self {
            force: vec![0.0; u.len()],
            u,
            tilt,
            time: 0.0,
            steps: 0,
            noise,
        })
    }

    pub fn ring_size(&self) -> usize {
        self.u.len()
    }

    pub fn heights(&self) -> &[f64] {
        &self.u
    }

    pub fn tilt(&self) -> f64 {
        self.tilt
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Height at any integer site, continued helically.
    pub fn height(&self, k: i64) -> f64 {
        let l = self.ring_size() as i64;
        let wraps = k.div_euclid(l);
        self.u[k.rem_euclid(l) as usize] + wraps as f64 * self.tilt
    }

    /// Ring averages of `d_m = u(t, k+m) - u(0, m)` and of `d_m²`, with `self`
    /// at time `t` and `initial` the same replica at time 0. On the helical
    /// ring `d_m` has the law of `u(t, k)` for every `m`.
    pub fn translated_moments(&self, initial: &GlState, k: i64) -> (f64, f64) {
        let l = self.ring_size() as i64;
        let (mut first, mut second) = (0.0, 0.0);
        for m in 0..l {
            let d = self.height(k + m) - initial.height(m);
            first += d;
            second += d * d;
        }
        (first / l as f64, second / l as f64)
    }

    /// `∇u_j = u_{j+1} - u_j` around the ring.
    pub fn gradients(&self) -> Vec<f64> {
        let l = self.ring_size();
        (0..l)
            .map(|j| if j + 1 < l { self.u[j + 1] - self.u[j] } else { self.u[0] + self.tilt - self.u[j] })
            .collect()
    }

    /// `½(V'(∇u_j) - V'(∇u_{j-1}))` at every site.
    pub fn drift(&self, potential: &Potential) -> Vec<f64> {
        let f: Vec<f64> = self.gradients().iter().map(|&g| potential.vprime(g)).collect();
        let l = f.len();
        (0..l).map(|j| 0.5 * (f[j] - f[(j + l - 1) % l])).collect()
    }

    /// One Euler–Maruyama step with the given Brownian increments.
    pub fn step_with_increments(&mut self, potential: &Potential, dt: f64, db: &[f64]) -> Result<()> {
        let l = self.ring_size();
        if db.len() != l {
            return Err(Error::param("db", format!("expected {l} increments, got {}", db.len())));
        }
        for j in 0..l - 1 {
            self.force[j] = potential.vprime(self.u[j + 1] - self.u[j]);
        }
        self.force[l - 1] = potential.vprime(self.u[0] + self.tilt - self.u[l - 1]);
        let mut prev = self.force[l - 1];
        for j in 0..l {
            let f = self.force[j];
            self.u[j] += 0.5 * (f - prev) * dt + db[j];
            prev = f;
        }
        if let Some(&bad) = self.force.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    pub fn em_step(&mut self, potential: &Potential, dt: f64) -> Result<()> {
        self.advance_steps(potential, dt, 1)
    }

    /// Advance `count` steps of size `dt` without extra allocation per step.
    pub fn advance_steps(&mut self, potential: &Potential, dt: f64, count: u64) -> Result<()> {
        check_dt(potential, dt)?;
        let scale = dt.sqrt();
        let mut db = vec![0.0; self.ring_size()];
        for _ in 0..count {
            for v in db.iter_mut() {
                *v = scale * rng::normal(&mut self.noise);
            }
            self.step_with_increments(potential, dt, &db)?;
        }
        Ok(())
    }
}

/// Explicit-scheme stability bound `dt <= 0.1 / c2`.
pub fn check_dt(potential: &Potential, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= 0.1 / potential.c2) {
        return Err(Error::param(
            "dt",
            format!("must lie in (0, {}], got {dt}", 0.1 / potential.c2),
        ));
    }
    Ok(())
}

/// Whether site `k` at time `t` stays clear of ring wraparound: the
/// coupling spreads like a rate-one walk, so `|k| + 10√t` must stay within
/// half the ring.
pub fn check_window(ring_size: usize, t: f64, k: i64) -> Result<()> {
    let reach = k.unsigned_abs() as f64 + 10.0 * t.max(0.0).sqrt();
    if reach > ring_size as f64 / 2.0 {
        return Err(Error::OutsideWindow(format!(
            "site {k} at t = {t} reaches {reach:.1} > L/2 = {}",
            ring_size / 2
        )));
    }
    Ok(())
}

/// Space-time point on the simulation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub steps: u64,
    pub site: i64,
}

/// Heights at each grid point along one trajectory, in the order given.
pub fn observe_heights(
    potential: &Potential,
    ring_size: usize,
    dt: f64,
    points: &[GridPoint],
    key: StreamKey,
) -> Result<Vec<f64>> {
    let mut state = GlState::stationary(potential, ring_size, key)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| points[i].steps);
    let mut out = vec![0.0; points.len()];
    for idx in order {
        let p = points[idx];
        state.advance_steps(potential, dt, p.steps - state.steps())?;
        out[idx] = state.height(p.site);
    }
    Ok(out)
}

/// Run settings shared by the ensemble operations.
#[derive(Debug, Clone)]
pub struct GlRun {
    pub potential: Potential,
    pub ring_size: usize,
    pub dt: f64,
}

impl GlRun {
    pub fn steps_to(&self, t: f64) -> u64 {
        (t / self.dt).round() as u64
    }

    pub fn point(&self, t: f64, site: i64) -> Result<GridPoint> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param("t", format!("must be finite and nonnegative, got {t}")));
        }
        check_window(self.ring_size, t, site)?;
        Ok(GridPoint { steps: self.steps_to(t), site })
    }

    /// Per-replica heights at `points`, one row per replica in index order.
    pub fn ensemble(&self, points: &[GridPoint], replicas: usize, key: StreamKey, ensemble: Ensemble) -> Result<Vec<Vec<f64>>> {
        check_dt(&self.potential, self.dt)?;
        ensemble
            .map(replicas, |r| observe_heights(&self.potential, self.ring_size, self.dt, points, key.replica(r as u64)))
            .into_iter()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub k: i64,
    pub variance: VarianceEstimate,
}

/// Monte Carlo `Var u(t, k)` for each requested site. Every replica
/// contributes its ring average from [`GlState::translated_moments`], which
/// is unbiased for `E u(t,k)²` and far less noisy than a single site.
pub fn gl_variance_profile(
    run: &GlRun,
    t: f64,
    sites: &[i64],
    replicas: usize,
    key: StreamKey,
    ensemble: Ensemble,
) -> Result<Vec<ProfileRow>> {
    for &k in sites {
        check_window(run.ring_size, t, k)?;
    }
    check_dt(&run.potential, run.dt)?;
    let steps = run.steps_to(t);
    let moments = ensemble
        .map(replicas, |r| -> Result<Vec<(f64, f64)>> {
            let mut state = GlState::stationary(&run.potential, run.ring_size, key.replica(r as u64))?;
            let initial = state.clone();
            state.advance_steps(&run.potential, run.dt, steps)?;
            Ok(sites.iter().map(|&k| state.translated_moments(&initial, k)).collect())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    profile_from_moments(&moments, sites)
}

/// Variance rows from per-replica ring moments, as produced by
/// [`GlState::translated_moments`], one entry per site.
pub fn profile_from_moments(moments: &[Vec<(f64, f64)>], sites: &[i64]) -> Result<Vec<ProfileRow>> {
    sites
        .iter()
        .enumerate()
        .map(|(c, &k)| {
            let firsts: Vec<f64> = moments.iter().map(|m| m[c].0).collect();
            let seconds: Vec<f64> = moments.iter().map(|m| m[c].1).collect();
            let mean = stats::MomentAccumulator::from_slice(&firsts)?.mean();
            let acc = stats::MomentAccumulator::from_slice(&seconds)?;
            let stderr = acc.stderr().ok_or(Error::TooFewSamples { needed: 2, got: moments.len() })?;
            Ok(ProfileRow {
                k,
                variance: VarianceEstimate {
                    value: acc.mean() - mean * mean,
                    stderr,
                },
            })
        })
        .collect()
}

/// Variance rows from columns `offset..offset + sites.len()` of an ensemble
/// of single-site observations.
pub fn profile_from(rows: &[Vec<f64>], sites: &[i64], offset: usize) -> Result<Vec<ProfileRow>> {
    sites
        .iter()
        .enumerate()
        .map(|(c, &k)| {
            let col: Vec<f64> = rows.iter().map(|r| r[offset + c]).collect();
            Ok(ProfileRow {
                k,
                variance: VarianceEstimate::from_samples(&col)?,
            })
        })
        .collect()
}

/// Two-time query in diffusive coordinates: `u(s, ⌊x√s⌋)` against
/// `u(as, ⌊y√s⌋)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlQuery {
    pub s: f64,
    pub a: f64,
    pub x: f64,
    pub y: f64,
}

impl GlQuery {
    pub fn sites(&self) -> (i64, i64) {
        let r = self.s.sqrt();
        ((self.x * r).floor() as i64, (self.y * r).floor() as i64)
    }

    /// The first point, the second point and their displacement.
    pub fn grid_points(&self, run: &GlRun) -> Result<[GridPoint; 3]> {
        if !(self.s > 0.0 && self.a >= 1.0 && self.a.is_finite()) {
            return Err(Error::param("s, a", format!("need s > 0 and a >= 1, got {}, {}", self.s, self.a)));
        }
        let (j, k) = self.sites();
        let first = run.point(self.s, j)?;
        let second = run.point(self.a * self.s, k)?;
        run.point((self.a - 1.0) * self.s, k - j)?;
        Ok([
            first,
            second,
            GridPoint {
                steps: second.steps - first.steps,
                site: k - j,
            },
        ])
    }
}

/// Pearson estimate of `Corr(u(s, ⌊x√s⌋), u(as, ⌊y√s⌋))` with the
/// covariance-to-variance cross-check.
pub fn gl_two_time_corr(run: &GlRun, query: GlQuery, replicas: usize, key: StreamKey, ensemble: Ensemble) -> Result<TwoTimeResult> {
    let points = query.grid_points(run)?;
    let rows = run.ensemble(&points, replicas, key, ensemble)?;
    let triples: Vec<CvtvTriple> = rows
        .iter()
        .map(|r| CvtvTriple { first: r[0], second: r[1], displacement: r[2] })
        .collect();
    let (j, k) = query.sites();
    two_point_summary(&triples, query.a == 1.0 && j == k, key.seed)
}

/// KS distance of the ring's gradients against `μ_0`.
pub fn gradient_ks(state: &GlState, law: &GradientLaw) -> Result<f64> {
    let g = stats::EmpiricalDistribution::new(state.gradients())?;
    Ok(stats::ks_statistic(&g, |x| law.cdf(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::gauss_cdf;
    use crate::stats::MomentAccumulator;

    fn key(name: &str) -> StreamKey {
        StreamKey::new(11, name)
    }

    #[test]
    fn potentials_probe_clean() {
        Potential::quadratic().probe().unwrap();
        Potential::log_cosh(0.5).unwrap().probe().unwrap();
        assert!(Potential::log_cosh(-1.0).is_err());
        assert!(Potential::custom(|x| x * x * x * x, |x| 4.0 * x * x * x, 1.0, 2.0).is_err());
        assert!(Potential::custom(|x| 0.5 * x * x + x, |x| x + 1.0, 1.0, 1.0).is_err());
        let p = Potential::custom(|x| x * x, |x| 2.0 * x, 2.0, 2.0).unwrap();
        assert_eq!(p.vprime(1.5), 3.0);
    }

    #[test]
    fn log_cosh_matches_direct_formula() {
        let p = Potential::log_cosh(0.5).unwrap();
        for x in [-3.0f64, -0.2, 0.0, 0.7, 5.0] {
            assert!((p.v(x) - (0.5 * x * x + 0.5 * x.cosh().ln())).abs() < 1e-12);
        }
        assert!(p.v(800.0).is_finite());
    }

    #[test]
    fn quadratic_gradients_are_standard_normal() {
        let st = GlState::stationary(&Potential::quadratic(), 100_000, key("grad")).unwrap();
        assert_eq!(st.height(0), 0.0);
        let g = st.gradients();
        let acc = MomentAccumulator::from_slice(&g).unwrap();
        let (v, se) = stats::variance_with_stderr(&g).unwrap();
        assert!((v - 1.0).abs() < 0.01 + 3.0 * se, "{v}");
        assert!(acc.mean().abs() < 3.0 / (1e5f64).sqrt());
        let ks = stats::ks_statistic(&stats::EmpiricalDistribution::new(g).unwrap(), gauss_cdf);
        assert!(ks < stats::ks_critical_value(100_000, 0.01).unwrap());
    }

    #[test]
    fn rejection_sampler_matches_tabulated_law() {
        let p = Potential::log_cosh(0.5).unwrap();
        let law = GradientLaw::new(&p);
        let st = GlState::stationary(&p, 50_000, key("rej")).unwrap();
        let ks = gradient_ks(&st, &law).unwrap();
        assert!(ks < stats::ks_critical_value(50_000, 0.01).unwrap(), "{ks}");
        let quad = GradientLaw::new(&Potential::quadratic());
        assert!((quad.variance() - 1.0).abs() < 1e-8);
        assert!((quad.cdf(1.0) - gauss_cdf(1.0)).abs() < 1e-6);
    }

    #[test]
    fn helical_heights() {
        let st = GlState::from_heights(vec![0.0, 1.0, 3.0, 2.0], 5.0, key("h").rng()).unwrap();
        assert_eq!(st.gradients(), vec![1.0, 2.0, -1.0, 3.0]);
        assert_eq!(st.height(4), 5.0);
        assert_eq!(st.height(-1), -3.0);
        assert_eq!(st.height(-5), -8.0);
        assert_eq!(st.gradients().iter().sum::<f64>(), st.tilt());
    }

    #[test]
    fn drift_sums_to_zero_and_ignores_shifts() {
        let p = Potential::log_cosh(0.5).unwrap();
        let st = GlState::stationary(&p, 300, key("drift")).unwrap();
        let d = st.drift(&p);
        let scale: f64 = d.iter().map(|x| x.abs()).sum();
        assert!(d.iter().sum::<f64>().abs() <= 1e-12 * scale.max(1.0));
        let shifted: Vec<f64> = st.heights().iter().map(|u| u + 17.25).collect();
        let moved = GlState::from_heights(shifted, st.tilt(), key("d").rng()).unwrap();
        for (a, b) in d.iter().zip(moved.drift(&p)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_start_gives_pure_noise() {
        let p = Potential::quadratic();
        let dt = 1e-3;
        let mut st = GlState::from_heights(vec![0.0; 20_000], 0.0, key("flat").rng()).unwrap();
        st.em_step(&p, dt).unwrap();
        let (v, se) = stats::variance_with_stderr(st.heights()).unwrap();
        assert!((v / dt - 1.0).abs() < 3.0 * se / dt, "{v}");
    }

    #[test]
    fn dt_and_window_guards() {
        let p = Potential::log_cosh(0.5).unwrap();
        assert!(check_dt(&p, 0.1 / 1.5).is_ok());
        assert!(check_dt(&p, 0.07).is_err());
        assert!(check_window(256, 4.0, 10).is_ok());
        assert!(check_window(256, 16.0, 100).is_err());
    }

    #[test]
    fn step_is_deterministic() {
        let p = Potential::quadratic();
        let run = || {
            let mut st = GlState::stationary(&p, 64, key("det")).unwrap();
            st.advance_steps(&p, 1e-2, 50).unwrap();
            st.heights().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn translated_moments_of_a_flat_shift() {
        let init = GlState::from_heights(vec![0.0, 1.0, -1.0, 2.0], 0.5, key("t").rng()).unwrap();
        let moved = GlState::from_heights(vec![2.0, 3.0, 1.0, 4.0], 0.5, key("t").rng()).unwrap();
        assert_eq!(moved.translated_moments(&init, 0), (2.0, 4.0));
        // differences u(1, m+1) - u(0, m) are 3, 0, 5 and 0.5 across the wrap
        let (m1, _) = moved.translated_moments(&init, 1);
        assert!((m1 - 8.5 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn profile_at_time_zero_is_distance() {
        let run = GlRun { potential: Potential::quadratic(), ring_size: 256, dt: 1e-3 };
        let rows = gl_variance_profile(&run, 0.0, &[0, 5, -5, 20], 400, key("p0"), Ensemble::default()).unwrap();
        assert_eq!(rows[0].variance.value, 0.0);
        for r in &rows[1..] {
            let want = r.k.unsigned_abs() as f64;
            assert!((r.variance.value - want).abs() < 3.0 * r.variance.stderr + 1e-12, "{r:?}");
        }
    }

    #[test]
    fn diagonal_query_is_one() {
        let run = GlRun { potential: Potential::quadratic(), ring_size: 64, dt: 1e-2 };
        let q = GlQuery { s: 1.0, a: 1.0, x: 0.0, y: 0.0 };
        let res = gl_two_time_corr(&run, q, 200, key("diag"), Ensemble::default()).unwrap();
        assert_eq!(res.direct.value, 1.0);
        assert!((res.cvtv.value - 1.0).abs() < 1e-12);
    }
}
