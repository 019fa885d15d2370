//! Mergeable moment accumulators, correlation estimators and distribution tests.
//!
//! Accumulators are plain values. A worker owns one, feeds it observations and
//! hands it back to be merged; there is no shared mutation.

use crate::error::{Error, Result};
use crate::rng::{self, StreamKey};

/// Streaming count, mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Result<Self> {
        let mut acc = Self::new();
        for &x in xs {
            acc.update(x)?;
        }
        Ok(acc)
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        Ok(())
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        let mean = (na * self.mean + nb * other.mean) / n;
        let m2 = self.m2 + other.m2 + delta * delta * na * nb / n;
        Self { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased sample variance; `None` below two observations.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> Option<f64> {
        self.variance().map(|v| (v / self.count as f64).sqrt())
    }
}

/// Streaming moments of a pair of observables, including the cross term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairAccumulator {
    count: u64,
    mean_x: f64,
    mean_y: f64,
    m2x: f64,
    m2y: f64,
    co: f64,
}

impl PairAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let mut acc = Self::new();
        for (&x, &y) in xs.iter().zip(ys) {
            acc.update(x, y)?;
        }
        Ok(acc)
    }

    pub fn update(&mut self, x: f64, y: f64) -> Result<()> {
        for v in [x, y] {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
        }
        self.count += 1;
        let n = self.count as f64;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / n;
        self.mean_y += dy / n;
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
        self.co += dx * (y - self.mean_y);
        Ok(())
    }

    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        let w = na * nb / n;
        Self {
            count,
            mean_x: (na * self.mean_x + nb * other.mean_x) / n,
            mean_y: (na * self.mean_y + nb * other.mean_y) / n,
            m2x: self.m2x + other.m2x + dx * dx * w,
            m2y: self.m2y + other.m2y + dy * dy * w,
            co: self.co + other.co + dx * dy * w,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn means(&self) -> (f64, f64) {
        (self.mean_x, self.mean_y)
    }

    pub fn m2(&self) -> (f64, f64) {
        (self.m2x, self.m2y)
    }

    pub fn co(&self) -> f64 {
        self.co
    }

    pub fn covariance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.co / (self.count - 1) as f64)
    }

    fn pearson(&self) -> Result<f64> {
        if self.count < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: self.count as usize,
            });
        }
        if self.m2x <= 0.0 || self.m2y <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        Ok(clamp_corr(self.co / (self.m2x * self.m2y).sqrt()))
    }
}

/// A non-empty, sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Right-continuous empirical CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }
}

/// A correlation estimate with its standard error over `n` replicas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

fn clamp_corr(r: f64) -> f64 {
    r.clamp(-1.0, 1.0)
}

/// Pearson correlation from accumulated moments, with the large-sample
/// standard error `(1 - r²)/sqrt(n - 1)`.
pub fn corr_direct(p: &PairAccumulator) -> Result<CorrelationEstimate> {
    let value = p.pearson()?;
    let stderr = (1.0 - value * value) / ((p.count - 1) as f64).sqrt();
    Ok(CorrelationEstimate {
        value,
        stderr,
        n: p.count,
    })
}

/// Pearson correlation of paired samples with a leave-one-out jackknife
/// standard error, computed in O(n) by downdating the full accumulator.
pub fn corr_direct_jackknife(xs: &[f64], ys: &[f64]) -> Result<CorrelationEstimate> {
    if xs.len() != ys.len() {
        return Err(Error::param("ys", "paired samples must have equal length"));
    }
    let full = PairAccumulator::from_pairs(xs, ys)?;
    let value = full.pearson()?;
    let n = full.count as f64;
    if full.count < 3 {
        return Ok(CorrelationEstimate {
            value,
            stderr: 0.0,
            n: full.count,
        });
    }
    let mut loo = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(ys) {
        let mx = (n * full.mean_x - x) / (n - 1.0);
        let my = (n * full.mean_y - y) / (n - 1.0);
        let m2x = full.m2x - (x - mx) * (x - full.mean_x);
        let m2y = full.m2y - (y - my) * (y - full.mean_y);
        let co = full.co - (x - mx) * (y - full.mean_y);
        if m2x <= 0.0 || m2y <= 0.0 {
            continue;
        }
        loo.push(clamp_corr(co / (m2x * m2y).sqrt()));
    }
    let mean = loo.iter().sum::<f64>() / loo.len() as f64;
    let ss: f64 = loo.iter().map(|r| (r - mean) * (r - mean)).sum();
    let stderr = ((n - 1.0) / n * ss).sqrt();
    Ok(CorrelationEstimate {
        value,
        stderr,
        n: full.count,
    })
}

/// Covariance-to-variance reduction: the correlation of two points of a
/// space-time stationary field from the variances at the two points and the
/// variance at their space-time displacement.
pub fn corr_cvtv(var_a: f64, var_b: f64, var_diff: f64) -> Result<f64> {
    if !(var_a > 0.0) {
        return Err(Error::param("var_a", format!("must be positive, got {var_a}")));
    }
    if !(var_b > 0.0) {
        return Err(Error::param("var_b", format!("must be positive, got {var_b}")));
    }
    if !(var_diff >= 0.0) {
        return Err(Error::param(
            "var_diff",
            format!("must be nonnegative, got {var_diff}"),
        ));
    }
    Ok(0.5 * (var_a + var_b - var_diff) / (var_a * var_b).sqrt())
}

/// Default resample count for bootstrap standard errors and intervals.
pub const DEFAULT_RESAMPLES: usize = 1000;

/// Observations of one replica at the two points of a correlation and at
/// their displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvtvTriple {
    pub first: f64,
    pub second: f64,
    pub displacement: f64,
}

fn sample_variance(xs: impl Iterator<Item = f64>) -> f64 {
    let mut acc = MomentAccumulator::new();
    for x in xs {
        // inputs were validated by the caller
        let _ = acc.update(x);
    }
    acc.variance().unwrap_or(0.0)
}

/// Correlation through [`corr_cvtv`] on estimated variances, with a
/// bootstrap standard error over replicas.
pub fn cvtv_estimate(
    triples: &[CvtvTriple],
    resamples: usize,
    seed: u64,
) -> Result<CorrelationEstimate> {
    if triples.len() < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: triples.len(),
        });
    }
    for t in triples {
        for v in [t.first, t.second, t.displacement] {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
        }
    }
    let estimate = |idx: &mut dyn Iterator<Item = usize>| -> Result<f64> {
        let picked: Vec<&CvtvTriple> = idx.map(|i| &triples[i]).collect();
        let va = sample_variance(picked.iter().map(|t| t.first));
        let vb = sample_variance(picked.iter().map(|t| t.second));
        let vd = sample_variance(picked.iter().map(|t| t.displacement));
        corr_cvtv(va, vb, vd).map(clamp_corr)
    };
    let value = estimate(&mut (0..triples.len())).map_err(|_| Error::ZeroVariance)?;
    let mut rng = StreamKey::new(seed, "cvtv-bootstrap").rng();
    let mut boot = MomentAccumulator::new();
    let n = triples.len();
    for _ in 0..resamples {
        let draws: Vec<usize> = (0..n).map(|_| rng::index(&mut rng, n)).collect();
        if let Ok(r) = estimate(&mut draws.into_iter()) {
            boot.update(r)?;
        }
    }
    Ok(CorrelationEstimate {
        value,
        stderr: boot.variance().unwrap_or(0.0).sqrt(),
        n: n as u64,
    })
}

/// Sup-norm distance between the empirical CDF and `cdf`. At each sample
/// point the empirical CDF is compared from the right and its left limit
/// from just before, so tied samples are handled exactly.
pub fn ks_statistic(samples: &EmpiricalDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = samples.samples();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = cdf(x).clamp(0.0, 1.0);
        let left = i as f64 / n;
        let right = j as f64 / n;
        d = d.max((right - f).abs()).max((f - left).abs());
        i = j;
    }
    d.min(1.0)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xs, ys) = (a.samples(), b.samples());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic one-sample Kolmogorov critical value at significance `alpha`
/// with Stephens' small-sample correction. Tabulated for the levels used by
/// the test suites.
pub fn ks_critical_value(n: usize, alpha: f64) -> Result<f64> {
    let c = match alpha {
        a if a == 0.10 => 1.224,
        a if a == 0.05 => 1.358,
        a if a == 0.01 => 1.628,
        a if a == 0.001 => 1.949,
        _ => {
            return Err(Error::param(
                "alpha",
                format!("no tabulated critical value for {alpha}"),
            ))
        }
    };
    let rn = (n as f64).sqrt();
    Ok(c / (rn + 0.12 + 0.11 / rn))
}

/// Percentile bootstrap interval of `estimator` at confidence `level`.
pub fn bootstrap_ci<F>(
    samples: &[f64],
    estimator: F,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    if samples.len() < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: samples.len(),
        });
    }
    if resamples < 100 {
        return Err(Error::param("resamples", "at least 100 resamples required"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {level}")));
    }
    let mut rng = StreamKey::new(seed, "bootstrap").rng();
    let n = samples.len();
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = samples[rng::index(&mut rng, n)];
            }
            estimator(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    let pick = |q: f64| {
        let pos = (q * (resamples - 1) as f64).round() as usize;
        stats[pos.min(resamples - 1)]
    };
    Ok((pick(tail), pick(1.0 - tail)))
}

/// Sample variance with its large-sample standard error
/// `sqrt((m4 - (n-3)/(n-1) s⁴) / n)`.
pub fn variance_with_stderr(xs: &[f64]) -> Result<(f64, f64)> {
    let acc = MomentAccumulator::from_slice(xs)?;
    let var = acc.variance().ok_or(Error::TooFewSamples {
        needed: 2,
        got: xs.len(),
    })?;
    let n = xs.len() as f64;
    let m4 = xs.iter().map(|x| (x - acc.mean()).powi(4)).sum::<f64>() / n;
    let spread = (m4 - (n - 3.0) / (n - 1.0) * var * var).max(0.0);
    Ok((var, (spread / n).sqrt()))
}

/// Variance estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    pub stderr: f64,
}

impl VarianceEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let (value, stderr) = variance_with_stderr(xs)?;
        Ok(Self { value, stderr })
    }
}

/// Direct and covariance-to-variance estimates of one two-point correlation,
/// with the three one-point variances that enter the latter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTimeResult {
    pub direct: CorrelationEstimate,
    pub cvtv: CorrelationEstimate,
    pub var_first: VarianceEstimate,
    pub var_second: VarianceEstimate,
    pub var_displacement: VarianceEstimate,
}

/// Combine per-replica observations `(first, second, displacement)` into a
/// [`TwoTimeResult`].
pub fn two_point_summary(triples: &[CvtvTriple], same_point: bool, seed: u64) -> Result<TwoTimeResult> {
    let first: Vec<f64> = triples.iter().map(|t| t.first).collect();
    let second: Vec<f64> = triples.iter().map(|t| t.second).collect();
    let disp: Vec<f64> = triples.iter().map(|t| t.displacement).collect();
    let direct = if same_point {
        CorrelationEstimate {
            value: 1.0,
            stderr: 0.0,
            n: triples.len() as u64,
        }
    } else {
        corr_direct_jackknife(&first, &second)?
    };
    let cvtv = cvtv_estimate(triples, DEFAULT_RESAMPLES, seed)?;
    Ok(TwoTimeResult {
        direct,
        cvtv,
        var_first: VarianceEstimate::from_samples(&first)?,
        var_second: VarianceEstimate::from_samples(&second)?,
        var_displacement: VarianceEstimate::from_samples(&disp)?,
    })
}

impl TwoTimeResult {
    /// Distance between the direct and covariance-to-variance estimates in
    /// units of their combined standard error.
    pub fn agreement_z(&self) -> f64 {
        let se = self.direct.stderr.hypot(self.cvtv.stderr);
        let diff = (self.direct.value - self.cvtv.value).abs();
        if se > 0.0 {
            diff / se
        } else if diff < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}
