//! Stationary exponential last-passage percolation.
//!
//! Bulk weights are `Exp(1)`, the weights on the two axes are `Exp(1/2)` (mean
//! two) and `W(0,0) = 0`. Passage times are computed row by row with a single
//! rolling buffer, generating weights on the fly, so one sweep over the
//! largest grid yields `L(d,d)` for every requested diagonal of a replica.

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::rng::{self, StreamKey, StreamRng};
use crate::stats::{self, CorrelationEstimate, EmpiricalDistribution};
use crate::tasep::TasepState;

/// Mean of the boundary weights.
pub const BOUNDARY_MEAN: f64 = 2.0;

/// Weight of site `(i, j)` under the stationary boundary convention.
#[inline]
pub fn stationary_weight(rng: &mut StreamRng, i: usize, j: usize) -> f64 {
    match (i, j) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => rng::exponential(rng, BOUNDARY_MEAN),
        _ => rng::exponential(rng, 1.0),
    }
}

/// `L(d, d)` for each `d` in `diagonals`, in the order given, using
/// `weight(i, j)` for the weight array. Weights are requested in row-major
/// order over `0..=max × 0..=max`.
pub fn diagonal_passage_times<W>(diagonals: &[usize], mut weight: W) -> Vec<f64>
where
    W: FnMut(usize, usize) -> f64,
{
    let Some(&size) = diagonals.iter().max() else {
        return Vec::new();
    };
    let mut out = vec![0.0; diagonals.len()];
    let mut row = vec![0.0f64; size + 1];
    row[0] = weight(0, 0);
    for j in 1..=size {
        row[j] = row[j - 1] + weight(0, j);
    }
    let record = |i: usize, row: &[f64], out: &mut [f64]| {
        for (slot, &d) in diagonals.iter().enumerate() {
            if d == i {
                out[slot] = row[i];
            }
        }
    };
    record(0, &row, &mut out);
    for i in 1..=size {
        row[0] += weight(i, 0);
        let mut left = row[0];
        for (j, cell) in row.iter_mut().enumerate().skip(1) {
            left = weight(i, j) + left.max(*cell);
            *cell = left;
        }
        record(i, &row, &mut out);
    }
    out
}

/// Diagonal passage times of one replica drawn from `rng`.
pub fn random_diagonals(diagonals: &[usize], rng: &mut StreamRng) -> Vec<f64> {
    diagonal_passage_times(diagonals, |i, j| stationary_weight(rng, i, j))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LppConfig {
    pub n: usize,
    pub a: f64,
    pub replicas: usize,
}

impl LppConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if !(self.a >= 1.0) || !self.a.is_finite() {
            return Err(Error::param("a", format!("must be finite and >= 1, got {}", self.a)));
        }
        Ok(())
    }

    /// `⌊an⌋`.
    pub fn big(&self) -> usize {
        (self.a * self.n as f64).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LppReplicaResult {
    pub l_small: f64,
    pub l_big: f64,
}

/// `L(n,n)` and `L(⌊an⌋,⌊an⌋)` from one shared weight array.
pub fn lpp_diagonal_pair(cfg: &LppConfig, rng: &mut StreamRng) -> Result<LppReplicaResult> {
    cfg.validate()?;
    let v = random_diagonals(&[cfg.n, cfg.big()], rng);
    Ok(LppReplicaResult { l_small: v[0], l_big: v[1] })
}

/// Per-replica diagonal passage times, one row per replica in index order.
pub fn diagonal_ensemble(
    diagonals: &[usize],
    replicas: usize,
    key: StreamKey,
    ensemble: Ensemble,
) -> Vec<Vec<f64>> {
    ensemble.map(replicas, |r| random_diagonals(diagonals, &mut key.replica(r as u64).rng()))
}

/// Pearson correlation of `L(n,n)` and `L(⌊an⌋,⌊an⌋)` over replicas.
pub fn lpp_aging_corr(cfg: &LppConfig, key: StreamKey, ensemble: Ensemble) -> Result<CorrelationEstimate> {
    Ok(lpp_aging_curve(cfg.n, &[cfg.a], cfg.replicas, key, ensemble)?[0])
}

/// [`lpp_aging_corr`] for several `a` from one pass: every replica fills a
/// single grid up to the largest `⌊an⌋` and all diagonals are read off it.
pub fn lpp_aging_curve(
    n: usize,
    a_grid: &[f64],
    replicas: usize,
    key: StreamKey,
    ensemble: Ensemble,
) -> Result<Vec<CorrelationEstimate>> {
    let configs: Vec<LppConfig> = a_grid.iter().map(|&a| LppConfig { n, a, replicas }).collect();
    for cfg in &configs {
        cfg.validate()?;
    }
    if replicas < 100 {
        return Err(Error::param("replicas", format!("need at least 100, got {replicas}")));
    }
    let mut diagonals = vec![n];
    diagonals.extend(configs.iter().map(LppConfig::big).filter(|&m| m != n));
    let rows = if diagonals.len() > 1 {
        diagonal_ensemble(&diagonals, replicas, key, ensemble)
    } else {
        Vec::new()
    };
    let small: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let mut column = 0;
    configs
        .iter()
        .map(|cfg| {
            if cfg.big() == n {
                return Ok(CorrelationEstimate { value: 1.0, stderr: 0.0, n: replicas as u64 });
            }
            column += 1;
            let big: Vec<f64> = rows.iter().map(|r| r[column]).collect();
            stats::corr_direct_jackknife(&small, &big)
        })
        .collect()
}

/// Row increments `L(n1, j) - L(n1, j-1)` for `j = 1..=count`.
pub fn burke_increments(n1: usize, count: usize, rng: &mut StreamRng) -> Result<EmpiricalDistribution> {
    if n1 < 1 {
        return Err(Error::param("n1", "must be at least 1"));
    }
    if count < 1 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let mut row = vec![0.0f64; count + 1];
    for j in 1..=count {
        row[j] = row[j - 1] + stationary_weight(rng, 0, j);
    }
    for i in 1..=n1 {
        row[0] += stationary_weight(rng, i, 0);
        for j in 1..=count {
            row[j] = stationary_weight(rng, i, j) + row[j - 1].max(row[j]);
        }
    }
    EmpiricalDistribution::new(row.windows(2).map(|w| w[1] - w[0]).collect())
}

/// One line of the LPP/TASEP comparison: empirical `P[L(n,n) <= t]` and
/// `P[N_t(0) >= n]` with binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityRow {
    pub t: f64,
    pub p_lpp: f64,
    pub se_lpp: f64,
    pub p_tasep: f64,
    pub se_tasep: f64,
}

impl IdentityRow {
    /// `|p_lpp - p_tasep|` in units of the combined standard error.
    pub fn z_score(&self) -> f64 {
        let se = (self.se_lpp.powi(2) + self.se_tasep.powi(2)).sqrt();
        let diff = (self.p_lpp - self.p_tasep).abs();
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        }
    }
}

fn binomial(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Ring size used for the TASEP side of the identity check.
pub fn identity_ring_size(t_max: f64) -> usize {
    let l = (8.0 * t_max).ceil().max(64.0) as usize;
    l + l % 2
}

/// Two independent Monte Carlo columns for `P[L(n,n) <= t]` and
/// `P[N_t(0) >= n]`, the latter from stationary TASEP on a ring of
/// [`identity_ring_size`] sites.
pub fn lpp_tasep_identity_check(
    n: usize,
    t_grid: &[f64],
    replicas: usize,
    key: StreamKey,
    ensemble: Ensemble,
) -> Result<Vec<IdentityRow>> {
    if n < 1 || n > 10 {
        return Err(Error::param("n", format!("must be in 1..=10, got {n}")));
    }
    if replicas < 1 {
        return Err(Error::param("replicas", "must be at least 1"));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::param("t_grid", "times must be finite and nonnegative"));
    }
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]));
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let ring = identity_ring_size(t_max);

    let lpp_key = key.lane(0);
    let passage: Vec<f64> = ensemble.map(replicas, |r| random_diagonals(&[n], &mut lpp_key.replica(r as u64).rng())[0]);

    let tasep_key = key.lane(1);
    let crossed = ensemble.map(replicas, |r| -> Result<Vec<bool>> {
        let mut st = TasepState::stationary(ring, &[], tasep_key.replica(r as u64).rng())?;
        let mut hit = vec![false; t_grid.len()];
        for &idx in &order {
            st.evolve_until(t_grid[idx])?;
            hit[idx] = st.flux(0).unwrap_or(0) >= n as u64;
        }
        Ok(hit)
    });
    let crossed = crossed.into_iter().collect::<Result<Vec<_>>>()?;

    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            let (p_lpp, se_lpp) = binomial(passage.iter().filter(|&&l| l <= t).count(), replicas);
            let (p_tasep, se_tasep) = binomial(crossed.iter().filter(|h| h[idx]).count(), replicas);
            IdentityRow { t, p_lpp, se_lpp, p_tasep, se_tasep }
        })
        .collect())
}
