//! Exact formulas: aging functions, Edwards–Wilkinson variances and
//! correlations, and the continuous-time random walk used as the exact
//! variance of the harmonic gradient interface.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::stats::corr_cvtv;

fn check_ratio(a: f64) -> Result<()> {
    if a.is_nan() || a < 1.0 {
        return Err(Error::param("a", format!("aging ratio must be >= 1, got {a}")));
    }
    Ok(())
}

/// `1 + a^p - (a-1)^p`, written so that the difference of the two powers
/// keeps full precision for large `a`.
fn aging_numerator(a: f64, p: f64) -> f64 {
    if a == 1.0 {
        return 2.0;
    }
    let gap = -a.powf(p) * (p * (-1.0 / a).ln_1p()).exp_m1();
    1.0 + gap
}

/// KPZ aging function `(1 + a^{2/3} - (a-1)^{2/3}) / (2 a^{1/3})`.
pub fn rho_kpz(a: f64) -> Result<f64> {
    check_ratio(a)?;
    Ok(aging_numerator(a, 2.0 / 3.0) / (2.0 * a.cbrt()))
}

/// Edwards–Wilkinson aging function `(1 + a^{1/2} - (a-1)^{1/2}) / (2 a^{1/4})`.
pub fn rho_ew(a: f64) -> Result<f64> {
    check_ratio(a)?;
    Ok(aging_numerator(a, 0.5) / (2.0 * a.powf(0.25)))
}

/// Two-time correlation of the stationary KPZ fixed point at the origin.
/// By 3:2:1 invariance it depends on `t/s` only.
pub fn kpz_fp_correlation(s: f64, t: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::param("s", format!("must be positive, got {s}")));
    }
    if !(t >= s) {
        return Err(Error::param("t", format!("must be >= s = {s}, got {t}")));
    }
    rho_kpz(t / s)
}

/// Heat kernel `exp(-x²/2t) / sqrt(2πt)`.
pub fn gauss_pdf(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    Ok((-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt())
}

/// Standard normal CDF.
pub fn gauss_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Variance of the stationary Edwards–Wilkinson solution at `(t, x)`,
/// i.e. `E_x|B_t|`. For `t > 0` this is `sqrt(t) r(1, x/sqrt(t))` with
/// `r(1, y) = |y|(2Φ(|y|) - 1) + 2 p(1, y)`; at `t = 0` it is `|x|`.
pub fn ew_variance(t: f64, x: f64) -> f64 {
    let ax = x.abs();
    if t <= 0.0 {
        return ax;
    }
    let rt = t.sqrt();
    let y = ax / rt;
    // |y|(2Φ(|y|) - 1) = |y| - |y| erfc(|y|/√2); splitting off |y| keeps the
    // time-dependent part accurate when |x| dominates.
    let excess = 2.0 * (-0.5 * y * y).exp() / (2.0 * PI).sqrt() - y * libm::erfc(y * FRAC_1_SQRT_2);
    ax + rt * excess
}

/// Arguments of the Edwards–Wilkinson two-point correlation
/// `Corr(U(a, x), U(b, y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwQuery {
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
}

/// Edwards–Wilkinson two-point correlation, through the covariance-to-variance
/// reduction applied to [`ew_variance`].
pub fn ew_correlation(q: EwQuery) -> Result<f64> {
    if !(q.a > 0.0) {
        return Err(Error::param("a", format!("must be positive, got {}", q.a)));
    }
    if !(q.b >= q.a) {
        return Err(Error::param("b", format!("must be >= a = {}, got {}", q.a, q.b)));
    }
    let va = ew_variance(q.a, q.x);
    let vb = ew_variance(q.b, q.y);
    let vd = ew_variance(q.b - q.a, q.y - q.x);
    Ok(corr_cvtv(va, vb, vd)?.clamp(-1.0, 1.0))
}

/// Time at which [`bessel_i`] switches from the power series to the
/// normalized backward recurrence.
pub const BESSEL_SERIES_LIMIT: f64 = 20.0;

/// Modified Bessel function of the first kind `I_|k|(t)` for `t >= 0`.
pub fn bessel_i(k: i64, t: f64) -> f64 {
    let k = k.unsigned_abs();
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if t <= BESSEL_SERIES_LIMIT {
        bessel_i_series(k, t)
    } else {
        bessel_i_scaled(k as i64, t) * t.exp()
    }
}

fn bessel_i_series(k: u64, t: f64) -> f64 {
    let half = 0.5 * t;
    let kf = k as f64;
    // (t/2)^k / k!, in log space for large orders
    let mut term = (kf * half.ln() - statrs::function::gamma::ln_gamma(kf + 1.0)).exp();
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut sum = term;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * (m + kf));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `exp(-t) I_|k|(t)`, the probability that a rate-one continuous-time
/// symmetric simple random walk sits at `k` at time `t`.
pub fn bessel_i_scaled(k: i64, t: f64) -> f64 {
    let k = k.unsigned_abs() as usize;
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let probs = walk_probabilities(t, k);
    probs.get(k).copied().unwrap_or(0.0)
}

/// Upper index beyond which the walk's mass at time `t` is below 1e-12
/// (Poisson tail of the jump count).
pub fn walk_truncation(t: f64) -> usize {
    (t + 12.0 * t.sqrt() + 20.0).ceil() as usize
}

/// `exp(-t) I_j(t)` for `j = 0..=max(min_len, truncation)` by Miller's
/// backward recurrence `I_{j-1} = I_{j+1} + (2j/t) I_j`, normalized with
/// `I_0 + 2 Σ_{j≥1} I_j = e^t`.
pub fn walk_probabilities(t: f64, min_len: usize) -> Vec<f64> {
    let len = walk_truncation(t).max(min_len) + 1;
    if t == 0.0 {
        let mut p = vec![0.0; len];
        p[0] = 1.0;
        return p;
    }
    let start = len + 30 + (10.0 * t.sqrt()) as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-280;
    for j in (1..=start).rev() {
        let next = vals[j + 1] + (2.0 * j as f64 / t) * vals[j];
        vals[j - 1] = next;
        if next > 1e250 {
            for v in vals[j - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals[1..].iter().sum::<f64>();
    vals.truncate(len);
    for v in vals.iter_mut() {
        *v /= norm;
    }
    vals
}

/// `E_k|X_t|` for the continuous-time simple symmetric random walk with
/// generator `½Δ`, i.e. `Σ_j |j| e^{-t} I_{j-k}(t)`.
pub fn rw_abs_expectation(t: f64, k: i64) -> f64 {
    if t <= 0.0 {
        return k.unsigned_abs() as f64;
    }
    let probs = walk_probabilities(t, 0);
    let mut sum = probs[0] * k.unsigned_abs() as f64;
    for (m, &p) in probs.iter().enumerate().skip(1) {
        let m = m as i64;
        sum += p * ((k + m).unsigned_abs() + (k - m).unsigned_abs()) as f64;
    }
    sum
}
