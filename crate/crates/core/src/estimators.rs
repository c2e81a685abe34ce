//! Exponent estimates and moment-finiteness diagnostics from simulated
//! samples and trajectories.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{domain, Error, Result};
use crate::rng::{self, tag};
use crate::walk::Trajectory;

pub const BOOTSTRAP_RESAMPLES: usize = 500;
pub const MIN_SURVIVAL_EVENTS: usize = 100;
pub const MIN_MOMENT_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Hill,
    LoglogSlope,
    SurvivalSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub point: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub method: Method,
    pub n_effective: usize,
}

impl ExponentEstimate {
    fn new(point: f64, lo: f64, hi: f64, method: Method, n_effective: usize) -> Self {
        // percentile intervals need not straddle the point on skewed data
        ExponentEstimate { point, ci_lo: lo.min(point), ci_hi: hi.max(point), method, n_effective }
    }

    pub fn covers(&self, x: f64) -> bool {
        self.ci_lo <= x && x <= self.ci_hi
    }
}

/// `⌊n^0.6⌋`.
pub fn default_hill_k(n: usize) -> usize {
    (n as f64).powf(0.6).floor() as usize
}

/// Hill statistic on a scratch buffer; reorders `buf`.
fn hill_point(buf: &mut [f64], k: usize) -> f64 {
    let n = buf.len();
    // buf[n-k-1] becomes the (k+1)-th largest, with the k largest after it
    let (_, &mut threshold, top) = buf.select_nth_unstable_by(n - k - 1, |a, b| a.total_cmp(b));
    let ln_th = threshold.ln();
    let mean_excess = top.iter().map(|x| x.ln() - ln_th).sum::<f64>() / k as f64;
    1.0 / mean_excess
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Hill estimate of the tail exponent from the `k` largest observations,
/// with a 95% percentile bootstrap interval.
pub fn hill_estimate(samples: &[f64], k: usize) -> Result<ExponentEstimate> {
    let n = samples.len();
    if k < 10 || k >= n {
        return Err(domain(format!("Hill needs 10 <= k < n, got k = {k}, n = {n}")));
    }
    if samples.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(domain("Hill samples must be positive and finite"));
    }
    let mut buf = samples.to_vec();
    buf.sort_unstable_by(|a, b| a.total_cmp(b));
    let distinct = 1 + buf.windows(2).filter(|w| w[0] != w[1]).count();
    if distinct < k + 1 {
        return Err(Error::Degenerate(format!("{distinct} distinct values, need at least k + 1 = {}", k + 1)));
    }
    let point = hill_point(&mut buf, k);

    let base = rng::derive_seed(rng::hash_f64s(samples), &[tag::BOOTSTRAP, k as u64]);
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |scratch, b| {
                let mut r = rng::stream(rng::derive_seed(base, &[b]));
                for s in scratch.iter_mut() {
                    *s = samples[r.random_range(0..n)];
                }
                hill_point(scratch, k)
            },
        )
        .collect();
    // a resample with a tied top block gives +inf; it sorts last
    boot.sort_unstable_by(|a, b| a.total_cmp(b));
    Ok(ExponentEstimate::new(point, percentile(&boot, 0.025), percentile(&boot, 0.975), Method::Hill, k))
}

/// Censored Hill estimate: right-censored observations stay in the top-`k`
/// block, contributing their log-excess but not an event. This is the
/// Pareto maximum-likelihood estimate above the threshold and removes the
/// truncation bias of discarding capped samples.
pub fn hill_estimate_censored(samples: &[Obs], k: usize) -> Result<ExponentEstimate> {
    let n = samples.len();
    if k < 10 || k >= n {
        return Err(domain(format!("Hill needs 10 <= k < n, got k = {k}, n = {n}")));
    }
    if samples.iter().any(|o| !(o.value > 0.0 && o.value.is_finite())) {
        return Err(domain("Hill samples must be positive and finite"));
    }
    let point_of = |buf: &mut [Obs]| -> f64 {
        let (_, &mut th, top) = buf.select_nth_unstable_by(n - k - 1, |a, b| a.value.total_cmp(&b.value));
        let ln_th = th.value.ln();
        let events = top.iter().filter(|o| !o.censored).count() as f64;
        events / top.iter().map(|o| o.value.ln() - ln_th).sum::<f64>()
    };
    let mut buf = samples.to_vec();
    buf.sort_unstable_by(|a, b| a.value.total_cmp(&b.value));
    let distinct = 1 + buf.windows(2).filter(|w| w[0].value != w[1].value).count();
    let events = buf[n - k..].iter().filter(|o| !o.censored).count();
    if distinct < k + 1 || events == 0 {
        return Err(Error::Degenerate(format!("{distinct} distinct values and {events} events in the top block")));
    }
    let point = point_of(&mut buf);
    let keys: Vec<f64> = samples.iter().map(|o| if o.censored { -o.value } else { o.value }).collect();
    let base = rng::derive_seed(rng::hash_f64s(&keys), &[tag::BOOTSTRAP, k as u64]);
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map_init(
            || samples.to_vec(),
            |scratch, b| {
                let mut r = rng::stream(rng::derive_seed(base, &[b]));
                for s in scratch.iter_mut() {
                    *s = samples[r.random_range(0..n)];
                }
                point_of(scratch)
            },
        )
        .collect();
    boot.sort_unstable_by(|a, b| a.total_cmp(b));
    Ok(ExponentEstimate::new(point, percentile(&boot, 0.025), percentile(&boot, 0.975), Method::Hill, k))
}

/// Which transform of the path enters the log-log regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `log max(X_t, 1)`.
    #[default]
    Positive,
    /// `log max(-X_t, 1)`.
    Negative,
    /// `log max(|X_t|, 1)`.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ols {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    n: usize,
}

fn ols(xs: &[f64], ys: &[f64]) -> Ols {
    let n = xs.len();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Ols { slope, intercept, slope_se, n }
}

fn t_interval(fit: &Ols) -> (f64, f64) {
    if fit.n <= 2 || !fit.slope_se.is_finite() {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let q = StudentsT::new(0.0, 1.0, (fit.n - 2) as f64).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::INFINITY);
    (fit.slope - q * fit.slope_se, fit.slope + q * fit.slope_se)
}

/// Least-squares slope of `log max(X_t, 1)` (per `side`) on `log t` over the
/// checkpoints `t >= burn_in`.
pub fn loglog_slope(traj: &Trajectory, burn_in: u64, side: Side) -> Result<ExponentEstimate> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &x) in traj.times.iter().zip(&traj.values) {
        if t < burn_in.max(1) {
            continue;
        }
        let v = match side {
            Side::Positive => x,
            Side::Negative => -x,
            Side::Absolute => x.abs(),
        };
        xs.push((t as f64).ln());
        ys.push(v.max(1.0).ln());
    }
    if xs.len() < 5 {
        return Err(domain(format!("log-log slope needs 5 checkpoints past burn-in, have {}", xs.len())));
    }
    let fit = ols(&xs, &ys);
    let (lo, hi) = t_interval(&fit);
    Ok(ExponentEstimate::new(fit.slope, lo, hi, Method::LoglogSlope, fit.n))
}

/// A possibly right-censored observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obs {
    pub value: f64,
    pub censored: bool,
}

impl Obs {
    pub fn exact(value: f64) -> Self {
        Obs { value, censored: false }
    }

    pub fn censored(value: f64) -> Self {
        Obs { value, censored: true }
    }
}

/// `m` points geometrically spaced from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && m >= 2);
    let r = (hi / lo).ln() / (m - 1) as f64;
    (0..m).map(|i| if i + 1 == m { hi } else { lo * (r * i as f64).exp() }).collect()
}

/// Geometric grid over the tail of the uncensored data: from `lo_quantile`
/// of the uncensored values up to the value with `top` uncensored
/// observations above it.
pub fn tail_grid(samples: &[Obs], lo_quantile: f64, top: usize, m: usize) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = samples.iter().filter(|o| !o.censored).map(|o| o.value).collect();
    if v.len() <= top + 1 {
        return Err(domain("not enough uncensored samples for a tail grid"));
    }
    v.sort_unstable_by(|a, b| a.total_cmp(b));
    let lo = percentile(&v, lo_quantile).max(f64::MIN_POSITIVE);
    let hi = v[v.len() - 1 - top];
    if !(hi > lo) {
        return Err(Error::Degenerate("tail grid has empty range".into()));
    }
    Ok(geometric_grid(lo, hi, m))
}

/// Kaplan–Meier survival `P[Z > t]` at each grid point; `sorted` by value.
fn kaplan_meier(sorted: &[Obs], grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut s = 1.0;
    let mut at_risk = sorted.len();
    let mut i = 0;
    for &g in grid {
        while i < sorted.len() && sorted[i].value <= g {
            let v = sorted[i].value;
            let mut deaths = 0;
            let mut leaving = 0;
            while i < sorted.len() && sorted[i].value == v {
                if !sorted[i].censored {
                    deaths += 1;
                }
                leaving += 1;
                i += 1;
            }
            if deaths > 0 {
                s *= 1.0 - deaths as f64 / at_risk as f64;
            }
            at_risk -= leaving;
        }
        out.push(s);
    }
    out
}

fn survival_fit(sorted: &[Obs], grid: &[f64]) -> Option<(Ols, Ols, Ols)> {
    let surv = kaplan_meier(sorted, grid);
    let pts: Vec<(f64, f64)> =
        grid.iter().zip(&surv).filter(|(_, &s)| s > 0.0).map(|(&g, &s)| (g.ln(), s.ln())).collect();
    if pts.len() < 4 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let h = xs.len() / 2;
    Some((ols(&xs, &ys), ols(&xs[..=h], &ys[..=h]), ols(&xs[h..], &ys[h..])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalFit {
    pub estimate: ExponentEstimate,
    /// The survival curve steepens without bound over the grid: the upper
    /// half slope is at least twice the lower half slope.
    pub all_moments_finite: bool,
    pub censored: usize,
}

/// Slope of the log Kaplan–Meier survival on `log t` over `grid`, with a
/// 95% percentile bootstrap interval.
pub fn survival_slope(samples: &[Obs], grid: &[f64]) -> Result<SurvivalFit> {
    let events = samples.iter().filter(|o| !o.censored).count();
    if events == 0 {
        return Err(Error::Degenerate("every sample is censored".into()));
    }
    if events < MIN_SURVIVAL_EVENTS {
        return Err(domain(format!("survival slope needs {MIN_SURVIVAL_EVENTS} uncensored samples, have {events}")));
    }
    if grid.len() < 4 || grid.windows(2).any(|w| !(w[0] < w[1])) || grid[0] <= 0.0 {
        return Err(domain("grid must hold at least 4 increasing positive points"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.value.total_cmp(&b.value));
    let (all, lower, upper) =
        survival_fit(&sorted, grid).ok_or_else(|| Error::Degenerate("survival vanishes on the grid".into()))?;

    let values: Vec<f64> = samples.iter().map(|o| if o.censored { -o.value } else { o.value }).collect();
    let base = rng::derive_seed(rng::hash_f64s(&values), &[tag::BOOTSTRAP, grid.len() as u64]);
    let n = samples.len();
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(rng::derive_seed(base, &[b]));
            let mut re: Vec<Obs> = (0..n).map(|_| samples[r.random_range(0..n)]).collect();
            re.sort_unstable_by(|a, b| a.value.total_cmp(&b.value));
            survival_fit(&re, grid).map_or(f64::NEG_INFINITY, |f| f.0.slope)
        })
        .collect();
    boot.sort_unstable_by(|a, b| a.total_cmp(b));
    let estimate =
        ExponentEstimate::new(all.slope, percentile(&boot, 0.025), percentile(&boot, 0.975), Method::SurvivalSlope, events);
    let all_moments_finite = lower.slope < 0.0 && upper.slope / lower.slope >= 2.0;
    Ok(SurvivalFit { estimate, all_moments_finite, censored: n - events })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentVerdict {
    Converging,
    Diverging,
    Inconclusive,
}

/// Running `p`-th sample moment over the prefixes `N/8, N/4, N/2, N`.
///
/// Converging when every doubling changes it by less than 10%; diverging
/// when it grows by more than 50% overall and the growth is carried by the
/// largest observations (the top `√N` terms hold more than half the sum).
pub fn moment_diagnostic(samples: &[f64], p: f64) -> MomentVerdict {
    if p == 0.0 {
        return MomentVerdict::Converging;
    }
    let n = samples.len();
    if n < MIN_MOMENT_SAMPLES || !(p > 0.0) {
        return MomentVerdict::Inconclusive;
    }
    let terms: Vec<f64> = samples.iter().map(|x| x.abs().powf(p)).collect();
    let prefixes = [n / 8, n / 4, n / 2, n];
    let mut moments = [0.0; 4];
    let mut acc = 0.0;
    let mut from = 0;
    for (m, &to) in moments.iter_mut().zip(&prefixes) {
        acc += terms[from..to].iter().sum::<f64>();
        from = to;
        *m = acc / to as f64;
    }
    if !acc.is_finite() {
        return MomentVerdict::Diverging;
    }
    if moments.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 0.10) {
        return MomentVerdict::Converging;
    }
    if moments[3] > 1.5 * moments[0] {
        let mut sorted = terms;
        let top = (n as f64).sqrt().ceil() as usize;
        let (_, _, upper) = sorted.select_nth_unstable_by(n - top - 1, |a, b| a.total_cmp(b));
        let top_sum: f64 = upper.iter().sum();
        if top_sum > 0.5 * acc {
            return MomentVerdict::Diverging;
        }
    }
    MomentVerdict::Inconclusive
}

/// As [`moment_diagnostic`], but `p` at the theoretical threshold
/// `critical` is always inconclusive: no finite sample separates the cases.
pub fn moment_diagnostic_near(samples: &[f64], p: f64, critical: f64) -> MomentVerdict {
    if (p - critical).abs() <= 1e-9 * critical.abs().max(1.0) {
        MomentVerdict::Inconclusive
    } else {
        moment_diagnostic(samples, p)
    }
}
