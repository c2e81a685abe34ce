//! Lyapunov functions of the drift lemmas and Monte Carlo estimates of their
//! one-step conditional drift.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::estimators::{ExponentEstimate, Method};
use crate::rng::{self, tag};
use crate::tails::TailLaw;
use crate::walk::{IncrementLaw, Trajectory};

/// Values of `W` are capped here; hits are counted.
pub const W_CAP: f64 = 1e9;
pub const MIN_DRIFT_SAMPLES: usize = 1_000;
/// Consecutive confirmed states that fix the region boundary `A`.
pub const STABLE_RUN: usize = 3;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LyapunovSpec {
    /// `1` for `y <= z`, `(1 + y - z)^{-δ}` above.
    FPowerDecay { z: f64, delta: f64 },
    /// `(y - x)^γ 1{x < y}`.
    WPower { y: f64, gamma: f64 },
    /// `h(x) = (x^+)^θ`, increasing and concave for `θ ∈ (0,1]`.
    ConcaveH { theta: f64 },
    Identity,
    /// `|x|^p`.
    Power { exponent: f64 },
}

impl LyapunovSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LyapunovSpec::FPowerDecay { z, delta } => z.is_finite() && delta > 0.0,
            LyapunovSpec::WPower { y, gamma } => y.is_finite() && gamma > 0.0,
            LyapunovSpec::ConcaveH { theta } => theta > 0.0 && theta <= 1.0,
            LyapunovSpec::Identity => true,
            LyapunovSpec::Power { exponent } => exponent > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(domain(format!("invalid Lyapunov parameters: {self:?}")))
        }
    }

    /// Distance from the state to the "far" end where the lemmas apply:
    /// `x - z` for `f`, `y - x` for `W`, `x` otherwise.
    pub fn depth(&self, x: f64) -> f64 {
        match *self {
            LyapunovSpec::FPowerDecay { z, .. } => x - z,
            LyapunovSpec::WPower { y, .. } => y - x,
            _ => x,
        }
    }
}

pub fn eval_lyapunov(spec: &LyapunovSpec, x: f64) -> f64 {
    match *spec {
        LyapunovSpec::FPowerDecay { z, delta } => {
            if x <= z {
                1.0
            } else {
                (1.0 + x - z).powf(-delta)
            }
        }
        LyapunovSpec::WPower { y, gamma } => {
            if x < y {
                (y - x).powf(gamma)
            } else {
                0.0
            }
        }
        LyapunovSpec::ConcaveH { theta } => x.max(0.0).powf(theta),
        LyapunovSpec::Identity => x,
        LyapunovSpec::Power { exponent } => x.abs().powf(exponent),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mean: f64,
    /// 95% normal-approximation half width.
    pub half_width: f64,
    pub n: usize,
    /// Samples whose `W` value was clipped at [`W_CAP`].
    pub cap_hits: usize,
}

/// Mean of `V(x + Δ) - V(x)` over `n` independent increments drawn at `x`.
pub fn drift_estimate(law: &IncrementLaw, spec: &LyapunovSpec, x: f64, n: usize, seed: u64) -> Result<DriftEstimate> {
    spec.validate()?;
    if n < MIN_DRIFT_SAMPLES {
        return Err(domain(format!("drift estimate needs at least {MIN_DRIFT_SAMPLES} samples, got {n}")));
    }
    let capped = matches!(spec, LyapunovSpec::WPower { .. });
    let clip = |v: f64, hits: &mut usize| {
        if capped && v > W_CAP {
            *hits += 1;
            W_CAP
        } else {
            v
        }
    };
    let mut hits = 0;
    let v0 = clip(eval_lyapunov(spec, x), &mut hits);
    let mut r = rng::stream(seed);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let next = x + law.step(0, x, r.random());
        let d = clip(eval_lyapunov(spec, next), &mut hits) - v0;
        let delta = d - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (d - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    Ok(DriftEstimate { mean, half_width: Z95 * (var / n as f64).sqrt(), n, cap_hits: hits })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftDirection {
    /// Drift `<= 0`.
    Supermartingale,
    /// Drift `>= 0`.
    Submartingale,
    /// Drift `<= -eps * V(x)^eta`.
    StrongDrift { eta: f64, eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AtMostZero,
    AtLeastZero,
    StrongDrift,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub grid: Vec<f64>,
    pub mean_drift: Vec<f64>,
    pub ci_half_width: Vec<f64>,
    pub n_samples: usize,
    pub verdicts: Vec<Verdict>,
    pub cap_hits: usize,
    /// Index of the first of [`STABLE_RUN`] consecutive confirmed states.
    pub region_start: Option<usize>,
}

impl DriftReport {
    /// Region boundary `A` as a depth (see [`LyapunovSpec::depth`]).
    pub fn region_state(&self) -> Option<f64> {
        self.region_start.map(|i| self.grid[i])
    }

    /// Every state from the detected boundary on is confirmed.
    pub fn confirmed_above_region(&self) -> bool {
        match self.region_start {
            Some(i) => self.verdicts[i..].iter().all(|&v| v != Verdict::Inconclusive),
            None => false,
        }
    }
}

fn verdict(direction: &DriftDirection, spec: &LyapunovSpec, x: f64, est: &DriftEstimate) -> Verdict {
    match *direction {
        DriftDirection::Supermartingale if est.mean + est.half_width <= 0.0 => Verdict::AtMostZero,
        DriftDirection::Submartingale if est.mean - est.half_width >= 0.0 => Verdict::AtLeastZero,
        DriftDirection::StrongDrift { eta, eps }
            if est.mean + est.half_width <= -eps * eval_lyapunov(spec, x).min(W_CAP).powf(eta) =>
        {
            Verdict::StrongDrift
        }
        _ => Verdict::Inconclusive,
    }
}

/// Estimate the drift at each grid state and check the lemma's sign.
///
/// States with `spec.depth(x) <= min_depth` lie outside the region the
/// lemma speaks about and are reported inconclusive without simulation.
/// The grid is read in order of increasing depth; the region boundary `A`
/// is the first run of [`STABLE_RUN`] confirmed states.
pub fn verify_drift_region(
    law: &IncrementLaw,
    spec: &LyapunovSpec,
    grid: &[f64],
    direction: DriftDirection,
    n: usize,
    seed: u64,
    min_depth: Option<f64>,
) -> Result<DriftReport> {
    if grid.is_empty() {
        return Err(domain("drift grid is empty"));
    }
    if let DriftDirection::StrongDrift { eta, eps } = direction {
        if !(eta > 0.0 && eps > 0.0) {
            return Err(domain("strong drift needs eta > 0 and eps > 0"));
        }
    }
    law.validate()?;
    spec.validate()?;
    let results: Vec<Option<DriftEstimate>> = grid
        .par_iter()
        .enumerate()
        .map(|(j, &x)| {
            if min_depth.is_some_and(|a| spec.depth(x) <= a) {
                return Ok(None);
            }
            drift_estimate(law, spec, x, n, rng::derive_seed(seed, &[tag::DRIFT, j as u64])).map(Some)
        })
        .collect::<Result<_>>()?;
    let verdicts: Vec<Verdict> = results
        .iter()
        .zip(grid)
        .map(|(r, &x)| r.as_ref().map_or(Verdict::Inconclusive, |e| verdict(&direction, spec, x, e)))
        .collect();
    let region_start = verdicts
        .windows(STABLE_RUN)
        .position(|w| w.iter().all(|&v| v != Verdict::Inconclusive));
    Ok(DriftReport {
        grid: grid.to_vec(),
        mean_drift: results.iter().map(|r| r.map_or(f64::NAN, |e| e.mean)).collect(),
        ci_half_width: results.iter().map(|r| r.map_or(f64::NAN, |e| e.half_width)).collect(),
        n_samples: n,
        verdicts,
        cap_hits: results.iter().flatten().map(|e| e.cap_hits).sum(),
        region_start,
    })
}

/// A lemma setting: increment law, Lyapunov function, grid and sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftScenario {
    pub law: IncrementLaw,
    pub spec: LyapunovSpec,
    pub grid: Vec<f64>,
    pub direction: DriftDirection,
}

impl DriftScenario {
    pub fn run(&self, n: usize, seed: u64) -> Result<DriftReport> {
        verify_drift_region(&self.law, &self.spec, &self.grid, self.direction, n, seed, None)
    }

    /// Supermartingale setting: Pareto(`alpha`) up-jumps, uniform `[0,1]`
    /// down-jumps (all moments, so any `beta > alpha`), `δ = (β - α)/2`.
    pub fn supermartingale(alpha: f64, beta: f64) -> Self {
        DriftScenario {
            law: IncrementLaw::new(TailLaw::pareto(alpha), TailLaw::BoundedUniform { bound: 1.0 }, 0.5),
            spec: LyapunovSpec::FPowerDecay { z: 0.0, delta: 0.5 * (beta - alpha) },
            grid: dyadic(0, 20),
            direction: DriftDirection::Supermartingale,
        }
    }

    /// Submartingale setting: uniform `[0,1]` up-jumps (all moments),
    /// Pareto(`beta`) down-jumps, `δ = 2(β - α)`.
    pub fn submartingale(alpha: f64, beta: f64) -> Self {
        DriftScenario {
            law: IncrementLaw::new(TailLaw::BoundedUniform { bound: 1.0 }, TailLaw::pareto(beta), 0.5),
            spec: LyapunovSpec::FPowerDecay { z: 0.0, delta: 2.0 * (beta - alpha) },
            grid: dyadic(0, 12),
            direction: DriftDirection::Submartingale,
        }
    }

    /// Strong-drift setting for `W = (-x)^γ 1{x < 0}`: the supermartingale
    /// law, `η = (1 - α/β)/2`, `θ = 1/(β(1-η) + 1 - α)`, `γ = θβ`.
    pub fn strong_drift(alpha: f64, beta: f64, eps: f64) -> Self {
        let eta = 0.5 * (1.0 - alpha / beta);
        let theta = 1.0 / (beta * (1.0 - eta) + 1.0 - alpha);
        DriftScenario {
            law: IncrementLaw::new(TailLaw::pareto(alpha), TailLaw::BoundedUniform { bound: 1.0 }, 0.5),
            spec: LyapunovSpec::WPower { y: 0.0, gamma: theta * beta },
            grid: dyadic(0, 20).into_iter().map(|x| -x).collect(),
            direction: DriftDirection::StrongDrift { eta, eps },
        }
    }
}

/// `2^lo, ..., 2^hi`.
pub fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(j)).collect()
}

/// One realization of `(max_{s<=ν} Z_s, ν, Z_0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxSample {
    pub max_z: f64,
    pub nu: f64,
    pub z0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxInequalityRow {
    pub x: f64,
    pub empirical: f64,
    pub bound: f64,
    pub std_err: f64,
    pub pass: bool,
}

/// Compare `P[max_{s<=ν} Z_s >= x]` against `(B E[ν] + E[Z_0]) / x`
/// allowing three binomial standard errors.
pub fn maximal_inequality_check(samples: &[MaxSample], b: f64, x_grid: &[f64]) -> Result<Vec<MaxInequalityRow>> {
    if samples.is_empty() {
        return Err(domain("no samples"));
    }
    if x_grid.iter().any(|&x| !(x > 0.0)) {
        return Err(domain("x must be positive"));
    }
    let n = samples.len() as f64;
    let mean_nu = samples.iter().map(|s| s.nu).sum::<f64>() / n;
    let mean_z0 = samples.iter().map(|s| s.z0).sum::<f64>() / n;
    Ok(x_grid
        .iter()
        .map(|&x| {
            let p = samples.iter().filter(|s| s.max_z >= x).count() as f64 / n;
            let bound = (b * mean_nu + mean_z0) / x;
            // the standard error uses the bound itself so a zero count still
            // gets a sensible allowance
            let q = bound.min(1.0).max(p);
            let std_err = (q * (1.0 - q) / n).sqrt();
            MaxInequalityRow { x, empirical: p, bound, std_err, pass: p <= bound + 3.0 * std_err }
        })
        .collect())
}

/// Samples of `Z_t = h(Σ_{s<t} Δ_s^+)` with `h(x) = x^θ`, stopped at an
/// independent geometric(`p`) time `ν >= 1`. Subadditivity of `h` bounds the
/// drift of `Z` by `B = E[h(Δ^+)]`.
pub fn concave_sum_maxima(up: &TailLaw, theta: f64, p: f64, replicas: usize, seed: u64) -> Result<Vec<MaxSample>> {
    up.validate()?;
    if !(theta > 0.0 && theta <= 1.0) || !(p > 0.0 && p <= 1.0) {
        return Err(domain("need theta in (0,1] and p in (0,1]"));
    }
    Ok((0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(rng::replica_seed(seed, i));
            let mut y = 0.0;
            let mut nu = 0u64;
            loop {
                nu += 1;
                y += up.sample(r.random()).unwrap_or(0.0);
                if r.random::<f64>() < p {
                    break;
                }
            }
            // Z is non-decreasing, so its maximum is the final value
            MaxSample { max_z: y.powf(theta), nu: nu as f64, z0: 0.0 }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinDeviation {
    pub t_grid: Vec<u64>,
    /// Empirical `P[min_{s<=t} X_s <= -t^φ]`.
    pub probs: Vec<f64>,
    pub slope: Option<ExponentEstimate>,
    /// `1 - βφ + ε`.
    pub bound_slope: f64,
    pub outcome: CheckOutcome,
}

/// Fit the decay of `P[min_{s<=t} X_s <= -t^φ]` in `t` and compare the slope
/// to `1 - βφ + ε`.
///
/// When the law cannot move down by `t^φ` within `t` steps at any grid time
/// the probabilities vanish identically and the check passes without
/// simulation; zero observed events otherwise is inconclusive.
pub fn min_deviation_check(
    law: &IncrementLaw,
    beta: f64,
    phi: f64,
    eps: f64,
    t_grid: &[u64],
    replicas: usize,
    seed: u64,
) -> Result<MinDeviation> {
    if !(phi > 0.0) {
        return Err(domain(format!("phi must be positive, got {phi}")));
    }
    if !(beta > 0.0 && eps >= 0.0) {
        return Err(domain("need beta > 0 and eps >= 0"));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) || t_grid[0] == 0 {
        return Err(domain("t_grid must be positive and strictly increasing"));
    }
    law.validate()?;
    let bound_slope = 1.0 - beta * phi + eps;
    let step_down = if law.p_pos.min() < 1.0 { law.neg.sup() } else { 0.0 } - law.drift_shift;
    let reach = |t: u64| t as f64 * step_down.max(0.0);
    if t_grid.iter().all(|&t| reach(t) < (t as f64).powf(phi)) {
        return Ok(MinDeviation {
            t_grid: t_grid.to_vec(),
            probs: vec![0.0; t_grid.len()],
            slope: None,
            bound_slope,
            outcome: CheckOutcome::Pass,
        });
    }
    let horizon = *t_grid.last().unwrap();
    let thresholds: Vec<f64> = t_grid.iter().map(|&t| -(t as f64).powf(phi)).collect();
    let counts = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(rng::replica_seed(seed, i));
            let mut hit = vec![0usize; t_grid.len()];
            let (mut x, mut lo) = (0.0f64, 0.0f64);
            let mut j = 0;
            for t in 0..horizon {
                x += law.draw(t, x, &mut r);
                lo = lo.min(x);
                if t + 1 == t_grid[j] {
                    if lo <= thresholds[j] {
                        hit[j] = 1;
                    }
                    j += 1;
                }
            }
            hit
        })
        .reduce(|| vec![0; t_grid.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / replicas as f64).collect();
    let pts: Vec<(f64, f64)> =
        t_grid.iter().zip(&probs).filter(|(_, &p)| p > 0.0).map(|(&t, &p)| ((t as f64).ln(), p.ln())).collect();
    if pts.len() < 3 {
        return Ok(MinDeviation { t_grid: t_grid.to_vec(), probs, slope: None, bound_slope, outcome: CheckOutcome::Inconclusive });
    }
    let est = slope_estimate(&pts);
    let half = 0.5 * (est.ci_hi - est.ci_lo);
    let outcome = if est.point <= bound_slope + half { CheckOutcome::Pass } else { CheckOutcome::Fail };
    Ok(MinDeviation { t_grid: t_grid.to_vec(), probs, slope: Some(est), bound_slope, outcome })
}

fn slope_estimate(pts: &[(f64, f64)]) -> ExponentEstimate {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let q = StudentsT::new(0.0, 1.0, n - 2.0).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::INFINITY);
    ExponentEstimate { point: slope, ci_lo: slope - q * se, ci_hi: slope + q * se, method: Method::LoglogSlope, n_effective: pts.len() }
}

/// Count checkpoints `t >= burn_in` where `Σ_{s<t} Δ_s^+` exceeds
/// `h^{-1}(t (log t)^{1+ε})` for `h(x) = x^θ`.
pub fn concave_envelope_violations(traj: &Trajectory, theta: f64, eps: f64, burn_in: u64) -> Result<usize> {
    if !(theta > 0.0 && theta <= 1.0 && eps > 0.0) {
        return Err(domain("need theta in (0,1] and eps > 0"));
    }
    Ok(traj
        .times
        .iter()
        .zip(&traj.up_sum)
        .filter(|(&t, _)| t >= burn_in.max(3))
        .filter(|(&t, &s)| {
            let t = t as f64;
            let ln_bound = (t.ln() + (1.0 + eps) * t.ln().ln()) / theta;
            s > 0.0 && s.ln() > ln_bound
        })
        .count())
}
