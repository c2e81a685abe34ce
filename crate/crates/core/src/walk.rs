//! The adapted walk `X_t` with state- and time-dependent increment laws, its
//! checkpointed trajectory, and the first-passage / last-exit functionals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng;
use crate::tails::TailLaw;

/// Largest double strictly below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Piecewise-constant table for the probability of an upward step.
///
/// Rows are indexed by time bucket, columns by state bucket; a value `v`
/// falls in bucket `i` where `i` counts the breakpoints `<= v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleTable {
    #[serde(default)]
    pub time_breaks: Vec<u64>,
    #[serde(default)]
    pub state_breaks: Vec<f64>,
    pub probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PosProb {
    Constant(f64),
    Table(RuleTable),
}

impl Default for PosProb {
    fn default() -> Self {
        PosProb::Constant(0.5)
    }
}

impl PosProb {
    #[inline]
    pub fn at(&self, t: u64, x: f64) -> f64 {
        match self {
            PosProb::Constant(p) => *p,
            PosProb::Table(tab) => {
                let row = tab.time_breaks.partition_point(|&b| b <= t);
                let col = tab.state_breaks.partition_point(|&b| b <= x);
                tab.probs[row][col]
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            PosProb::Constant(p) => vec![*p],
            PosProb::Table(tab) => tab.probs.iter().flatten().copied().collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values().into_iter().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values().into_iter().fold(1.0, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if let PosProb::Table(tab) = self {
            if tab.probs.len() != tab.time_breaks.len() + 1 {
                return Err(domain("rule table needs one row per time bucket"));
            }
            if tab.probs.iter().any(|r| r.len() != tab.state_breaks.len() + 1) {
                return Err(domain("rule table needs one column per state bucket"));
            }
            if tab.time_breaks.windows(2).any(|w| w[0] >= w[1])
                || tab.state_breaks.windows(2).any(|w| !(w[0] < w[1]))
            {
                return Err(domain("rule table breakpoints must be strictly increasing"));
            }
            // A finite table with entries in (0,1) is bounded away from 0 and 1
            // uniformly in t and x.
            if tab.probs.iter().flatten().any(|p| !(*p > 0.0 && *p < 1.0)) {
                return Err(domain("rule table entries must lie strictly inside (0,1)"));
            }
        }
        if self.values().iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(domain("p_pos must lie in [0,1]"));
        }
        Ok(())
    }
}

/// Law of the increment `Δ_t = Δ_t^+ - Δ_t^-`, plus a deterministic shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementLaw {
    pub pos: TailLaw,
    pub neg: TailLaw,
    #[serde(default)]
    pub p_pos: PosProb,
    #[serde(default)]
    pub drift_shift: f64,
}

impl IncrementLaw {
    pub fn new(pos: TailLaw, neg: TailLaw, p_pos: f64) -> Self {
        IncrementLaw { pos, neg, p_pos: PosProb::Constant(p_pos), drift_shift: 0.0 }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.drift_shift = shift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pos.validate()?;
        self.neg.validate()?;
        self.p_pos.validate()?;
        if !self.drift_shift.is_finite() {
            return Err(domain("drift_shift must be finite"));
        }
        Ok(())
    }

    /// One increment from a single uniform `u`.
    ///
    /// `u` first selects the sign (`u < p_pos` is an upward step) and is then
    /// rescaled onto `[0,1)` within the chosen branch to drive the magnitude
    /// quantile, so each step consumes exactly one variate.
    #[inline]
    pub fn step(&self, t: u64, x: f64, u: f64) -> f64 {
        self.signed_magnitude(t, x, u, false) + self.drift_shift
    }

    /// As [`step`](Self::step) with the magnitude rounded up to an integer.
    #[inline]
    pub fn step_integer(&self, t: u64, x: f64, u: f64) -> f64 {
        self.signed_magnitude(t, x, u, true) + self.drift_shift
    }

    #[inline]
    fn signed_magnitude(&self, t: u64, x: f64, u: f64, integer: bool) -> f64 {
        let p = self.p_pos.at(t, x);
        let round = |m: f64| if integer { m.ceil() } else { m };
        if u < p {
            round(self.pos.quantile((u / p).min(BELOW_ONE)))
        } else {
            -round(self.neg.quantile(((u - p) / (1.0 - p)).min(BELOW_ONE)))
        }
    }

    /// Draw an increment from `rng`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, t: u64, x: f64, rng: &mut R) -> f64 {
        self.step(t, x, rng.random::<f64>())
    }

    /// Least upper bound on a single increment (`+inf` for heavy upward tails).
    pub fn sup_increment(&self) -> f64 {
        let up = if self.p_pos.max() > 0.0 { self.pos.sup().max(0.0) } else { 0.0 };
        up + self.drift_shift
    }
}

/// Checkpoint times `0, 1, 2, 4, ..., 2^k <= horizon`, plus `horizon`.
pub fn checkpoint_times(horizon: u64) -> Vec<u64> {
    let mut times = vec![0];
    let mut t = 1u64;
    while t <= horizon {
        times.push(t);
        match t.checked_mul(2) {
            Some(n) => t = n,
            None => break,
        }
    }
    if *times.last().unwrap() != horizon {
        times.push(horizon);
    }
    times
}

/// Path summary at the checkpoints only; memory is `O(log T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<u64>,
    pub values: Vec<f64>,
    pub run_min: Vec<f64>,
    pub run_max: Vec<f64>,
    /// Running maximum of `Δ_s^+` over `s < t`.
    pub max_inc: Vec<f64>,
    /// Running sum of `Δ_s^+` over `s < t`.
    pub up_sum: Vec<f64>,
    pub horizon: u64,
}

impl Trajectory {
    /// Trajectory of a full path given as `path[t] = X_t`.
    pub fn from_path(path: &[f64]) -> Self {
        assert!(!path.is_empty(), "path must contain X_0");
        let horizon = path.len() as u64 - 1;
        let mut rec = PathRecorder::new(horizon, &[]);
        rec.start(path[0]);
        for (t, w) in path.windows(2).enumerate() {
            rec.advance(t as u64 + 1, w[1], w[1] - w[0]);
        }
        rec.finish().0
    }

    /// Trajectory of the deterministic path `X_t = f(t)` sampled at the
    /// checkpoints; extremes and increments are taken over checkpoints only.
    pub fn from_fn(horizon: u64, f: impl Fn(u64) -> f64) -> Self {
        let times = checkpoint_times(horizon);
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let mut run_min = Vec::with_capacity(values.len());
        let mut run_max = Vec::with_capacity(values.len());
        let mut max_inc = Vec::with_capacity(values.len());
        let mut up_sum = Vec::with_capacity(values.len());
        let (mut lo, mut hi, mut mi, mut us) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0);
        for (i, &v) in values.iter().enumerate() {
            lo = lo.min(v);
            hi = hi.max(v);
            if i > 0 {
                let d = (v - values[i - 1]).max(0.0);
                mi = mi.max(d);
                us += d;
            }
            run_min.push(lo);
            run_max.push(hi);
            max_inc.push(mi);
            up_sum.push(us);
        }
        Trajectory { times, values, run_min, run_max, max_inc, up_sum, horizon }
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn max_abs(&self) -> f64 {
        let hi = self.run_max.last().copied().unwrap_or(0.0);
        let lo = self.run_min.last().copied().unwrap_or(0.0);
        hi.max(-lo)
    }

    /// Multiply every value by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| x * c).collect();
        Trajectory {
            times: self.times.clone(),
            values: s(&self.values),
            run_min: s(&self.run_min),
            run_max: s(&self.run_max),
            max_inc: s(&self.max_inc),
            up_sum: s(&self.up_sum),
            horizon: self.horizon,
        }
    }
}

/// `τ_x`: first time at or above a level, or censored at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Passage {
    Hit(u64),
    Censored(u64),
}

impl Passage {
    pub fn time(&self) -> u64 {
        match *self {
            Passage::Hit(t) | Passage::Censored(t) => t,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, Passage::Censored(_))
    }
}

/// `λ_x`: last time at or below a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LastExit {
    Exit(u64),
    /// Still at or below the level at the horizon; the true `λ_x` may be later.
    Unresolved(u64),
    /// Never at or below the level, not even at time 0.
    Never,
}

impl LastExit {
    pub fn time(&self) -> Option<u64> {
        match *self {
            LastExit::Exit(t) | LastExit::Unresolved(t) => Some(t),
            LastExit::Never => None,
        }
    }

    pub fn is_unresolved(&self) -> bool {
        matches!(self, LastExit::Unresolved(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: f64,
    pub tau: Passage,
    pub lambda: LastExit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingRecord {
    pub horizon: u64,
    pub levels: Vec<LevelRecord>,
}

impl StoppingRecord {
    pub fn tau(&self, level: f64) -> Option<Passage> {
        self.levels.iter().find(|r| r.level == level).map(|r| r.tau)
    }

    pub fn lambda(&self, level: f64) -> Option<LastExit> {
        self.levels.iter().find(|r| r.level == level).map(|r| r.lambda)
    }
}

/// Single-pass accumulator for checkpoints and stopping functionals.
pub(crate) struct PathRecorder {
    horizon: u64,
    times: Vec<u64>,
    next: usize,
    x: f64,
    lo: f64,
    hi: f64,
    max_inc: f64,
    up_sum: f64,
    levels: Vec<f64>,
    first_at_or_above: Vec<Option<u64>>,
    last_at_or_below: Vec<Option<u64>>,
    traj: Trajectory,
}

impl PathRecorder {
    pub(crate) fn new(horizon: u64, levels: &[f64]) -> Self {
        let times = checkpoint_times(horizon);
        let cap = times.len();
        PathRecorder {
            horizon,
            next: 0,
            x: 0.0,
            lo: 0.0,
            hi: 0.0,
            max_inc: 0.0,
            up_sum: 0.0,
            levels: levels.to_vec(),
            first_at_or_above: vec![None; levels.len()],
            last_at_or_below: vec![None; levels.len()],
            traj: Trajectory {
                times: times.clone(),
                values: Vec::with_capacity(cap),
                run_min: Vec::with_capacity(cap),
                run_max: Vec::with_capacity(cap),
                max_inc: Vec::with_capacity(cap),
                up_sum: Vec::with_capacity(cap),
                horizon,
            },
            times,
        }
    }

    pub(crate) fn start(&mut self, x0: f64) {
        self.x = x0;
        self.lo = x0;
        self.hi = x0;
        self.observe_levels(0);
        self.maybe_checkpoint(0);
    }

    /// Record `X_t = x` reached by increment `delta`.
    #[inline]
    pub(crate) fn advance(&mut self, t: u64, x: f64, delta: f64) {
        self.x = x;
        if x < self.lo {
            self.lo = x;
        }
        if x > self.hi {
            self.hi = x;
        }
        if delta > 0.0 {
            self.up_sum += delta;
            if delta > self.max_inc {
                self.max_inc = delta;
            }
        }
        self.observe_levels(t);
        self.maybe_checkpoint(t);
    }

    #[inline]
    fn observe_levels(&mut self, t: u64) {
        let x = self.x;
        for (i, &level) in self.levels.iter().enumerate() {
            if x >= level && self.first_at_or_above[i].is_none() {
                self.first_at_or_above[i] = Some(t);
            }
            if x <= level {
                self.last_at_or_below[i] = Some(t);
            }
        }
    }

    #[inline]
    fn maybe_checkpoint(&mut self, t: u64) {
        if self.next < self.times.len() && self.times[self.next] == t {
            self.traj.values.push(self.x);
            self.traj.run_min.push(self.lo);
            self.traj.run_max.push(self.hi);
            self.traj.max_inc.push(self.max_inc);
            self.traj.up_sum.push(self.up_sum);
            self.next += 1;
        }
    }

    pub(crate) fn finish(self) -> (Trajectory, StoppingRecord) {
        let horizon = self.horizon;
        let x_final = self.x;
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, &level)| LevelRecord {
                level,
                tau: match self.first_at_or_above[i] {
                    Some(t) => Passage::Hit(t),
                    None => Passage::Censored(horizon),
                },
                lambda: if x_final <= level {
                    LastExit::Unresolved(horizon)
                } else {
                    match self.last_at_or_below[i] {
                        Some(t) => LastExit::Exit(t),
                        None => LastExit::Never,
                    }
                },
            })
            .collect();
        (self.traj, StoppingRecord { horizon, levels })
    }
}

pub(crate) fn check_finite(t: u64, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { t, detail: format!("X_t = {x}") })
    }
}

/// Simulate `X_0 = 0, X_1, ..., X_T` and record checkpoints plus `τ_x` and
/// `λ_x` for every requested level in one pass.
pub fn simulate_walk(
    law: &IncrementLaw,
    horizon: u64,
    seed: u64,
    levels: &[f64],
) -> Result<(Trajectory, StoppingRecord)> {
    if horizon < 1 {
        return Err(domain("horizon must be at least 1"));
    }
    if levels.iter().any(|l| !l.is_finite()) {
        return Err(domain("levels must be finite"));
    }
    let mut rng = rng::stream(seed);
    let mut rec = PathRecorder::new(horizon, levels);
    rec.start(0.0);
    let mut x = 0.0;
    for t in 0..horizon {
        let delta = law.draw(t, x, &mut rng);
        x += delta;
        check_finite(t + 1, x)?;
        rec.advance(t + 1, x, delta);
    }
    Ok(rec.finish())
}

/// `τ_x` alone, capped at `cap`.
///
/// Consumes the same stream as [`simulate_walk`] with the same seed, so the
/// result equals that run's `tau`. The run stops at the passage, or as soon
/// as the level is out of reach within the cap given the largest possible
/// single increment.
pub fn passage_time(law: &IncrementLaw, level: f64, cap: u64, seed: u64) -> Result<Passage> {
    if level <= 0.0 {
        return Ok(Passage::Hit(0));
    }
    let sup = law.sup_increment();
    let mut rng = rng::stream(seed);
    let mut x = 0.0;
    for t in 0..cap {
        x += law.draw(t, x, &mut rng);
        check_finite(t + 1, x)?;
        if x >= level {
            return Ok(Passage::Hit(t + 1));
        }
        if sup.is_finite() && x + sup * ((cap - t - 1) as f64) < level {
            return Ok(Passage::Censored(cap));
        }
    }
    Ok(Passage::Censored(cap))
}

/// `min{t : path[t] >= x}`, censored at the last index.
pub fn first_passage(path: &[f64], x: f64) -> Passage {
    let horizon = path.len().saturating_sub(1) as u64;
    if x <= 0.0 {
        return Passage::Hit(0);
    }
    match path.iter().position(|&v| v >= x) {
        Some(t) => Passage::Hit(t as u64),
        None => Passage::Censored(horizon),
    }
}

/// `max{t <= T : path[t] <= x}`, flagged when the path ends at or below `x`.
pub fn last_exit(path: &[f64], x: f64) -> LastExit {
    let horizon = path.len().saturating_sub(1) as u64;
    match path.iter().rposition(|&v| v <= x) {
        Some(t) if t as u64 == horizon => LastExit::Unresolved(horizon),
        Some(t) => LastExit::Exit(t as u64),
        None => LastExit::Never,
    }
}

/// Almost-sure growth envelopes for `X_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Envelope {
    /// `t^(1/θ) (log t)^((φ+2)/θ + ε)` for `θ < 1`;
    /// `t (log t)^((1+φ)^+ + 1 + ε)` for `θ = 1`.
    Upper { theta: f64, phi: f64, eps: f64 },
    /// `t^(1/α) (log t)^(-(1/α) - ε)`.
    Lower { alpha: f64, eps: f64 },
}

impl Envelope {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Envelope::Upper { theta, phi, eps } => {
                if !(theta > 0.0 && theta <= 1.0) || !phi.is_finite() || !(eps > 0.0) {
                    return Err(domain("upper envelope needs theta in (0,1], finite phi, eps > 0"));
                }
            }
            Envelope::Lower { alpha, eps } => {
                if !(alpha > 0.0 && alpha.is_finite()) || !(eps > 0.0) {
                    return Err(domain("lower envelope needs alpha > 0 and eps > 0"));
                }
            }
        }
        Ok(())
    }

    /// Natural log of the envelope at time `t > 1`.
    pub fn ln_bound(&self, t: f64) -> f64 {
        let (lt, llt) = (t.ln(), t.ln().ln());
        match *self {
            Envelope::Upper { theta, phi, eps } => {
                let power = if theta < 1.0 {
                    (phi + 2.0) / theta + eps
                } else {
                    (1.0 + phi).max(0.0) + 1.0 + eps
                };
                lt / theta + power * llt
            }
            Envelope::Lower { alpha, eps } => lt / alpha - (1.0 / alpha + eps) * llt,
        }
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.ln_bound(t).exp()
    }

    pub fn violated(&self, t: f64, x: f64) -> bool {
        match self {
            Envelope::Upper { .. } => x > 0.0 && x.ln() > self.ln_bound(t),
            Envelope::Lower { .. } => x <= 0.0 || x.ln() < self.ln_bound(t),
        }
    }
}

fn count_violations(times: &[u64], values: &[f64], env: &Envelope, burn_in: u64) -> Result<usize> {
    if burn_in < 3 {
        return Err(domain("burn_in must be at least 3 so that log log t is defined"));
    }
    env.validate()?;
    Ok(times
        .iter()
        .zip(values)
        .filter(|(&t, &x)| t >= burn_in && env.violated(t as f64, x))
        .count())
}

/// Checkpoints `t >= burn_in` at which `X_t` breaks the envelope.
pub fn envelope_check(traj: &Trajectory, env: &Envelope, burn_in: u64) -> Result<usize> {
    count_violations(&traj.times, &traj.values, env, burn_in)
}

/// Checkpoints at which `max_{s<t} Δ_s^+` falls below
/// `t^(1/α) (log t)^(-(1/α) - ε)`.
pub fn max_increment_envelope(traj: &Trajectory, alpha: f64, eps: f64, burn_in: u64) -> Result<usize> {
    count_violations(&traj.times, &traj.max_inc, &Envelope::Lower { alpha, eps }, burn_in)
}
