//! Visits to a distinguished set `C`: hitting times `σ_n`, excursion
//! durations `ν_n = σ_{n+1} - σ_n`, the visit count `N(t)`, and the growth
//! envelopes those quantities obey.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::walk::checkpoint_times;

/// Default `n` burn-in for the `σ_n` envelopes.
pub const SIGMA_BURN_IN: u64 = 100;
/// Default `t` burn-in for the `N(t)` envelopes.
pub const VISITS_BURN_IN: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    /// `σ_0 = 0 < σ_1 < ...`, all hitting times within the horizon.
    pub sigma: Vec<u64>,
    /// Completed excursion durations; `nu[n] = sigma[n+1] - sigma[n]`.
    pub nu: Vec<u64>,
    /// Elapsed length of the final, unfinished excursion (`T - σ_last`).
    pub open_tail: u64,
    /// `(t, N(t))` at the dyadic checkpoints.
    pub visits: Vec<(u64, u64)>,
    pub horizon: u64,
}

impl ExcursionRecord {
    /// `N(t) = max{n : σ_n <= t}`.
    pub fn visits_at(&self, t: u64) -> u64 {
        (self.sigma.partition_point(|&s| s <= t) as u64).saturating_sub(1)
    }
}

/// Streaming builder; feed membership `Y_t ∈ C` for `t = 0, 1, ..., T`.
#[derive(Debug, Clone)]
pub struct ExcursionTracker {
    horizon: u64,
    sigma: Vec<u64>,
    checkpoints: Vec<u64>,
    next: usize,
    visits: Vec<(u64, u64)>,
    last_t: Option<u64>,
}

impl ExcursionTracker {
    pub fn new(horizon: u64) -> Self {
        let checkpoints = checkpoint_times(horizon);
        ExcursionTracker {
            horizon,
            sigma: Vec::new(),
            visits: Vec::with_capacity(checkpoints.len()),
            checkpoints,
            next: 0,
            last_t: None,
        }
    }

    #[inline]
    pub fn observe(&mut self, t: u64, in_set: bool) -> Result<()> {
        match self.last_t {
            None if t != 0 => return Err(Error::Contract("membership must start at t = 0".into())),
            None if !in_set => {
                return Err(Error::Contract("the process must start inside the set (Y_0 ∈ C)".into()))
            }
            Some(prev) if t != prev + 1 => {
                return Err(Error::Contract(format!("membership times must be consecutive, got {t} after {prev}")))
            }
            _ => {}
        }
        self.last_t = Some(t);
        if in_set {
            self.sigma.push(t);
        }
        if self.next < self.checkpoints.len() && self.checkpoints[self.next] == t {
            self.visits.push((t, self.sigma.len() as u64 - 1));
            self.next += 1;
        }
        Ok(())
    }

    pub fn finish(self) -> ExcursionRecord {
        let nu = self.sigma.windows(2).map(|w| w[1] - w[0]).collect();
        let end = self.last_t.unwrap_or(0);
        let open_tail = end - self.sigma.last().copied().unwrap_or(0);
        ExcursionRecord { sigma: self.sigma, nu, open_tail, visits: self.visits, horizon: self.horizon }
    }
}

/// Build the record from a full membership stream `membership[t] = (Y_t ∈ C)`.
pub fn record_excursions(membership: &[bool]) -> Result<ExcursionRecord> {
    if membership.is_empty() {
        return Err(Error::Contract("membership stream is empty".into()));
    }
    let mut tracker = ExcursionTracker::new(membership.len() as u64 - 1);
    for (t, &m) in membership.iter().enumerate() {
        tracker.observe(t as u64, m)?;
    }
    Ok(tracker.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthViolations {
    pub upper: usize,
    pub lower: usize,
    /// Number of indices (or checkpoints) past the burn-in that were tested.
    pub checked: usize,
}

fn check_gamma(gamma: f64, eps: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(domain(format!("gamma must lie in (0,1], got {gamma}")));
    }
    if !(eps > 0.0) {
        return Err(domain("eps must be positive"));
    }
    Ok(())
}

/// Count `n >= burn_in` with `σ_n > n^(1/(γ∧1)+ε)` (upper) or
/// `σ_n < n^(1/γ-ε)` (lower).
pub fn sigma_growth_check(rec: &ExcursionRecord, gamma: f64, eps: f64, burn_in: u64) -> Result<GrowthViolations> {
    check_gamma(gamma, eps)?;
    let up_exp = 1.0 / gamma.min(1.0) + eps;
    let lo_exp = 1.0 / gamma - eps;
    let mut out = GrowthViolations { upper: 0, lower: 0, checked: 0 };
    for (n, &s) in rec.sigma.iter().enumerate().skip(burn_in.max(1) as usize) {
        let ln_n = (n as f64).ln();
        let ln_s = (s as f64).ln();
        out.checked += 1;
        if ln_s > up_exp * ln_n {
            out.upper += 1;
        }
        if ln_s < lo_exp * ln_n {
            out.lower += 1;
        }
    }
    Ok(out)
}

/// Count checkpoints `t >= burn_in` with `N(t) > t^(γ+ε)` (upper) or
/// `N(t) < t^((γ∧1)-ε)` (lower).
pub fn visits_growth_check(rec: &ExcursionRecord, gamma: f64, eps: f64, burn_in: u64) -> Result<GrowthViolations> {
    check_gamma(gamma, eps)?;
    let up_exp = gamma + eps;
    let lo_exp = gamma.min(1.0) - eps;
    let mut out = GrowthViolations { upper: 0, lower: 0, checked: 0 };
    for &(t, n) in rec.visits.iter().filter(|(t, _)| *t >= burn_in.max(2)) {
        let ln_t = (t as f64).ln();
        let ln_n = if n == 0 { f64::NEG_INFINITY } else { (n as f64).ln() };
        out.checked += 1;
        if ln_n > up_exp * ln_t {
            out.upper += 1;
        }
        if ln_n < lo_exp * ln_t {
            out.lower += 1;
        }
    }
    Ok(out)
}
