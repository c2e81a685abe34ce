//! Random walk on a strip: a Markov chain `U_t` on the line index set
//! (the induced chain) driving integer jumps of `V_t` whose law depends only
//! on whether `U_t = 0` (the boundary line) or not (the bulk).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::excursions::{ExcursionRecord, ExcursionTracker};
use crate::rng::{self, tag};
use crate::walk::{check_finite, IncrementLaw, PathRecorder, Trajectory};

/// Law of the induced chain `U_t` on `{0, 1, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InducedChainSpec {
    /// Finite strip `{0..k-1}` with an explicit transition matrix.
    FiniteErgodic { matrix: Vec<Vec<f64>> },
    /// Simple symmetric random walk on `Z^+`, pushed to 1 from 0.
    ReflectedSrw,
    /// Nearest-neighbour chain with drift `(1/2 - γ) σ² / x` for `x >= x_min`.
    Lamperti {
        gamma: f64,
        sigma2: f64,
        #[serde(default = "one")]
        x_min: u64,
    },
}

fn one() -> u64 {
    1
}

/// Recurrence class of the induced chain, as far as the phase diagram cares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recurrence {
    Positive,
    /// Null recurrent with `P[ν > t] = t^{-γ + o(1)}`.
    Null { gamma: f64 },
}

/// Nearest-neighbour chain realizing return-time tail exponent `gamma`.
pub fn build_lamperti(gamma: f64, sigma2: f64) -> Result<InducedChainSpec> {
    let spec = InducedChainSpec::Lamperti { gamma, sigma2, x_min: 1 };
    spec.validate()?;
    Ok(spec)
}

impl InducedChainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            InducedChainSpec::FiniteErgodic { matrix } => {
                let k = matrix.len();
                if k == 0 {
                    return Err(domain("transition matrix is empty"));
                }
                for (i, row) in matrix.iter().enumerate() {
                    if row.len() != k {
                        return Err(domain(format!("transition matrix row {i} has {} entries, expected {k}", row.len())));
                    }
                    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(domain(format!("transition matrix row {i} has entries outside [0,1]")));
                    }
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > 1e-9 {
                        return Err(domain(format!("transition matrix row {i} sums to {s}")));
                    }
                }
                if !irreducible(matrix) {
                    return Err(domain("transition matrix is not irreducible"));
                }
                Ok(())
            }
            InducedChainSpec::ReflectedSrw => Ok(()),
            InducedChainSpec::Lamperti { gamma, sigma2, .. } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return Err(domain(format!("gamma must lie in (0,1], got {gamma}")));
                }
                if !(*sigma2 > 0.0 && *sigma2 <= 1.0) {
                    return Err(domain(format!("sigma2 must lie in (0,1], got {sigma2}")));
                }
                Ok(())
            }
        }
    }

    pub fn recurrence(&self) -> Recurrence {
        match *self {
            InducedChainSpec::FiniteErgodic { .. } => Recurrence::Positive,
            InducedChainSpec::ReflectedSrw => Recurrence::Null { gamma: 0.5 },
            InducedChainSpec::Lamperti { gamma, .. } => Recurrence::Null { gamma },
        }
    }

    /// The `x_min` actually used: raised when `q(x)` would go negative.
    pub fn effective_x_min(&self) -> u64 {
        match *self {
            InducedChainSpec::Lamperti { gamma, x_min, .. } => {
                let c = (0.5 - gamma).abs();
                if x_min == 0 || (x_min as f64) < c {
                    c.ceil() as u64 + 1
                } else {
                    x_min
                }
            }
            _ => 0,
        }
    }

    /// `(p(x), q(x))`: probabilities of stepping up and down from `x`.
    pub fn up_down(&self, x: u64) -> (f64, f64) {
        match *self {
            InducedChainSpec::FiniteErgodic { .. } => (f64::NAN, f64::NAN),
            InducedChainSpec::ReflectedSrw => {
                if x == 0 {
                    (1.0, 0.0)
                } else {
                    (0.5, 0.5)
                }
            }
            InducedChainSpec::Lamperti { gamma, sigma2, .. } => {
                let h = 0.5 * sigma2;
                if x == 0 {
                    (sigma2, 0.0)
                } else if x >= self.effective_x_min() {
                    let d = (0.5 - gamma) / x as f64;
                    (h * (1.0 + d), h * (1.0 - d))
                } else {
                    (h, h)
                }
            }
        }
    }

    /// `U_{t+1}` given `U_t = x` and a uniform `u`.
    #[inline]
    pub fn step(&self, x: u64, u: f64) -> u64 {
        match self {
            InducedChainSpec::FiniteErgodic { matrix } => {
                let row = &matrix[x as usize];
                let mut acc = 0.0;
                for (j, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return j as u64;
                    }
                }
                // rounding slack: last state with positive mass
                row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64
            }
            _ => {
                let (p, q) = self.up_down(x);
                if u < p {
                    x + 1
                } else if u < p + q {
                    x - 1
                } else {
                    x
                }
            }
        }
    }
}

fn irreducible(matrix: &[Vec<f64>]) -> bool {
    let k = matrix.len();
    let reach = |from: usize, forward: bool| {
        let mut seen = vec![false; k];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(i) = stack.pop() {
            for j in 0..k {
                let p = if forward { matrix[i][j] } else { matrix[j][i] };
                if p > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(0, true) && reach(0, false)
}

/// The induced chain started from 0, as an iterator over `U_1, U_2, ...`.
#[derive(Debug, Clone)]
pub struct InducedChain<'a> {
    spec: &'a InducedChainSpec,
    state: u64,
    rng: ChaCha8Rng,
}

impl<'a> InducedChain<'a> {
    /// The chain for `seed`; uses the same stream as [`simulate_strip`].
    pub fn new(spec: &'a InducedChainSpec, seed: u64) -> Self {
        InducedChain { spec, state: 0, rng: rng::stream(rng::derive_seed(seed, &[tag::INDUCED])) }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    fn reset(&mut self) {
        self.state = 0;
    }
}

impl Iterator for InducedChain<'_> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        let u: f64 = self.rng.random();
        self.state = self.spec.step(self.state, u);
        Some(self.state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripKernel {
    pub induced: InducedChainSpec,
    pub boundary_jump: IncrementLaw,
    pub bulk_jump: IncrementLaw,
}

impl StripKernel {
    pub fn validate(&self) -> Result<()> {
        self.induced.validate()?;
        for (name, law) in [("boundary_jump", &self.boundary_jump), ("bulk_jump", &self.bulk_jump)] {
            law.validate()?;
            if law.drift_shift.fract() != 0.0 {
                return Err(domain(format!("{name}.drift_shift must be an integer for lattice jumps")));
            }
        }
        Ok(())
    }
}

/// Output of one strip replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripRun {
    pub trajectory: Trajectory,
    pub excursions: ExcursionRecord,
    /// `U_t = 0` at each checkpoint of `trajectory`.
    pub on_boundary: Vec<bool>,
}

/// Simulate `(U_t, V_t)` from `(0, 0)` up to `horizon`.
///
/// `U` and the `V`-jumps use separate streams, so the `U`-path is exactly the
/// path of [`InducedChain`] under the same seed.
pub fn simulate_strip(kernel: &StripKernel, horizon: u64, seed: u64) -> Result<StripRun> {
    kernel.validate()?;
    if horizon < 1 {
        return Err(domain("horizon must be at least 1"));
    }
    let mut chain = InducedChain::new(&kernel.induced, seed);
    let mut jumps = rng::stream(rng::derive_seed(seed, &[tag::JUMPS]));
    let mut rec = PathRecorder::new(horizon, &[]);
    let mut tracker = ExcursionTracker::new(horizon);
    let checkpoints = crate::walk::checkpoint_times(horizon);
    let mut on_boundary = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0;

    let mut u = 0u64;
    let mut v = 0.0f64;
    rec.start(v);
    tracker.observe(0, true)?;
    for t in 0..horizon {
        if next_cp < checkpoints.len() && checkpoints[next_cp] == t {
            on_boundary.push(u == 0);
            next_cp += 1;
        }
        let law = if u == 0 { &kernel.boundary_jump } else { &kernel.bulk_jump };
        let delta = law.step_integer(t, v, jumps.random());
        v += delta;
        check_finite(t + 1, v)?;
        u = chain.next().unwrap_or(0);
        rec.advance(t + 1, v, delta);
        tracker.observe(t + 1, u == 0)?;
    }
    on_boundary.push(u == 0);
    let (trajectory, _) = rec.finish();
    Ok(StripRun { trajectory, excursions: tracker.finish(), on_boundary })
}

/// Return times to 0 of the induced chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    /// Durations of the excursions that returned within the cap.
    pub durations: Vec<u64>,
    /// Excursions that reached the cap; excluded from `durations`.
    pub capped: usize,
}

/// Sample `n` excursions of the induced chain from 0, each capped at `cap`
/// steps; a capped excursion is counted and the chain restarted at 0.
pub fn sample_return_times(spec: &InducedChainSpec, n: usize, cap: u64, seed: u64) -> Result<ReturnSample> {
    spec.validate()?;
    if cap < 1 {
        return Err(domain("cap must be at least 1"));
    }
    let mut chain = InducedChain::new(spec, rng::derive_seed(seed, &[tag::RETURNS]));
    let mut durations = Vec::with_capacity(n);
    let mut capped = 0;
    for _ in 0..n {
        let mut len = 0u64;
        loop {
            len += 1;
            if chain.next() == Some(0) {
                durations.push(len);
                break;
            }
            if len >= cap {
                capped += 1;
                chain.reset();
                break;
            }
        }
    }
    Ok(ReturnSample { durations, capped })
}

/// Predicted long-run behaviour of `V_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// `V_t → +∞` with `log V_t / log t → slope`.
    BoundaryDominates { slope: f64 },
    /// `V_t → -∞` with `log |V_t| / log t → slope`.
    BulkDominates { slope: f64 },
    Unclassified,
}

impl Regime {
    pub fn slope(&self) -> Option<f64> {
        match *self {
            Regime::BoundaryDominates { slope } | Regime::BulkDominates { slope } => Some(slope),
            Regime::Unclassified => None,
        }
    }
}

/// Tail exponents of one side of a jump law; `+inf` when all moments exist.
fn side_exponents(law: &IncrementLaw) -> (f64, f64) {
    let up = if law.p_pos.max() > 0.0 { law.pos.tail_exponent() } else { f64::INFINITY };
    let dn = if law.p_pos.min() < 1.0 { law.neg.tail_exponent() } else { f64::INFINITY };
    (up, dn)
}

/// Which theorem, if any, applies to the kernel.
///
/// Works on tail exponents only: a moment of order `p` is finite exactly when
/// `p` is below the exponent, so "there is a `β` with the required moments"
/// becomes a strict inequality against the smallest relevant exponent. The
/// drift shift never enters.
pub fn classify_regime(kernel: &StripKernel) -> Regime {
    let (b_up, b_dn) = side_exponents(&kernel.boundary_jump);
    let (k_up, k_dn) = side_exponents(&kernel.bulk_jump);
    let b_up_exact = kernel.boundary_jump.pos.is_heavy() && kernel.boundary_jump.p_pos.max() > 0.0;
    let k_dn_exact = kernel.bulk_jump.neg.is_heavy() && kernel.bulk_jump.p_pos.min() < 1.0;
    classify_exponents(b_up_exact.then_some(b_up), b_dn, k_up, k_dn_exact.then_some(k_dn), kernel.induced.recurrence())
}

fn classify_exponents(
    alpha: Option<f64>,
    b_dn: f64,
    k_up: f64,
    beta_bulk: Option<f64>,
    rec: Recurrence,
) -> Regime {
    let k_dn = beta_bulk.unwrap_or(f64::INFINITY);
    // largest admissible β for the boundary-dominates theorems
    let beta_sup = b_dn.min(k_dn).min(k_up);
    match rec {
        Recurrence::Positive => match alpha {
            Some(a) if a > 0.0 && a < 1.0 && beta_sup > a => Regime::BoundaryDominates { slope: 1.0 / a },
            _ => Regime::Unclassified,
        },
        Recurrence::Null { gamma } => {
            if let Some(a) = alpha {
                if a > 0.0 && a < 1.0 && a < gamma * beta_sup.min(1.0) {
                    return Regime::BoundaryDominates { slope: gamma / a };
                }
            }
            if let Some(beta) = beta_bulk {
                let boundary_moment = alpha.unwrap_or(f64::INFINITY).min(b_dn).min(1.0);
                if gamma < 1.0 && beta > 0.0 && beta < 1.0 && k_up > beta && boundary_moment > gamma * beta {
                    return Regime::BulkDominates { slope: 1.0 / beta };
                }
            }
            Regime::Unclassified
        }
    }
}

/// Classification of the canonical kernel: boundary up-jumps with exponent
/// `alpha`, bulk down-jumps with exponent `beta`, everything else bounded.
pub fn classify_triple(alpha: f64, beta: f64, recurrence: Recurrence) -> Regime {
    classify_exponents(Some(alpha), f64::INFINITY, f64::INFINITY, Some(beta), recurrence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tails::TailLaw;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn two_line() -> InducedChainSpec {
        InducedChainSpec::FiniteErgodic { matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5]] }
    }

    fn kernel(induced: InducedChainSpec, boundary: IncrementLaw, bulk: IncrementLaw) -> StripKernel {
        StripKernel { induced, boundary_jump: boundary, bulk_jump: bulk }
    }

    fn up_only(alpha: f64) -> IncrementLaw {
        IncrementLaw::new(TailLaw::pareto(alpha), TailLaw::Zero, 1.0)
    }

    fn down_only(beta: f64) -> IncrementLaw {
        IncrementLaw::new(TailLaw::Zero, TailLaw::pareto(beta), 0.0)
    }

    fn bounded() -> IncrementLaw {
        IncrementLaw::new(TailLaw::BoundedUniform { bound: 1.0 }, TailLaw::BoundedUniform { bound: 1.0 }, 0.5)
    }

    #[test]
    fn lamperti_examples() {
        let sym = build_lamperti(0.5, 1.0).unwrap();
        for x in 1..50 {
            assert_eq!(sym.up_down(x), (0.5, 0.5));
        }
        let (p, q) = build_lamperti(0.25, 1.0).unwrap().up_down(10);
        assert!((p - q - 0.025).abs() < 1e-15);
        let (p, q) = build_lamperti(1.0, 1.0).unwrap().up_down(10);
        assert!((p - q + 0.05).abs() < 1e-15);
    }

    #[test]
    fn lamperti_moments_match_construction() {
        for &(gamma, s2) in &[(0.25, 1.0), (0.75, 0.6), (1.0, 0.3)] {
            let spec = build_lamperti(gamma, s2).unwrap();
            for x in 1..200u64 {
                let (p, q) = spec.up_down(x);
                assert!(p >= 0.0 && q >= 0.0 && p + q <= 1.0 + 1e-15);
                // second moment σ² exactly, drift (1/2-γ)σ²/x exactly
                assert!((p + q - s2).abs() < 1e-14);
                assert!((p - q - (0.5 - gamma) * s2 / x as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lamperti_x_min_is_raised_when_invalid() {
        let spec = InducedChainSpec::Lamperti { gamma: 1.0, sigma2: 1.0, x_min: 0 };
        assert_eq!(spec.effective_x_min(), 2);
        assert!(build_lamperti(0.0, 1.0).is_err());
        assert!(build_lamperti(0.5, 1.5).is_err());
    }

    #[test]
    fn finite_matrix_validation() {
        assert!(two_line().validate().is_ok());
        let bad_sum = InducedChainSpec::FiniteErgodic { matrix: vec![vec![0.5, 0.4], vec![0.5, 0.5]] };
        assert!(bad_sum.validate().is_err());
        let reducible = InducedChainSpec::FiniteErgodic { matrix: vec![vec![1.0, 0.0], vec![0.5, 0.5]] };
        assert!(reducible.validate().is_err());
    }

    #[test]
    fn induced_marginal_is_the_chain_itself() {
        let k = kernel(build_lamperti(0.5, 1.0).unwrap(), up_only(0.5), down_only(0.7));
        let horizon = 4096;
        let run = simulate_strip(&k, horizon, 11).unwrap();
        let alone: Vec<u64> = InducedChain::new(&k.induced, 11).take(horizon as usize).collect();
        let mut membership = vec![true];
        membership.extend(alone.iter().map(|&u| u == 0));
        let rec = crate::excursions::record_excursions(&membership).unwrap();
        assert_eq!(rec, run.excursions);
    }

    #[test]
    fn induced_occupation_chi_square() {
        // Occupation of a 3-state chain inside the strip against its
        // stationary law, pooled over replicas.
        let matrix = vec![vec![0.2, 0.5, 0.3], vec![0.4, 0.4, 0.2], vec![0.3, 0.3, 0.4]];
        let spec = InducedChainSpec::FiniteErgodic { matrix: matrix.clone() };
        let k = kernel(spec.clone(), up_only(0.5), down_only(2.0));
        // stationary law by power iteration
        let mut pi = vec![1.0 / 3.0; 3];
        for _ in 0..200 {
            pi = (0..3).map(|j| (0..3).map(|i| pi[i] * matrix[i][j]).sum()).collect();
        }
        // one sample per replica at a late time, so draws are independent
        let reps = 3000;
        let mut counts = [0f64; 3];
        for r in 0..reps {
            let mut chain = InducedChain::new(&k.induced, rng::replica_seed(5, r));
            let u = chain.nth(63).unwrap();
            counts[u as usize] += 1.0;
        }
        let stat: f64 = (0..3).map(|j| (counts[j] - reps as f64 * pi[j]).powi(2) / (reps as f64 * pi[j])).sum();
        let crit = ChiSquared::new(2.0).unwrap().inverse_cdf(0.95);
        assert!(stat < crit, "chi2 {stat} >= {crit}");
    }

    #[test]
    fn strip_jumps_are_integers_and_reproducible() {
        let k = kernel(two_line(), up_only(0.5), down_only(2.0).with_shift(-1.0));
        let a = simulate_strip(&k, 1000, 3).unwrap();
        let b = simulate_strip(&k, 1000, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.trajectory.values.iter().all(|v| v.fract() == 0.0));
        assert_eq!(a.on_boundary.len(), a.trajectory.times.len());
        assert!(a.on_boundary[0]);
    }

    #[test]
    fn fractional_shift_rejected() {
        let k = kernel(two_line(), up_only(0.5), down_only(2.0).with_shift(0.5));
        assert!(simulate_strip(&k, 10, 0).is_err());
    }

    #[test]
    fn return_times_of_reflected_srw() {
        let s = sample_return_times(&InducedChainSpec::ReflectedSrw, 2000, 1 << 20, 1).unwrap();
        assert_eq!(s.durations.len() + s.capped, 2000);
        // every excursion from 0 has even length >= 2
        assert!(s.durations.iter().all(|&d| d >= 2 && d % 2 == 0));
        // P[ν = 2] = 1/2
        let twos = s.durations.iter().filter(|&&d| d == 2).count() as f64 / 2000.0;
        assert!((twos - 0.5).abs() < 4.0 * (0.25f64 / 2000.0).sqrt());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_triple(0.5, 2.0, Recurrence::Positive), Regime::BoundaryDominates { slope: 2.0 });
        assert_eq!(
            classify_triple(0.2, 1.0, Recurrence::Null { gamma: 0.5 }),
            Regime::BoundaryDominates { slope: 0.5 / 0.2 }
        );
        // γβ = 0.4 < α = 0.45: the bulk theorem applies, the boundary one does not
        assert_eq!(classify_triple(0.45, 0.8, Recurrence::Null { gamma: 0.5 }), Regime::BulkDominates { slope: 1.25 });
        // equality boundary is left open
        assert_eq!(classify_triple(0.4, 0.8, Recurrence::Null { gamma: 0.5 }), Regime::Unclassified);
    }

    #[test]
    fn classification_from_kernels() {
        let k = kernel(two_line(), up_only(0.5), down_only(2.0));
        assert_eq!(classify_regime(&k), Regime::BoundaryDominates { slope: 2.0 });
        let k = kernel(InducedChainSpec::ReflectedSrw, up_only(0.2), bounded());
        assert_eq!(classify_regime(&k), Regime::BoundaryDominates { slope: 2.5 });
        let bulk = IncrementLaw::new(TailLaw::BoundedUniform { bound: 1.0 }, TailLaw::pareto(0.4), 0.5);
        let k = kernel(InducedChainSpec::ReflectedSrw, bounded(), bulk);
        assert_eq!(classify_regime(&k), Regime::BulkDominates { slope: 2.5 });
    }

    #[test]
    fn classification_ignores_drift_shift() {
        let base = kernel(build_lamperti(0.25, 1.0).unwrap(), up_only(0.6), down_only(0.5));
        let r0 = classify_regime(&base);
        for mu in [1.0, 10.0, 1e6] {
            let mut k = base.clone();
            k.bulk_jump.drift_shift = mu;
            assert_eq!(classify_regime(&k), r0);
        }
    }

    #[test]
    fn kernel_serde_round_trip() {
        let k = kernel(build_lamperti(0.75, 1.0).unwrap(), up_only(0.3), bounded());
        let s = serde_json::to_string(&k).unwrap();
        let back: StripKernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        let j = r#"{"induced":{"kind":"reflected-srw"},
                    "boundary_jump":{"pos":{"kind":"pareto","alpha":0.2},"neg":{"kind":"zero"},"p_pos":1.0},
                    "bulk_jump":{"pos":{"kind":"bounded-uniform","bound":1},"neg":{"kind":"bounded-uniform","bound":1}}}"#;
        let k: StripKernel = serde_json::from_str(j).unwrap();
        assert_eq!(classify_regime(&k), Regime::BoundaryDominates { slope: 2.5 });
    }
}
