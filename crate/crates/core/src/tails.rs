//! One-sided jump-magnitude laws: exact inverse-transform samplers together
//! with closed-form tail, truncated-mean and Karamata-asymptote oracles.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quad;

const QUAD_REL_TOL: f64 = 1e-9;

fn one() -> f64 {
    1.0
}

/// Law of a nonnegative jump magnitude `Z`.
///
/// The Pareto families have `P[Z > x] = (x/x0)^(-alpha) L(x)` for `x >= x0`
/// and `Z >= x0` almost surely, where `L` is identically 1 for `Pareto` and
/// `(1 + ln(x/x0)/kappa)^phi` for `ParetoLog` with
/// `kappa = max(1, phi/alpha)`. The choice of `kappa` keeps the tail
/// non-increasing for every `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailLaw {
    Pareto {
        alpha: f64,
        #[serde(default = "one")]
        x0: f64,
    },
    ParetoLog {
        alpha: f64,
        #[serde(default = "one")]
        x0: f64,
        phi: f64,
    },
    /// Uniform on `[0, bound]`.
    BoundedUniform { bound: f64 },
    /// Point mass at `value`.
    Constant {
        #[serde(alias = "bound")]
        value: f64,
    },
    Zero,
}

impl TailLaw {
    pub fn pareto(alpha: f64) -> Self {
        TailLaw::Pareto { alpha, x0: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TailLaw::Pareto { alpha, x0 } | TailLaw::ParetoLog { alpha, x0, .. } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(domain(format!("tail exponent must be positive, got {alpha}")));
                }
                if !(x0 >= 1.0 && x0.is_finite()) {
                    return Err(domain(format!("cutoff x0 must be >= 1, got {x0}")));
                }
                if let TailLaw::ParetoLog { phi, .. } = *self {
                    if !phi.is_finite() {
                        return Err(domain("log power phi must be finite"));
                    }
                }
                Ok(())
            }
            TailLaw::BoundedUniform { bound } => {
                if bound > 0.0 && bound.is_finite() {
                    Ok(())
                } else {
                    Err(domain(format!("uniform bound must be positive, got {bound}")))
                }
            }
            TailLaw::Constant { value } => {
                if value >= 0.0 && value.is_finite() {
                    Ok(())
                } else {
                    Err(domain(format!("constant magnitude must be nonnegative, got {value}")))
                }
            }
            TailLaw::Zero => Ok(()),
        }
    }

    /// Inverse-transform sample at `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(domain(format!("uniform variate must lie in [0,1), got {u}")));
        }
        Ok(self.quantile(u))
    }

    /// Unchecked inverse CDF; the hot path of every simulator.
    #[inline]
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        match *self {
            TailLaw::Pareto { alpha, x0 } => x0 * pareto_unit(1.0 - u, alpha),
            TailLaw::ParetoLog { alpha, x0, phi } => {
                let target = -(1.0 - u).ln();
                x0 * solve_log_tail(alpha, phi, target).exp()
            }
            TailLaw::BoundedUniform { bound } => u * bound,
            TailLaw::Constant { value } => value,
            TailLaw::Zero => 0.0,
        }
    }

    /// Exact `P[Z > x]`.
    pub fn tail_prob(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match *self {
            TailLaw::Pareto { alpha, x0 } => {
                if x < x0 {
                    1.0
                } else {
                    (x / x0).powf(-alpha)
                }
            }
            TailLaw::ParetoLog { alpha, x0, phi } => {
                if x < x0 {
                    1.0
                } else {
                    let s = (x / x0).ln();
                    (-alpha * s).exp() * (1.0 + s / kappa(alpha, phi)).powf(phi)
                }
            }
            TailLaw::BoundedUniform { bound } => (1.0 - x / bound).max(0.0),
            TailLaw::Constant { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            TailLaw::Zero => 0.0,
        }
    }

    /// `E[Z 1{Z <= z}]`.
    ///
    /// Closed form for every family except `ParetoLog`, which integrates
    /// `int_0^z P[Z > y] dy - z P[Z > z]` by adaptive Simpson in log
    /// coordinates.
    pub fn truncated_mean(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match *self {
            TailLaw::Pareto { alpha, x0 } => {
                if z <= x0 {
                    0.0
                } else if (alpha - 1.0).abs() < 1e-12 {
                    x0 * (z / x0).ln()
                } else {
                    alpha * x0.powf(alpha) * (z.powf(1.0 - alpha) - x0.powf(1.0 - alpha))
                        / (1.0 - alpha)
                }
            }
            TailLaw::ParetoLog { alpha, x0, phi } => {
                if z <= x0 {
                    return 0.0;
                }
                let k = kappa(alpha, phi);
                let span = (z / x0).ln();
                let body = quad::simpson(
                    |s| ((1.0 - alpha) * s).exp() * (1.0 + s / k).powf(phi),
                    0.0,
                    span,
                    QUAD_REL_TOL * 1e-2,
                );
                (x0 + x0 * body - z * self.tail_prob(z)).max(0.0)
            }
            TailLaw::BoundedUniform { bound } => {
                let c = z.min(bound);
                c * c / (2.0 * bound)
            }
            TailLaw::Constant { value } => {
                if z >= value {
                    value
                } else {
                    0.0
                }
            }
            TailLaw::Zero => 0.0,
        }
    }

    /// `int_0^z P[Z > y] dy` by quadrature of [`tail_prob`](Self::tail_prob)
    /// alone, independent of the closed forms in
    /// [`truncated_mean`](Self::truncated_mean).
    pub fn tail_integral(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let x0 = self.cutoff_x0().min(z);
        let body = if self.is_heavy() {
            quad::simpson(|s: f64| self.tail_prob(s.exp()) * s.exp(), x0.ln(), z.ln(), 1e-12)
        } else {
            quad::simpson(|y| self.tail_prob(y), x0, z, 1e-12)
        };
        // P[Z > y] = 1 below the cutoff
        x0 + body
    }

    /// `(alpha/(1-alpha)) z^(1-alpha) L(z)` where `P[Z > z] = z^(-alpha) L(z)`.
    pub fn karamata_asymptote(&self, z: f64) -> Result<f64> {
        let (alpha, x0) = match *self {
            TailLaw::Pareto { alpha, x0 } | TailLaw::ParetoLog { alpha, x0, .. } => (alpha, x0),
            _ => return Err(domain("Karamata asymptote needs a Pareto-type law")),
        };
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain(format!(
                "Karamata asymptote requires alpha in (0,1), got {alpha}"
            )));
        }
        if z < x0 {
            return Err(domain(format!("z={z} lies below the cutoff x0={x0}")));
        }
        Ok(alpha / (1.0 - alpha) * z.powf(1.0 - alpha) * self.slowly_varying(z))
    }

    /// `L(z) = z^alpha P[Z > z]` for the Pareto families.
    pub fn slowly_varying(&self, z: f64) -> f64 {
        match *self {
            TailLaw::Pareto { alpha, .. } | TailLaw::ParetoLog { alpha, .. } => {
                z.powf(alpha) * self.tail_prob(z)
            }
            _ => f64::NAN,
        }
    }

    /// Tail exponent; `+inf` for laws with bounded support.
    pub fn tail_exponent(&self) -> f64 {
        match *self {
            TailLaw::Pareto { alpha, .. } | TailLaw::ParetoLog { alpha, .. } => alpha,
            _ => f64::INFINITY,
        }
    }

    /// The constant `c` in `P[Z > x] ~ c x^(-alpha)` (up to the log factor).
    pub fn scale_c(&self) -> Option<f64> {
        match *self {
            TailLaw::Pareto { alpha, x0 } | TailLaw::ParetoLog { alpha, x0, .. } => {
                Some(x0.powf(alpha))
            }
            _ => None,
        }
    }

    /// Lower edge of the support.
    pub fn cutoff_x0(&self) -> f64 {
        match *self {
            TailLaw::Pareto { x0, .. } | TailLaw::ParetoLog { x0, .. } => x0,
            TailLaw::Constant { value } => value,
            _ => 0.0,
        }
    }

    /// Upper edge of the support.
    pub fn sup(&self) -> f64 {
        match *self {
            TailLaw::Pareto { .. } | TailLaw::ParetoLog { .. } => f64::INFINITY,
            TailLaw::BoundedUniform { bound } => bound,
            TailLaw::Constant { value } => value,
            TailLaw::Zero => 0.0,
        }
    }

    /// `E[Z^p]` for `p >= 0`, infinite when the moment diverges.
    pub fn moment(&self, p: f64) -> f64 {
        if p == 0.0 {
            return 1.0;
        }
        match *self {
            TailLaw::Pareto { alpha, x0 } => {
                if p < alpha {
                    alpha * x0.powf(p) / (alpha - p)
                } else {
                    f64::INFINITY
                }
            }
            TailLaw::ParetoLog { alpha, x0, phi } => {
                if p > alpha || (p == alpha && phi >= -1.0) {
                    return f64::INFINITY;
                }
                // E[Z^p] = x0^p + p int_{x0}^inf y^(p-1) P[Z > y] dy, in log coordinates.
                let k = kappa(alpha, phi);
                let rate = alpha - p;
                let upper = 60.0 / rate;
                let body = quad::simpson(
                    |s| (-rate * s).exp() * (1.0 + s / k).powf(phi),
                    0.0,
                    upper,
                    1e-12,
                );
                x0.powf(p) * (1.0 + p * body)
            }
            TailLaw::BoundedUniform { bound } => bound.powf(p) / (p + 1.0),
            TailLaw::Constant { value } => value.powf(p),
            TailLaw::Zero => 0.0,
        }
    }

    pub fn is_heavy(&self) -> bool {
        matches!(self, TailLaw::Pareto { .. } | TailLaw::ParetoLog { .. })
    }
}

#[inline]
fn kappa(alpha: f64, phi: f64) -> f64 {
    (phi / alpha).max(1.0)
}

/// `v^(-1/alpha)` with integer reciprocal exponents taken through `powi`.
#[inline]
fn pareto_unit(v: f64, alpha: f64) -> f64 {
    let inv = 1.0 / alpha;
    if inv == 2.0 {
        1.0 / (v * v)
    } else if inv == 1.0 {
        1.0 / v
    } else if inv.fract() == 0.0 && inv <= 16.0 {
        v.powi(-(inv as i32))
    } else {
        v.powf(-inv)
    }
}

/// Solve `alpha s - phi ln(1 + s/kappa) = target` for `s >= 0`.
fn solve_log_tail(alpha: f64, phi: f64, target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let k = kappa(alpha, phi);
    let h = |s: f64| alpha * s - phi * (1.0 + s / k).ln() - target;
    let dh = |s: f64| alpha - phi / (k + s);
    let mut lo = 0.0;
    let mut hi = (target / alpha).max(1.0);
    while h(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = h(s);
        if v == 0.0 {
            return s;
        }
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let d = dh(s);
        let newton = s - v / d;
        s = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    /// Numeric CDF inversion by bisection on `1 - P[Z > x] = u`.
    fn invert_cdf_oracle(law: &TailLaw, u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while 1.0 - law.tail_prob(hi) < u {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 1.0 - law.tail_prob(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    #[test]
    fn pareto_quantile_examples() {
        let half = TailLaw::pareto(0.5);
        assert_eq!(half.sample(0.0).unwrap(), 1.0);
        let x = half.sample(0.75).unwrap();
        assert_relative_eq!(x, 16.0, max_relative = 1e-15);
        assert_relative_eq!(invert_cdf_oracle(&half, 0.75), 16.0, max_relative = 1e-12);
        let unit = TailLaw::pareto(1.0);
        assert_relative_eq!(unit.sample(0.5).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(invert_cdf_oracle(&unit, 0.5), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn sample_rejects_out_of_range_uniforms() {
        let law = TailLaw::pareto(0.5);
        assert!(law.sample(1.0).is_err());
        assert!(law.sample(-0.1).is_err());
        assert!(law.sample(f64::NAN).is_err());
    }

    #[test]
    fn pareto_log_quantile_matches_cdf_inversion() {
        for &(alpha, phi) in &[(0.5, 2.0), (0.7, -1.5), (1.5, 0.5), (0.3, 0.9)] {
            let law = TailLaw::ParetoLog { alpha, x0: 2.0, phi };
            for &u in &[0.0, 0.1, 0.5, 0.9, 0.999, 0.999_999] {
                let x = law.sample(u).unwrap();
                let oracle = invert_cdf_oracle(&law, u).max(2.0);
                assert_relative_eq!(x, oracle, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn tail_prob_examples() {
        assert_eq!(TailLaw::pareto(0.5).tail_prob(4.0), 0.5);
        assert_relative_eq!(TailLaw::pareto(1.0).tail_prob(1e6), 1e-6, max_relative = 1e-15);
        for law in [
            TailLaw::pareto(0.5),
            TailLaw::Pareto { alpha: 2.0, x0: 3.0 },
            TailLaw::ParetoLog { alpha: 0.4, x0: 5.0, phi: 3.0 },
        ] {
            assert_eq!(law.tail_prob(law.cutoff_x0() - 1e-9), 1.0);
            assert_eq!(law.tail_prob(0.5), 1.0);
        }
    }

    #[test]
    fn truncated_mean_examples() {
        let law = TailLaw::pareto(0.5);
        assert_eq!(law.truncated_mean(1.0), 0.0);
        // Oracle: quadrature of the density route alpha * int_1^z y^(-alpha) dy.
        let oracle = quad::simpson(|y| 0.5 * y.powf(-0.5), 1.0, 100.0, 1e-12);
        assert_relative_eq!(oracle, 9.0, max_relative = 1e-10);
        assert_relative_eq!(law.truncated_mean(100.0), 9.0, max_relative = 1e-12);
    }

    #[test]
    fn karamata_examples() {
        let law = TailLaw::pareto(0.5);
        assert_relative_eq!(law.karamata_asymptote(100.0).unwrap(), 10.0, max_relative = 1e-15);
        assert_relative_eq!(law.karamata_asymptote(1e8).unwrap(), 1e4, max_relative = 1e-12);
        let ratio = law.truncated_mean(1e8) / law.karamata_asymptote(1e8).unwrap();
        assert!((ratio - 1.0).abs() < 1e-3, "ratio {ratio}");
        assert!(TailLaw::pareto(1.0).karamata_asymptote(10.0).is_err());
        assert!(TailLaw::pareto(1.5).karamata_asymptote(10.0).is_err());
        assert!(TailLaw::BoundedUniform { bound: 1.0 }.karamata_asymptote(10.0).is_err());
    }

    #[test]
    fn karamata_ratio_approaches_one_monotonically() {
        let law = TailLaw::pareto(0.5);
        let mut last = 0.0;
        for k in 1..=12 {
            let z = 10f64.powi(k);
            let r = law.truncated_mean(z) / law.karamata_asymptote(z).unwrap();
            assert!(r > last && r < 1.0);
            last = r;
        }
        let log_law = TailLaw::ParetoLog { alpha: 0.5, x0: 1.0, phi: 1.0 };
        let r = log_law.truncated_mean(1e40) / log_law.karamata_asymptote(1e40).unwrap();
        assert!((r - 1.0).abs() < 0.05, "log-factor ratio {r}");
    }

    #[test]
    fn truncated_mean_identity_against_quadrature() {
        // E[Z 1{Z<=z}] + z P[Z>z] = int_0^z P[Z>y] dy; the right side is
        // integrated here from tail_prob, independently of the closed form.
        let laws = [
            TailLaw::pareto(0.5),
            TailLaw::Pareto { alpha: 1.7, x0: 2.0 },
            TailLaw::pareto(1.0),
            TailLaw::BoundedUniform { bound: 3.0 },
        ];
        for law in laws {
            for &z in &[0.5, 1.0, 2.5, 10.0, 1e3, 1e6] {
                let x0 = law.cutoff_x0().min(z);
                let head = x0; // P[Z > y] = 1 on [0, x0)
                let body = if law.is_heavy() {
                    // log coordinates keep the power-law integrand well conditioned
                    quad::simpson(|s: f64| law.tail_prob(s.exp()) * s.exp(), x0.ln(), z.ln(), 1e-12)
                } else {
                    quad::simpson(|y| law.tail_prob(y), x0, z, 1e-12)
                };
                let rhs = head + body;
                let lhs = law.truncated_mean(z) + z * law.tail_prob(z);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn pareto_log_truncated_mean_matches_density_route() {
        // Independent route: int_{x0}^z y f(y) dy with the analytic density
        // f(y) = P[Z>y] (alpha - phi/(kappa + s)) / y, s = ln(y/x0).
        for &(alpha, phi) in &[(0.5, 2.0), (0.8, -1.0), (1.4, 0.5)] {
            let x0 = 1.5;
            let law = TailLaw::ParetoLog { alpha, x0, phi };
            let k = (phi / alpha).max(1.0);
            for &z in &[3.0, 50.0, 1e4] {
                let oracle = quad::simpson(
                    |s: f64| {
                        let y = x0 * s.exp();
                        // y f(y) dy with dy = y ds
                        law.tail_prob(y) * (alpha - phi / (k + s)) * y
                    },
                    0.0,
                    (z / x0).ln(),
                    1e-12,
                );
                assert_relative_eq!(law.truncated_mean(z), oracle, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn empirical_tail_matches_within_three_standard_errors() {
        let laws = [
            TailLaw::pareto(0.5),
            TailLaw::pareto(1.5),
            TailLaw::ParetoLog { alpha: 0.6, x0: 1.0, phi: 1.0 },
        ];
        let n = 1_000_000usize;
        for (i, law) in laws.iter().enumerate() {
            let mut rng = crate::rng::stream(1000 + i as u64);
            let grid: Vec<f64> = (1..=10).map(|k| 2f64.powi(k)).collect();
            let mut counts = vec![0usize; grid.len()];
            for _ in 0..n {
                let z = law.sample(rng.random::<f64>()).unwrap();
                for (c, &x) in counts.iter_mut().zip(&grid) {
                    if z > x {
                        *c += 1;
                    }
                }
            }
            for (c, &x) in counts.iter().zip(&grid) {
                let p = law.tail_prob(x);
                let se = (p * (1.0 - p) / n as f64).sqrt();
                let emp = *c as f64 / n as f64;
                assert!((emp - p).abs() <= 3.0 * se, "{law:?} x={x} emp={emp} p={p}");
            }
        }
    }

    #[test]
    fn bounded_laws_stay_in_support() {
        let mut rng = crate::rng::stream(5);
        for law in [
            TailLaw::BoundedUniform { bound: 2.5 },
            TailLaw::Constant { value: 1.0 },
            TailLaw::Zero,
        ] {
            for _ in 0..10_000 {
                let z = law.sample(rng.random::<f64>()).unwrap();
                assert!((0.0..=law.sup()).contains(&z));
            }
            assert!(law.moment(3.0).is_finite());
        }
    }

    #[test]
    fn moments_match_quadrature() {
        let law = TailLaw::pareto(0.6);
        assert_relative_eq!(law.moment(0.5), 6.0, max_relative = 1e-12);
        assert!(law.moment(0.6).is_infinite());
        let log_law = TailLaw::ParetoLog { alpha: 2.0, x0: 1.0, phi: 1.0 };
        // E[Z] = 1 + int_1^inf P[Z > y] dy
        let direct =
            1.0 + quad::simpson(|s: f64| log_law.tail_prob(s.exp()) * s.exp(), 0.0, 40.0, 1e-12);
        assert_relative_eq!(log_law.moment(1.0), direct, max_relative = 1e-8);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(TailLaw::Pareto { alpha: 0.0, x0: 1.0 }.validate().is_err());
        assert!(TailLaw::Pareto { alpha: 0.5, x0: 0.5 }.validate().is_err());
        assert!(TailLaw::BoundedUniform { bound: -1.0 }.validate().is_err());
        assert!(TailLaw::Constant { value: f64::NAN }.validate().is_err());
        assert!(TailLaw::ParetoLog { alpha: 0.5, x0: 1.0, phi: f64::INFINITY }.validate().is_err());
        assert!(TailLaw::Zero.validate().is_ok());
    }

    #[test]
    fn config_schema_round_trip() {
        let law: TailLaw = serde_json::from_str(r#"{"kind":"pareto","alpha":0.5}"#).unwrap();
        assert_eq!(law, TailLaw::pareto(0.5));
        let c: TailLaw = serde_json::from_str(r#"{"kind":"constant","bound":1.0}"#).unwrap();
        assert_eq!(c, TailLaw::Constant { value: 1.0 });
        let pl: TailLaw =
            serde_json::from_str(r#"{"kind":"pareto-log","alpha":0.5,"x0":2,"phi":1}"#).unwrap();
        assert_eq!(pl, TailLaw::ParetoLog { alpha: 0.5, x0: 2.0, phi: 1.0 });
    }

    fn law_strategy() -> impl Strategy<Value = TailLaw> {
        prop_oneof![
            (0.1f64..3.0, 1.0f64..10.0).prop_map(|(alpha, x0)| TailLaw::Pareto { alpha, x0 }),
            (0.1f64..3.0, 1.0f64..10.0, -3.0f64..3.0)
                .prop_map(|(alpha, x0, phi)| TailLaw::ParetoLog { alpha, x0, phi }),
            (0.1f64..10.0).prop_map(|bound| TailLaw::BoundedUniform { bound }),
            (0.0f64..10.0).prop_map(|value| TailLaw::Constant { value }),
        ]
    }

    proptest! {
        #[test]
        fn tail_prob_non_increasing(law in law_strategy(), a in 0.0f64..1e4, b in 0.0f64..1e4) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(law.tail_prob(hi) <= law.tail_prob(lo) + 1e-15);
        }

        #[test]
        fn truncated_mean_non_decreasing(law in law_strategy(), a in 0.0f64..1e4, b in 0.0f64..1e4) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(law.truncated_mean(hi) >= law.truncated_mean(lo) * (1.0 - 1e-9));
        }

        #[test]
        fn quantile_is_monotone_and_in_support(law in law_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (x, y) = (law.sample(lo).unwrap(), law.sample(hi).unwrap());
            prop_assert!(x <= y * (1.0 + 1e-12));
            prop_assert!(x >= law.cutoff_x0() * (1.0 - 1e-12) || !law.is_heavy());
            prop_assert!(x >= 0.0);
        }
    }
}
