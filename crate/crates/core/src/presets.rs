//! Named acceptance scenarios. Each preset fully pins laws, horizons,
//! replica counts, seeds and tolerances.

use crate::error::{Error, Result};
use crate::estimators::{MomentVerdict, Side};
use crate::harness::{Check, ExperimentConfig, Model};
use crate::lyapunov::DriftScenario;
use crate::strip::{build_lamperti, InducedChainSpec, StripKernel};
use crate::tails::TailLaw;
use crate::walk::{Envelope, IncrementLaw};

/// `(name, one-line description)` for every preset.
pub const PRESETS: &[(&str, &str)] = &[
    ("cor2-rate", "rate of escape: log X_t / log t -> 1/alpha = 2"),
    ("cor1-upper-envelope", "upper a.s. envelope, theta = 0.5, phi = 0, eps = 0.5"),
    ("speed-lower-envelope", "lower a.s. envelope and max-increment bound, eps = 0.5"),
    ("passage-moments", "first-passage tail exponent -beta/alpha = -0.5 and moment threshold"),
    ("last-exit-tail", "last-exit tail exponent -(beta/alpha - 1) = -2"),
    ("lamperti-gamma", "return-time exponent of the Lamperti chain, gamma in {0.25, 0.5, 0.75}"),
    ("stripthm1-phase", "strip, positive-recurrent lines: slope 1/alpha = 2"),
    ("stripthm2a-phase", "strip, null-recurrent lines, boundary dominates: slope gamma/alpha = 2.5"),
    ("stripthm2b-phase", "strip, null-recurrent lines, bulk dominates: V -> -inf, slope 1/beta = 2.5"),
    ("drift-lemmas", "Lyapunov drift signs above the detected region boundary"),
    ("analytic-oracles", "truncated-mean identity and Karamata asymptote"),
    ("risk-invariance", "regime classification is blind to bulk drift shifts"),
];

pub fn list_presets() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Escape-rate walk: Pareto(1/2) up-jumps, down-jumps uniform on `[0, 1]`.
pub fn escape_law() -> IncrementLaw {
    IncrementLaw::new(TailLaw::pareto(0.5), TailLaw::BoundedUniform { bound: 1.0 }, 0.5)
}

fn walk(name: &str, law: IncrementLaw, horizon: u64, replicas: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        model: Model::Walk { law },
        horizon,
        replicas,
        master_seed: seed,
        levels: Vec::new(),
        checks: Vec::new(),
        output_dir: None,
    }
}

fn strip(name: &str, kernel: StripKernel, seed: u64, checks: Vec<Check>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        model: Model::Strip { kernel },
        horizon: 1_000_000,
        replicas: 50,
        master_seed: seed,
        levels: Vec::new(),
        checks,
        output_dir: None,
    }
}

fn only_up(law: TailLaw) -> IncrementLaw {
    IncrementLaw::new(law, TailLaw::Zero, 1.0)
}

fn only_down(law: TailLaw) -> IncrementLaw {
    IncrementLaw::new(TailLaw::Zero, law, 0.0)
}

fn unit_uniform() -> TailLaw {
    TailLaw::BoundedUniform { bound: 1.0 }
}

/// Kernel for the bulk-dominated regime: bounded boundary jumps, Pareto(0.4)
/// bulk down-jumps, reflected simple random walk lines.
pub fn bulk_dominated_kernel() -> StripKernel {
    StripKernel {
        induced: InducedChainSpec::ReflectedSrw,
        boundary_jump: IncrementLaw::new(unit_uniform(), unit_uniform(), 0.5),
        bulk_jump: IncrementLaw::new(unit_uniform(), TailLaw::pareto(0.4), 0.5),
    }
}

/// Configs making up the named preset (most have one).
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    let configs = match name {
        "cor2-rate" => {
            let mut c = walk(name, escape_law(), 1_000_000, 100, 0x5eed_0001);
            c.checks.push(Check::SlopeMedian { burn_in: 1_000, side: Side::Positive, lo: 1.8, hi: 2.2 });
            vec![c]
        }
        "cor1-upper-envelope" => {
            let mut c = walk(name, escape_law(), 1_000_000, 100, 0x5eed_0002);
            c.checks.push(Check::EnvelopeClean {
                envelope: Envelope::Upper { theta: 0.5, phi: 0.0, eps: 0.5 },
                burn_in: 1_000,
                min_clean: 100,
            });
            vec![c]
        }
        "speed-lower-envelope" => {
            let mut c = walk(name, escape_law(), 1_000_000, 100, 0x5eed_0003);
            c.checks.push(Check::EnvelopeClean {
                envelope: Envelope::Lower { alpha: 0.5, eps: 0.5 },
                burn_in: 1_000,
                min_clean: 95,
            });
            c.checks.push(Check::MaxIncrementClean { alpha: 0.5, eps: 0.5, burn_in: 1_000, min_clean: 95 });
            vec![c]
        }
        "passage-moments" => {
            let law = IncrementLaw::new(TailLaw::Constant { value: 1.0 }, TailLaw::pareto(0.5), 0.5);
            let mut c = walk(name, law, 1_000_000, 10_000, 1);
            c.levels = vec![10.0];
            c.checks = vec![
                Check::PassageSurvival { level: 10.0, lo: -0.65, hi: -0.35 },
                Check::PassageMoment { level: 10.0, p: 0.25, expect: MomentVerdict::Converging },
                Check::PassageMoment { level: 10.0, p: 1.0, expect: MomentVerdict::Diverging },
            ];
            vec![c]
        }
        "last-exit-tail" => {
            let law = IncrementLaw::new(TailLaw::pareto(0.5), TailLaw::pareto(1.5), 0.5);
            let mut c = walk(name, law, 100_000, 10_000, 2);
            c.levels = vec![0.0];
            c.checks.push(Check::LastExitSurvival { level: 0.0, lo: -2.6, hi: -1.4 });
            vec![c]
        }
        "lamperti-gamma" => [0.25, 0.5, 0.75]
            .into_iter()
            .map(|gamma| {
                Ok(ExperimentConfig {
                    name: format!("{name}-{gamma}"),
                    model: Model::Returns { induced: build_lamperti(gamma, 1.0)? },
                    horizon: 1_000_000,
                    replicas: 10_000,
                    master_seed: 42,
                    levels: Vec::new(),
                    checks: vec![Check::ReturnHill { lo: gamma - 0.1, hi: gamma + 0.1 }],
                    output_dir: None,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        "stripthm1-phase" => {
            let kernel = StripKernel {
                induced: InducedChainSpec::FiniteErgodic { matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5]] },
                boundary_jump: only_up(TailLaw::pareto(0.5)),
                bulk_jump: only_down(TailLaw::pareto(2.0)),
            };
            let checks = vec![Check::SlopeMedian { burn_in: 1_000, side: Side::Positive, lo: 1.7, hi: 2.3 }];
            vec![strip(name, kernel, 0x5eed_0007, checks)]
        }
        "stripthm2a-phase" => {
            let kernel = StripKernel {
                induced: InducedChainSpec::ReflectedSrw,
                boundary_jump: only_up(TailLaw::pareto(0.2)),
                bulk_jump: IncrementLaw::new(unit_uniform(), unit_uniform(), 0.5),
            };
            let checks = vec![Check::SlopeMedian { burn_in: 1_000, side: Side::Positive, lo: 2.1, hi: 2.9 }];
            vec![strip(name, kernel, 0x5eed_0008, checks)]
        }
        "stripthm2b-phase" => {
            let checks = vec![
                Check::FinalSign { negative: true, min_fraction: 0.95 },
                Check::SlopeMedian { burn_in: 1_000, side: Side::Absolute, lo: 2.1, hi: 2.9 },
            ];
            vec![strip(name, bulk_dominated_kernel(), 0x5eed_0009, checks)]
        }
        "drift-lemmas" => {
            let mut c = analytic(name, 0x5eed_000a);
            c.checks = vec![
                Check::DriftRegion {
                    name: "supermartingale".into(),
                    scenario: DriftScenario::supermartingale(0.5, 2.0),
                    samples: 100_000,
                },
                Check::DriftRegion {
                    name: "submartingale".into(),
                    scenario: DriftScenario::submartingale(0.5, 0.8),
                    samples: 100_000,
                },
                Check::DriftRegion {
                    name: "strong-drift".into(),
                    scenario: DriftScenario::strong_drift(0.5, 2.0, 0.05),
                    samples: 100_000,
                },
            ];
            vec![c]
        }
        "analytic-oracles" => {
            let z: Vec<f64> = (0..=12).map(|j| 10f64.powi(j) * 1.5).collect();
            let mut c = analytic(name, 0x5eed_000b);
            c.checks = vec![
                Check::TailIdentity { law: TailLaw::pareto(0.5), z: z.clone(), rel_tol: 1e-9 },
                Check::TailIdentity { law: TailLaw::pareto(1.5), z: z.clone(), rel_tol: 1e-9 },
                Check::TailIdentity { law: TailLaw::ParetoLog { alpha: 0.5, x0: 2.0, phi: 1.0 }, z, rel_tol: 1e-9 },
                Check::Karamata { law: TailLaw::pareto(0.5), z: 1e8, rel_tol: 1e-3 },
            ];
            vec![c]
        }
        "risk-invariance" => {
            let mut c = analytic(name, 0x5eed_000c);
            c.checks.push(Check::RegimeInvariance { kernel: bulk_dominated_kernel(), shifts: vec![1.0, 10.0, 100.0] });
            vec![c]
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(configs)
}

fn analytic(name: &str, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        model: Model::Analytic,
        horizon: 2,
        replicas: 1,
        master_seed: seed,
        levels: Vec::new(),
        checks: Vec::new(),
        output_dir: None,
    }
}
