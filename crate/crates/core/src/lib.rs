//! Simulation and statistical verification for heavy-tailed, spatially
//! non-homogeneous random walks.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod excursions;
pub mod harness;
pub mod lyapunov;
pub mod presets;
pub mod quad;
pub mod rng;
pub mod strip;
pub mod tails;
pub mod walk;

pub use error::{Error, Result};
pub use estimators::{ExponentEstimate, Method, MomentVerdict, Obs, Side};
pub use excursions::ExcursionRecord;
pub use harness::{run, run_with_workers, Check, CheckResult, ExperimentConfig, Model, Outcome, RunReport};
pub use lyapunov::{DriftDirection, DriftReport, DriftScenario, LyapunovSpec, Verdict};
pub use presets::{list_presets, preset};
pub use strip::{InducedChainSpec, Recurrence, Regime, StripKernel};
pub use tails::TailLaw;
pub use walk::{Envelope, IncrementLaw, LastExit, Passage, PosProb, StoppingRecord, Trajectory};
