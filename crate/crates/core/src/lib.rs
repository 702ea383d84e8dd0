//! Basic Leggett inequalities for realist models, exact polarization
//! probabilities of pure two-photon states, and a scanner that checks
//! whether quantum predictions can exceed the bounds.
//!
//! Module map:
//!
//! * [`quantum`]: pure two-photon states, analyzer kets, joint and marginal
//!   outcome probabilities.
//! * [`leggett`]: the two-sided bound on the correlator, the reduced
//!   probability form for the `sqrt(1-c^2) uu + c vv` family and its
//!   first-order expansion.
//! * [`hidden`]: finite-support hidden-variable models and the Fréchet
//!   range oracle.
//! * [`montecarlo`]: seeded, shard-independent sampling of outcome records.
//! * [`scan`]: grid scan plus local refinement of the reduced left-hand side.

pub mod error;
pub mod hidden;
pub mod leggett;
pub mod lp;
pub mod montecarlo;
pub mod quantum;
pub mod rng;
pub mod scan;

pub use error::{Error, Result};
pub use hidden::{HVModel, SequentialHVModel};
pub use leggett::{CorrelationTriple, LeggettBounds, ReducedEvaluation};
pub use quantum::{JointOutcomeDistribution, MeasurementSettings, PaperStateParam, PureTwoPhotonState};

/// Absolute tolerance used for probability and normalization checks.
pub const PROB_TOL: f64 = 1e-12;
