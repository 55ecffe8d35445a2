//! Excited random walks in finite deterministic cookie environments.
//!
//! The crate simulates the nearest-neighbor excited random walk on the
//! integers, where the first `M` departures from each site are biased by
//! per-visit cookie strengths and all later departures are symmetric. It
//! also implements the two branching processes with migration that encode
//! the walk's excursions and hitting times, exact one-step laws for both,
//! truncated stationary solves and the limiting speed, the coupling
//! partial order between cookie environments, and an experiment harness
//! for the pathwise and distributional monotonicity claims.
//!
//! All randomness is derived from explicit 64-bit seeds through a
//! counter-based generator, so every simulation is reproducible bit for
//! bit and independent consumers can replay the same trial field.

pub mod coupling;
pub mod env;
pub mod error;
pub mod field;
pub mod harness;

mod dist;

pub mod backward;
pub mod forward;
pub mod stats;
pub mod walk;

pub use env::{CookieEnvironment, Regime, SpeedSign, Transience};
pub use error::Error;
pub use field::{derive_seed, CoupledTrialField, TrialField};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
