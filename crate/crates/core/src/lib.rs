//! Collision ("birthday") statistics for identical particles.
//!
//! The crate answers one family of questions three independent ways and
//! checks that the answers agree:
//!
//! - [`exact`] computes collision probabilities, binomial moments, and
//!   majority-collision thresholds in arbitrary-precision rationals, with
//!   a brute-force enumeration oracle over occupancy tables.
//! - [`sample`] draws seeded occupancy tables under every model: uniform
//!   multisets (bosons, two constructions), i.i.d. categorical particles
//!   (boltzmannons) with fixed or simplex-random day distributions, and
//!   exclusion samples (fermions). [`stats`] turns trials into collision
//!   profiles, Poisson-limit diagnostics, and equivalence tests.
//! - [`quantum`] builds the symmetric power of a small mode space, lifts
//!   unitaries to it, and verifies numerically that the uniform mixed
//!   state both yields the uniform table distribution and is the unique
//!   state invariant under mode rotations.
//!
//! All randomness flows through [`rng::RngStream`], a ChaCha8 stream
//! addressed by `(seed, stream)`; experiments batch trials over stream
//! indices so results never depend on the worker count.

pub mod error;
pub mod exact;
pub mod occupancy;
pub mod quantum;
pub mod rng;
pub mod sample;
pub mod stats;

pub use error::{Error, Result};
pub use exact::ParticleModel;
pub use occupancy::{CollisionProfile, CountMode, OccupancyVector};
pub use rng::{RngStream, DEFAULT_SEED};
pub use sample::{SimplexMethod, SimplexPoint};
