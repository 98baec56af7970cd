//! Pathwise uniform-error approximation of Brownian and Bessel
//! trajectories by successive exit times of time-space spheroids.
//!
//! A trajectory is represented by its *skeleton*: the ordered exit times
//! and exit positions `(s_n, y_n)` of a chain of spheroids whose maximal
//! half-width is the accuracy `eps`. The piecewise-constant function
//! through the skeleton stays, in law, uniformly within `eps` of the true
//! path on the whole horizon, and the number of skeleton points obeys a
//! renewal law of large numbers and CLT with explicit constants.
//!
//! Modules:
//!
//! * [`types`] - validated domain types (specs, weights, skeletons).
//! * [`special`] - the deterministic analytics (spheroid boundary,
//!   incomplete gamma, cost functional, diagnostic constants).
//! * [`sampling`] - seeded random primitives, including the rejection
//!   sampler for the conditioned exit position.
//! * [`skeletons`] - the path generators and evaluation.
//! * [`statistics`] - Monte Carlo cost experiments, CLT constants and
//!   parameter sweeps (data-parallel under the `parallel` feature).
//! * [`transforms`] - time-changed/space-mapped target models (CIR, CEV)
//!   with transported almost-sure bounds.

// Validation deliberately writes `!(v > 0.0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod sampling;
pub mod skeletons;
pub mod special;
pub mod statistics;
pub mod transforms;
pub mod types;

pub use error::{Error, Result};
pub use types::{BesselSpec, HeatBallParams, PathSkeleton, Precision, SkeletonKind, SkeletonPoint, WeightPair};

/// Caps the global data-parallel thread pool. Returns `false` when the
/// crate was built without the `parallel` feature or the pool was already
/// initialized.
#[cfg(feature = "parallel")]
pub fn configure_threads(threads: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .is_ok()
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_threads: usize) -> bool {
    false
}
