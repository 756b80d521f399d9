//! Analysis toolkit for generalized product codes (GPCs) on the binary
//! erasure channel.
//!
//! A GPC is described by a symmetric binary position-coupling matrix `eta`,
//! position weights `gamma`, per-position mixtures of component-code
//! erasure-correcting capabilities `tau`, and a total check-node count `n`.
//! The crate provides
//!
//! * [`poisson`]: Poisson tails and the initial component-code loss,
//! * [`spec`]: the code family itself, presets and structural quantities,
//! * [`de`]: density evolution, thresholds and analytic bounds,
//! * [`graph`]: residual random graphs and the parallel peeling decoder,
//! * [`branching`]: a multi-type branching-process Monte Carlo oracle,
//! * [`optimizer`]: linear-programming design of irregular mixtures.

pub mod branching;
pub mod de;
pub mod error;
pub mod graph;
pub mod optimizer;
pub mod poisson;
pub mod rng;
pub mod spec;

pub use error::{Error, Result};
pub use poisson::CapabilityDistribution;
pub use spec::{GpcSpec, TauAssignment};
