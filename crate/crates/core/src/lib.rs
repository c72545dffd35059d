//! Fidelity-driven qubit routing.
//!
//! - [`circuit`]: instances, gate sequences and translation into layered native circuits.
//! - [`noise`]: density-matrix simulation and circuit fidelity.
//! - [`nn`]: a small reverse-mode autodiff tape.
//! - [`embed`]: the graph autoencoder mapping circuit tables to latent vectors.
//! - [`surrogate`]: Gaussian-process regression and training-set selection.
//! - [`route`]: the routing environment and baseline routers.
//! - [`rl`]: the actor-critic router.
//! - [`bench`]: seeded QAOA and QML instance generation.
//! - [`pipeline`]: resumable stages tying everything together.

pub mod bench;
pub mod circuit;
pub mod embed;
pub mod noise;
pub mod nn;
pub mod pipeline;
pub mod rl;
pub mod route;
pub mod surrogate;
