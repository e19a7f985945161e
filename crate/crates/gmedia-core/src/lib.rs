//! Granular-media manipulation on a desk: height-map state, a scoop & dump
//! action primitive, a tray simulator with angle-of-repose relaxation, learned
//! and heuristic next-state predictors, and a cross-entropy-method planner.
//!
//! The crate is `no_std`-compatible (`alloc` required); everything here is
//! pure computation over in-memory buffers. File formats, configuration and
//! the CLI live in the companion `gmedia` crate.
//!
//! Module map:
//! - [`grid`]: tray geometry, [`grid::HeightMap`], L1 metric, volume
//!   bookkeeping, goal construction.
//! - [`action`]: the 9-D scoop & dump parameter vector, validation, and its
//!   6-channel pixel-aligned action-map encoding.
//! - [`baseline`]: hard-coded geometric next-state predictor.
//! - [`sim`]: ground-truth tray dynamics (carry capacity, push/scoop split,
//!   spill, repose relaxation) used for data generation and evaluation.
//! - [`nn`]: minimal deterministic tensor/autodiff engine (convolutions,
//!   pooling, dense, Adam).
//! - [`models`]: the three network architectures, training loops, rollout.
//! - [`policy`]: CEM action selection over pluggable scoring functions.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod action;
pub mod baseline;
pub mod error;
pub mod geom;
pub mod grid;
pub mod math;
pub mod models;
pub mod nn;
pub mod policy;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
