//! Freshness-aware data-sharing contract design under information asymmetry.
//!
//! The library models a data market where a service provider buys periodic
//! data updates from holders whose update costs it cannot observe. Data value
//! decays with age, so the provider publishes a menu of
//! `(update frequency, reward)` contract items — one per holder type — that
//! must be individually rational and incentive compatible. The crate provides:
//!
//! - [`freshness`]: the time-slotted age-of-information model and quality
//!   metric, with a slot-enumeration oracle.
//! - [`contract`]: holder/provider utilities, IR/IC feasibility checks, and
//!   the penalized learning reward.
//! - [`market`]: the stochastic market environment, state encoding, and
//!   action decoding shared by all solvers.
//! - [`nn`]: a small dense-network substrate with exact reverse-mode
//!   gradients, Adam, and Polyak updates.
//! - [`gdm`]: a conditional denoising-diffusion policy trained against
//!   double critics that generates contract menus from market states.
//! - [`ppo`]: a clipped-surrogate actor-critic baseline over the same
//!   environment.
//! - [`baselines`]: complete-information, greedy, and random menu
//!   construction.
//! - [`rerank`]: multi-modal similarity scoring and top-K re-ranking over
//!   precomputed feature records.
//! - [`experiment`]: reproducible experiment driver, metrics serialization,
//!   checkpoints, and summaries behind the `freshcontract` CLI.
//!
//! Start with the `examples/` directory: each file is a runnable walkthrough
//! of one capability.

pub mod baselines;
pub mod contract;
mod error;
pub mod experiment;
pub mod freshness;
pub mod gdm;
pub mod market;
pub mod nn;
pub mod ppo;
pub mod rerank;

pub use error::{Error, Result};
