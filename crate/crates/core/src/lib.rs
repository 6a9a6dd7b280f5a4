//! Curiosity-driven exploration with homeostatic regulation.
//!
//! The agent's intrinsic reward is the forward-model prediction error
//! (the heterostatic drive) minus `alpha` times the prediction error of an
//! extended forward model that also sees the action the policy will take in
//! the next state (the homeostatic drive). Rewards are z-normalized with
//! statistics refreshed at every episode end, and a DDPG learner with
//! epsilon-random exploration maximizes the undiscounted episode return.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, configuration
//! parsing, and the command-line front end live in the `homeostat-lab`
//! crate.

#![no_std]

extern crate alloc;

pub mod config;
pub mod ddpg;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod nn;
pub mod replay;
pub mod reward;
pub mod rng;
pub mod trainer;
pub mod world_model;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use geometry::{ActionVec, Layout, Point, RoomId, StartStrategy, StepOutcome, Wall};
pub use nn::{Activation, AdamConfig, AdamState, DenseNet, Gradients};
pub use reward::{AlphaParam, RewardNormalizer};
pub use trainer::{EpisodeReport, RewardSource, Trainer};
