//! Planar quadrotor dynamic-perching laboratory core.
//!
//! Simulation of the approach, trigger, rotation and body-swing landing
//! sequence on surfaces of any orientation; the sensory cues and reward of a
//! trigger-and-rotate landing policy; small multilayer-perceptron actor and
//! critics; a Soft Actor-Critic trainer; and landing-envelope analysis.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! evaluation and the command line live in the `perch-lab` crate.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod geometry;
pub mod math;
pub mod sim;
pub mod env;
pub mod policy;
pub mod sac;
pub mod analysis;

pub use error::{Error, Result};
