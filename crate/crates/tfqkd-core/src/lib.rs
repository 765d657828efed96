//! Twin-field QKD simulator and secret-key-rate engine.
//!
//! The crate models the full measurement chain of a dual-band-stabilised
//! TF-QKD link: optical channel and single-photon interference at the middle
//! node, pulse-pattern encoding for the CAL, SNS and TWCC-SNS protocols,
//! Monte Carlo detection, decoy-state yield bounds (linear-programming and
//! analytical), the asymptotic and finite-size key-rate equations, and the
//! two-way classical post-processing step.
//!
//! The crate is `no_std`-compatible (with `alloc`); all IO lives in the
//! companion CLI crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod decoy;
pub mod detect;
pub mod keyrates;
pub mod math;
pub mod pattern;
pub mod phase;
pub mod rng;
pub mod simplex;
pub mod twcc;
