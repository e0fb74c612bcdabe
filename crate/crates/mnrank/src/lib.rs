//! Mestre-Nagao sum toolkit for elliptic curves over Q.
//!
//! The crate computes exact Frobenius-trace sequences for integral
//! Weierstrass models, evaluates the Mestre-Nagao sums S0(B) and S5(B)
//! at configurable bounds, and trains two kinds of rank classifiers on
//! top of them: a plain feed-forward network over multi-bound sum
//! features, and a weight-generator network that learns a per-prime
//! weighting of the normalized traces. Axis-aligned rectangle rules in
//! the (S0(10^3), S0(10^5)) plane are available as a transparent
//! baseline, and everything is wired together by the `mnrank` binary.

pub mod cli;
pub mod curve;
pub mod dataset;
pub mod eval;
pub mod models;
pub mod nn;
pub mod primes;
pub mod regions;
pub mod rng;
pub mod sums;
pub mod svg;
