//! Desk-scale approximations and certificates for the joint spectrum of a
//! finite set of invertible matrices.
//!
//! The joint spectrum of S = {g₁, …, gₖ} is the limit shape of the rescaled
//! chamber projections of products of n factors from S: both
//! (1/n)·κ(Sⁿ) and (1/n)·λ(Sⁿ) converge to the same compact convex set.
//! This crate computes finite-level clouds of those projections, convex
//! hulls and error diagnostics, proximality and Schottky certificates that
//! justify the convergence, Lyapunov data for random products, and exact
//! enumeration for pairs of hyperbolic isometries of the plane.

pub mod error;
pub mod hull;
pub mod hyp2;
pub mod mat;
pub mod par;
pub mod proximal;
pub mod randprod;
pub mod rng;
pub mod spectrum;
pub mod words;

pub use error::{Error, Result};
