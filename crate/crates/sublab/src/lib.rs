//! Numerical laboratory for sublevel sets of functions constrained by the
//! Laplacian.
//!
//! The crate measures how small the set `{x : |u(x)| <= eps}` can be when
//! `u` satisfies a differential inequality such as `1 <= Δu <= c`, and it
//! realizes the proof machinery behind those estimates as executable,
//! testable operations:
//!
//! * [`field`] — an analytic test-function catalog (exact values, gradients,
//!   Laplacians, Hessians) and grid sampling / finite-difference primitives.
//! * [`geometry`] — sublevel measures, marching-squares level-curve lengths,
//!   connected components with hole counts, Euclidean distance transforms
//!   and exterior parallel curves.
//! * [`stochastic`] — Brownian-motion exit times, the Feynman–Kac
//!   representation, and the reflection-principle tail.
//! * [`heat`] — explicit heat evolution on masked domains, heat content, and
//!   the half-heating (Markov inequality) check.
//! * [`experiments`] — statement-level verification harnesses with log-log
//!   scaling fits, the full sublevel proof pipeline, and champagne-domain
//!   generation.
//! * [`cli`] — a batch experiment driver writing reproducible reports.
//!
//! All operations are pure and deterministic: a fixed configuration and seed
//! reproduce every report byte for byte, independent of thread count.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod heat;
pub mod stochastic;

pub use error::{Error, Result};
