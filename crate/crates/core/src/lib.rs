//! Simulation and verification laboratory for split-word processes.
//!
//! A split-word process on a finite window of nonpositive times `m..=0`
//! carries a word `X_n` of length `ℓ_n` over an alphabet of `N` letters and
//! an innovation `V_n` that picks which of the `r_n = ℓ_{n-1}/ℓ_n` blocks of
//! `X_{n-1}` becomes `X_n`. This crate provides:
//!
//! * [`schedule`]: length/ratio schedules, convergence reports and the
//!   constructive selection and extraction procedures;
//! * [`words`] and [`coupling`]: words, block views, canonical words and the
//!   (partial) canonical coupling permutations;
//! * [`process`]: reproducible path and pair simulation;
//! * [`reconstruct`]: the full and partial coupling reconstruction pipelines;
//! * [`metric`]: adapted tree automorphisms and the exact orbit semi-metric;
//! * [`experiments`] and [`verify`]: Monte Carlo estimators, bound checks and
//!   the verification suite.
//!
//! Sample-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default); see [`Execution`].

pub mod coupling;
mod error;
pub mod experiments;
pub mod metric;
mod par;
pub mod process;
pub mod real;
pub mod reconstruct;
pub mod rng;
pub mod schedule;
pub mod verify;
pub mod words;

pub use error::{Error, Result};
pub use par::Execution;
