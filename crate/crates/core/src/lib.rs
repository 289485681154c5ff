//! Uncertainty-aware multi-view classification with Dirichlet evidence.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: log-gamma, digamma and trigamma.
//! - [`dirichlet`]: Dirichlet parameters, the closed-form Hölder, KL and
//!   Cauchy–Schwarz divergences, sampling and numerical oracles.
//! - [`opinions`]: subjective-logic opinions and Dempster–Shafer fusion.
//! - [`network`]: small evidence MLPs with hand-written backpropagation.
//! - [`loss`]: the fused / pseudo-view / per-view evidential objective.
//! - [`data`]: synthetic and CSV-backed multi-view datasets.
//! - [`trainer`]: Adam training, prediction and metrics.
//! - [`experiment`]: end-to-end configs and the noise / exponent sweeps.

pub mod data;
pub mod dirichlet;
pub mod error;
pub mod experiment;
pub mod loss;
pub mod network;
pub mod opinions;
pub mod specfun;
pub mod trainer;

mod rng;

pub use dirichlet::{DirichletParams, DivergenceKind, HolderExponent, NaturalParams};
pub use error::{Error, Result};
pub use opinions::{Evidence, Opinion};
