//! Classical Gaussian bi-signals whose quadratic-form correlations reproduce
//! the correlations of a pure bipartite quantum state.
//!
//! A state `Psi` of `C^d1 (x) C^d2` is carried by its coefficient matrix
//! `Psi-hat`. The bi-signal `(phi1, phi2)` is a zero-mean circular complex
//! Gaussian vector whose covariance has off-diagonal block `Psi-hat` and
//! diagonal blocks shifted by a white-noise background `epsilon I`. Then
//!
//! * `cov(f_A1(phi1), f_A2(conj phi2)) = <A1 (x) A2 Psi, Psi>`, and
//! * `E f_A(phi1) - epsilon Tr A = <A (x) I Psi, Psi>`.
//!
//! Modules, bottom-up: [`hilbert`] (states, operators, averages),
//! [`covariance`] (block covariance, background level, exchange symmetry),
//! [`sampler`] (seeded Gaussian draws), [`quadratic`] (observables and
//! estimators), [`channels`] (unitary channels and Schrödinger propagation),
//! [`experiments`] (beam-splitter bunching), [`cli`].

pub mod channels;
pub mod cli;
pub mod covariance;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod json;
pub mod quadratic;
pub mod random;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use hilbert::{BipartiteState, Operator, Side, C64};
