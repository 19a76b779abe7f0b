//! Trace-distance witness of initial system-environment correlations.
//!
//! Polarization-entangled photon pairs form the open system and their
//! transverse momentum the environment. A programmable phase correlates the
//! two; a linear phase drives the "time" evolution. The crate provides
//!
//! - [`qstate`]: density matrices, trace distance, the Helstrom projector;
//! - [`photon`]: the engineered total state, its reduction and the coherence `eps(a)`;
//! - [`dynamics`]: trace-distance sweeps, the `I12` bound and the semigroup witness;
//! - [`counts`]: coincidence counting behind polarizers with Poisson noise;
//! - [`tomography`]: maximum-likelihood two-qubit state reconstruction;
//! - [`config`] and [`runner`]: experiment presets, configs and file outputs
//!   used by the `corrwitness` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod counts;
pub mod dynamics;
pub mod error;
pub mod photon;
pub mod qstate;
pub mod runner;
pub mod tomography;

pub use error::{Error, Result};
