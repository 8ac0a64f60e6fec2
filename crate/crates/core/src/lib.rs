//! Heat flow `u_t = Δ_H u + V u + f` on the Heisenberg group with Hardy-type
//! potentials.
//!
//! * [`group`]: group law, dilations, gauge, potentials, radial profiles.
//! * [`calculus`]: numerical certification of gauge identities, the Hardy
//!   constant, radial reductions, weighted Sobolev ratios and the Moser recursion.
//! * [`grid`]: monotone flow-aligned discretisation of the sub-Laplacian,
//!   sparse solvers, time stepping and heat-kernel fits.
//! * [`cascade`]: the truncated-potential cascade and its dichotomy classifier.
//! * [`cli`]: configuration, persistence and the `hlab` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cascade;
pub mod cli;
pub mod error;
pub mod group;
pub mod grid;
pub mod par;

pub use error::{LabError, Result};

/// Version of every JSON/CSV layout written by this crate.
pub const SCHEMA_VERSION: u32 = 1;
