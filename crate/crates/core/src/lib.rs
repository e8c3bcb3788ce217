//! Global-in-time nonoverlapping domain decomposition for diffusion in mixed form.
//!
//! Subdomains may use different time grids; interface data is exchanged via
//! the L2 projection in time. Two methods are provided: a Steklov-Poincare
//! interface problem with a weighted Neumann-Neumann preconditioner, and
//! optimized Schwarz waveform relaxation with Robin transmission conditions.

// NaN-rejecting `!(x > 0.0)` checks and index loops over coupled arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod geometry;
pub mod interface;
pub mod linalg;
pub mod mixedfem;
pub mod robin_opt;
pub mod scenario;
pub mod solvers;
pub mod timegrid;

pub use error::{Error, Result};
