//! Finite-blocklength converse bounds for discrete channels via
//! non-signalling-code linear programs.
//!
//! The crate computes certified upper bounds on code size and lower bounds on
//! error probability for discrete channels, along with the zero-error,
//! hypothesis-testing and asymptotic quantities that frame them:
//!
//! - [`channel`]: channel data model, standard constructions, tensor powers.
//! - [`lp`]: self-contained dense two-phase simplex (float and exact paths).
//! - [`converse`]: the four converse LPs with witnesses and dual certificates.
//! - [`type_reduction`]: joint-type enumeration and the polynomial-size
//!   reduced LPs for n-fold memoryless channels.
//! - [`zero_error`]: channel hypergraph, fractional packing/covering.
//! - [`asymptotics`]: capacity, dispersion, exact simulation cost, normal
//!   approximation.
//! - [`ns_code`]: materialized non-signalling codes and their verification.
//! - [`hypothesis`]: Neyman-Pearson beta and the independent
//!   hypothesis-testing route to the size bound.

pub mod channel;
pub mod converse;
pub mod hypothesis;
pub mod zero_error;
pub mod asymptotics;
pub mod ns_code;
pub mod type_reduction;
pub mod lp;

pub use channel::{Channel, ChannelError};
