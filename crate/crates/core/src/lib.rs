//! Life-period tails of subcritical branching processes with immigration
//! stopped at zero, evolving in an i.i.d. random environment.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: generating-function algebra ([`laws`]), finite-support
//! environments and their exponential tilt ([`env`]), the kernel sequences
//! `H_n`, `H*_n` ([`kernel`]), the survival recurrence with certified root
//! finding ([`tail`]), a trajectory simulator used as an independent oracle
//! ([`sim`]) and renewal functions of the associated walk ([`harmonic`]).
//!
//! Monte Carlo routines draw from counter-based ChaCha streams described by
//! an [`McPlan`]; partial results are merged in a fixed pairwise order so
//! output is bit-identical for a given `(seed, streams)` pair whether or not
//! the `parallel` feature is enabled.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x < y)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "parallel"))]
extern crate std;

pub mod env;
mod error;
pub mod harmonic;
pub mod kernel;
pub mod laws;
mod math;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod tail;

pub use env::{EnvModel, EnvState, Regime, RegimeKind};
pub use error::{Error, Result};
pub use kernel::KernelSeries;
pub use laws::{LfRep, PgfLaw};
pub use rng::McPlan;
pub use tail::SurvivalCurve;

/// Crate version, embedded in artifacts written by the CLI.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
