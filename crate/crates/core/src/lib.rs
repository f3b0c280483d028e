//! Estimation of count-probability vectors and stationary distributions from
//! a single trajectory of an α-mixing process.
//!
//! For a sequence `X^n` over a finite alphabet with stationary law `π`, the
//! count-probability vector `M^π(X^n)` has entry `ζ` equal to the total
//! `π`-mass of the symbols observed exactly `ζ` times. This crate provides:
//!
//! - [`seqcore`]: ingestion, occurrence counts, frequency-of-frequencies
//!   profiles, spread, and distances between discrete distributions.
//! - [`estimators`]: the leave-a-window-out Good–Turing estimator (WingIt),
//!   its skipped variant, the plug-in estimator, and the hybrid estimator
//!   that switches between them at a transition count, plus the natural
//!   distribution estimator built from any count-mass vector.
//! - [`processes`]: seeded simulators for IID, Markov, hidden Markov and
//!   random-duplication processes with known stationary laws, and
//!   mixing-time utilities.
//! - [`concentration`]: Bernstein-type and self-normalized deviation radii
//!   for mixing sequences, block decompositions, and an empirical coverage
//!   harness.
//! - [`evaluation`]: ground-truth count masses, oracle natural estimators,
//!   Monte Carlo TV risk, and constant-free reference rates and bounds.
//!
//! ```
//! use countmass::estimators::{hybrid_estimate, HybridConfig};
//! use countmass::seqcore::TokenSequence;
//!
//! let seq = TokenSequence::from_tokens(["a", "b", "a", "c"]);
//! let cfg = HybridConfig::new(1, 0, seq.len()).unwrap();
//! let est = hybrid_estimate(&seq, &cfg).unwrap();
//! assert_eq!(est.nu, 1.5);
//! assert!((est.mass.get(0) - 1.0 / 3.0).abs() < 1e-15);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
mod error;
pub mod estimators;
pub mod evaluation;
pub mod processes;
pub mod rng;
pub mod seqcore;

pub use error::{Error, Result};
