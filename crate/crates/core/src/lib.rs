//! Tools for studying how much parallelism a web page's DOM tree offers and
//! how many threads a parallel renderer should spend on it.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`dom`] parses HTML and extracts nine structural page features.
//! 2. [`bench`] runs synthetic styling (top-down) and layout (top-down then
//!    bottom-up) traversals on a work-stealing pool and records timings.
//! 3. [`measurements`] aggregates trials into medians and MADs and derives
//!    speedups and greenups.
//! 4. [`labeling`] turns speedups/greenups into a per-page thread-count label
//!    under a performance, energy, or performance-energy cost model.
//! 5. [`learn`] trains a multinomial logistic regression classifier that
//!    predicts the label from page features.
//!
//! [`pipeline`] wires these together for the command-line tool.

pub mod bench;
pub mod config;
mod csvio;
pub mod dom;
pub mod error;
pub mod labeling;
pub mod learn;
pub mod measurements;
pub mod pipeline;

pub use error::{Error, Result};
