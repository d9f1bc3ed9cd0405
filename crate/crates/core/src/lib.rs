//! Matching unlabeled observation sequences to known source distributions or
//! to training sequences, with an explicit no-match decision.
//!
//! Every sequence is reduced to its empirical distribution. Hypotheses are
//! cardinality-K matchings in a complete bipartite graph whose edge weights
//! are KL divergences (known sources) or two-sided divergences to the
//! concatenated sequence (training sequences). The best and second-best
//! matchings are compared against a length-dependent threshold; when the
//! runner-up is too close the whole batch is rejected.
//!
//! Modules:
//! - [`model`]: alphabets, sequences, distributions, matchings, instances.
//! - [`divergence`]: entropy, KL divergence and edge weights (bits).
//! - [`matching`]: min-weight cardinality-K matching, second best, enumeration.
//! - [`decision`]: the constrained and unconstrained decision rules.
//! - [`exponents`]: Chernoff information, `E_η` and rejection exponents.
//! - [`simulate`]: seeded Monte Carlo estimation of error/rejection rates.
//! - [`cli`]: file formats and the `seqmatch` command-line front end.

pub mod cli;
pub mod decision;
pub mod divergence;
pub mod error;
pub mod exponents;
pub mod matching;
pub mod model;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    Alphabet, DecisionOutcome, Distribution, KnownInstance, Matching, Sequence, UnknownInstance,
    Verdict,
};
