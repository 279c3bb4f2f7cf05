//! Exact information-cost accounting for two-party communication protocols.
//!
//! Protocols are finite binary trees of owned signals. Running one on a prior
//! distribution is a drift-free random walk on distributions over `X × Y`, and
//! every information cost of the protocol is a function of the law of where
//! that walk stops. The crate is organised around that view:
//!
//! | module | contents |
//! |--------|----------|
//! | [`distributions`] | joint distributions, entropies, the `⊙` product, symmetric decompositions |
//! | [`protocol`] | protocol trees, Bayes walks, signal recovery from splits, error evaluation |
//! | [`cost`] | transcript laws, internal/external information, concealed information, scaled information |
//! | [`and`] | the AND machinery: buzzer leaf law, grid protocols, closed forms, flips, completion |
//! | [`disjointness`] | the permuted one-sided set-disjointness protocol and its audits |
//! | [`trivial`] | support graphs and zero-cost witnesses for trivial measures |
//! | [`optimize`] | prior maximisation and error/information tradeoff tables |

pub mod and;
pub mod disjointness;
pub mod distributions;
mod error;
pub mod cost;
pub mod numeric;
pub mod optimize;
pub mod protocol;
pub mod trivial;

pub use distributions::{
    binary_entropy, odot, symmetric_decomposition, total_variation, truncated_entropy,
    Decomposition, EntropyProfile, JointDistribution, ProductDistribution,
};
pub use error::{Error, Result};
pub use cost::{CostReport, LawEntry, TranscriptLaw};
pub use protocol::{FunctionTable, Owner, ProtocolTree, Task};

/// Library version embedded in CLI artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
