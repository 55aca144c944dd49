//! Exact rank-error analysis and evolutionary approximation of median
//! comparison networks.
//!
//! * [`network`]: comparison networks, parsing, generators, pruning.
//! * [`bdd`]: reduced ordered BDDs with exact model counting.
//! * [`analysis`]: rank-error counts, histogram, worst case and quality.
//! * [`cost`]: pipelined area estimate and RTL emission.
//! * [`search`]: two-stage CGP search with a Pareto archive.
//! * [`imaging`]: noise, network-driven median filtering and SSIM.
//! * [`cli`]: the command-line front end.

pub mod analysis;
pub mod bdd;
pub mod cli;
pub mod cost;
pub mod imaging;
pub mod network;
pub mod search;

pub use analysis::{analyze, ErrorProfile};
pub use network::{parse_network, Network};
