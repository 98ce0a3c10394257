//! Multi-robot task allocation for collective transport.
//!
//! An event-driven simulator plus a bigraph allocator: at every decision
//! instant robots and tasks form a weighted bipartite graph, an exact
//! maximum-weight matching is solved, and the deciding robot takes the task it
//! was matched to. Edge weights come from a hand-crafted incentive
//! ([`expert`]), a learned graph-attention incentive ([`policy`]), or the
//! random feasible baseline ([`matching::FeasRnd`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod expert;
pub mod graphs;
pub mod matching;
pub mod policy;
pub mod scenario;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
