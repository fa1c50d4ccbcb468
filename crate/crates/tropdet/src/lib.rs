//! Tropical weighted automata workbench.
//!
//! Run and configuration semantics for (min,+) automata, the
//! baseline-augmented construction with cactus, rebase and jump letters,
//! potential and charge analysis, SRI detection, the recursive bound
//! functions, and bounded-gap determinisation with an exact equivalence check.

pub mod analysis;
pub mod augmented;
pub mod bounds;
#[cfg(feature = "cli")]
pub mod cli;
pub mod cactus;
pub mod determinise;
pub mod fixtures;
pub mod gap;
pub mod sri;
pub mod tropical;
pub mod weight;
pub mod wfa;
pub mod zoom;

pub use gap::{find_gap_witness, verify_gap_witness, GapWitness};
pub use weight::{Weight, WeightError};
pub use wfa::{Configuration, RunTrace, Transition, Wfa, WfaError};
