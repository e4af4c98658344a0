//! Causal-state models of stationary symbolic processes.
//!
//! The crate builds minimal optimal predictors (epsilon-machines) for
//! finite-state stationary processes, measures their information content
//! (statistical complexity, block and excess entropies), reconstructs them
//! from raw symbol sequences, and verifies the optimality of the causal-state
//! partition by exhaustive search over rival partitions at desk scale.

pub mod derivation;
pub mod error;
pub mod information;
pub mod machine;
pub mod oracle;
pub mod process;
pub mod reconstruction;

pub use error::{Error, Result};
pub use information::{Distribution, JointTable};
pub use machine::EpsilonMachine;
pub use oracle::{Partition, TheoremReport};
pub use process::{Alphabet, ProcessSpec, Word};
pub use reconstruction::CountTable;
