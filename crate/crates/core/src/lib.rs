//! Compression, privacy leakage and false-acceptance tradeoffs for secret-key
//! based authentication over discrete memoryless sources.
//!
//! - [`probability`]: joint tensors and channels over named finite alphabets.
//! - [`info`]: entropies and mutual informations in bits.
//! - [`region`]: single-letter region evaluation and boundary search.
//! - [`binary`]: the binary erasure cascade with its closed-form region.
//! - [`codec`]: a finite-blocklength layered binning scheme with exact and
//!   Monte Carlo metrics.

pub mod binary;
pub mod codec;
pub mod error;
pub mod info;
pub mod probability;
pub mod region;

pub use error::{Error, Result};
pub use info::Bits;
pub use probability::{compose, Alphabet, Channel, JointPmf};
pub use region::{AuxPair, RegionPoint, SearchConfig};
