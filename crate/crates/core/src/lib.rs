//! Simulation and exact leakage analysis of two XOR-keyed quantum
//! communication schemes that fall short of a real one-time pad, next to a
//! correct one-time-pad baseline.
//!
//! * [`quantum`]: Bell states and the entanglement-swapping outcome distribution.
//! * [`infotheory`]: exact distributions, entropy and mutual information by enumeration.
//! * [`otp`]: one-time pad with a usage ledger and a perfect-secrecy auditor.
//! * [`protocols`]: the XOR-chain scheme, entanglement-swapping QKD, and the baseline.
//! * [`cryptanalysis`]: Eve's attacks and the leakage/efficiency accounting.
//! * [`cli`]: the `otplab` command line.

pub mod bits;
pub mod cli;
pub mod cryptanalysis;
pub mod error;
pub mod infotheory;
pub mod otp;
pub mod protocols;
pub mod quantum;

pub use bits::Bits;
pub use error::{Error, Result};
pub use quantum::BellLabel;
