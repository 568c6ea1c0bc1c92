//! Hamming distance matrices from a simulated quantum circuit, and a binary
//! self-organizing map trained on top of them.
//!
//! * [`qsim`]: dense state-vector simulator (X, H, CNOT, controlled phase,
//!   marginals, seeded shot sampling).
//! * [`hamming`]: the encode/extract/decode distance circuit and the
//!   conversion of ancilla statistics into a [`hamming::DistanceMatrix`].
//! * [`sofm`]: continuous and binary map training with classical or circuit
//!   distance backends.
//! * [`textvec`]: bag-of-words binarization of documents.

pub mod format;
pub mod hamming;
pub mod qsim;
pub mod sofm;
pub mod textvec;

pub use hamming::{BinaryVector, DistanceEstimate, DistanceMatrix};
pub use qsim::{Circuit, Gate, StateVector};
pub use sofm::{Backend, BinaryMap, EpochTrace, TrainConfig};
pub use textvec::{Corpus, Vocabulary};
