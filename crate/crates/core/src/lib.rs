//! Classical simulation of quantum circuits with approximately sparse output
//! distributions.
//!
//! Circuits have the shape `C = U2 U1`, where `U1 |input>` is a
//! computationally tractable (CT) state and `U2` is either a quantum Fourier
//! transform on a qubit subset or a tensor product of one-qubit unitaries.
//! Bit strings use the least-significant-first convention throughout: the
//! first character of a string is qubit 0 and contributes `2^0` to the
//! integer view.

pub mod bits;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod km;
pub mod marginals;
pub mod ops;
pub mod oracle;
pub mod reconstruct;
pub mod rng;
pub mod sparse;
pub mod state;

pub use bits::{BitString, Register};
pub use error::{Error, Result};
pub use estimator::{
    chernoff_mean, chernoff_sample_count, overlap, overlap_sample_count, overlap_with_op,
    partial_overlap, EstimationParams, Estimate,
};
pub use ops::{weyl_shift_op, BasisPreserving, WeylShift};
pub use rng::{StreamKey, Substream};
pub use state::{Amplitude, CtState, ReversibleGate, SignFunction, TractableState};
