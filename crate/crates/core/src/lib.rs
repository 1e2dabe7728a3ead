//! Desk-scale simulation of prepare-and-measure and entanglement-based QKD,
//! cloning attacks on them, side-channel leakage models, and repeated
//! stabilizer measurements on the [[4,2,2]] and [[7,1,3]] codes.
//!
//! Two engines run the same [`circuit::Circuit`] IR: a dense statevector
//! simulator for small non-Clifford circuits and a bit-sliced Pauli-frame
//! sampler for Clifford circuits with Pauli noise. Qubit 0 is always the
//! least significant bit of a basis-state index.

pub mod circuit;
pub mod noise;
pub mod pauli;
pub mod rng;
pub mod stats;
pub mod statevector;
pub mod tableau;
pub mod pauliframe;
pub mod codes;
pub mod attacks;
pub mod qkd;
pub mod qec;
pub mod sidechannel;
