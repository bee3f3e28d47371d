//! Distributed cycle-consistent multi-object matching.
//!
//! A collection of objects (point sets) with noisy pairwise partial maps is
//! split into overlapping sub-collections. Each sub-collection recovers a
//! low-rank matching matrix with a factorized ADMM, and neighbouring
//! sub-collections agree on their overlaps through consensus messages. The
//! [`cover`] module builds the sub-collections and checks that their nerve is
//! connected with trivial first homology, which is what lets local
//! consistency propagate to the whole collection.
//!
//! The crate is `no_std` with `alloc`; the default `std` feature only
//! switches the dense kernels to their optimized std backends.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baseline;
pub mod block;
pub mod cover;
pub mod error;
pub mod graph;
pub mod maps;
pub mod metrics;
pub mod solver;
pub mod synth;

pub use block::{BlockMatrix, Layout};
pub use error::{Error, Result};
pub use graph::{MapGraph, ObjectGraph, ObjectId};

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
