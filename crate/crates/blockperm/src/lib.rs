//! Structured decomposition of even reversible Boolean functions.
//!
//! An `n`-bit reversible Boolean function is a permutation of `{0,1}^n`. This
//! crate decomposes any *even* such permutation into a short sequence of
//! *blocks*: permutations that ignore one chosen bit and act identically on
//! both halves of it, i.e. lifted `(n-1)`-bit permutations. For `n >= 6`
//! seven blocks always suffice ([`decompose_block7`]); if every block is
//! additionally required to have an even `(n-1)`-bit action, ten suffice for
//! `n >= 10` ([`decompose_even10`]).
//!
//! Every output is verified by exact recomposition, and the crate ships
//! brute-force oracles for the small-width impossibility results that pin
//! down why the constants cannot be pushed below these bounds by the same
//! route (see [`oracle`]).
//!
//! ```
//! use blockperm::{decompose_block7, verify_decomposition, Perm};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let sigma = Perm::random_even(6, &mut rng);
//! let decomp = decompose_block7(&sigma).unwrap();
//! assert!(decomp.blocks.len() <= 7);
//! assert!(verify_decomposition(&sigma, &decomp).ok);
//! ```

pub mod blocks;
pub mod cuboid;
pub mod error;
pub mod even;
pub mod oracle;
pub mod perm;
pub mod synth;
pub mod text;

pub use blocks::{Block, BlockReport, DecompStats, Decomposition, DecompositionReport, Mode};
pub use cuboid::{build_cuboid, case_classify, to_controlled, CaseLabel, Cuboid, PairCounts};
pub use error::{Error, Result};
// re-exported once implemented: even, oracle

pub use perm::{CyclePattern, Dim, Node, Parity, Perm};
pub use synth::{decompose_block7, synthesize_pattern};

