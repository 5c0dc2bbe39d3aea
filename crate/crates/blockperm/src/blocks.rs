//! Decomposition factors and the assembled decomposition record.

use serde::Serialize;

use crate::perm::{Dim, Parity, Perm};

/// One decomposition factor: an `(n-1)`-bit permutation applied on both
/// halves of dimension `dim`. Lifting it yields a permutation that is
/// concurrent at `dim` (and always even as an `n`-bit permutation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub dim: Dim,
    pub inner: Perm,
}

impl Block {
    pub fn new(dim: Dim, inner: Perm) -> Block {
        Block { dim, inner }
    }

    pub fn identity(dim: Dim, n: u32) -> Block {
        Block {
            dim,
            inner: Perm::identity(n - 1),
        }
    }

    /// The full `n`-bit permutation this block stands for.
    pub fn lift(&self) -> Perm {
        Perm::lift(&self.inner, self.dim)
    }

    pub fn inverse(&self) -> Block {
        Block {
            dim: self.dim,
            inner: self.inner.inverse(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.inner.is_identity()
    }

    pub fn inner_parity(&self) -> Parity {
        self.inner.parity()
    }

    /// `self` then `other` as right factors: requires equal dims; the result
    /// lifts to `self.lift() * other.lift()`.
    pub fn merge(&self, other: &Block) -> Block {
        assert_eq!(self.dim, other.dim, "cannot merge blocks on different dims");
        Block {
            dim: self.dim,
            inner: self.inner.compose(&other.inner),
        }
    }
}

/// Which guarantee the decomposition was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// At most 7 blocks; requires width >= 6.
    Block7,
    /// At most 10 blocks, each with an even inner permutation; width >= 10.
    Even10,
    /// Unbounded-depth fallback for widths 4 and 5.
    Greedy,
}

impl Mode {
    pub fn block_bound(self) -> Option<usize> {
        match self {
            Mode::Block7 => Some(7),
            Mode::Even10 => Some(10),
            Mode::Greedy => None,
        }
    }

    pub fn requires_even_blocks(self) -> bool {
        matches!(self, Mode::Even10)
    }
}

/// Bookkeeping carried along by the pipelines.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DecompStats {
    /// Rounds spent removing 3- and 5-cycles.
    pub rounds_35: u64,
    /// Classification labels of the cuboid stages, in order of use.
    pub case_labels: Vec<String>,
}

/// An ordered block list whose lifted product equals the source permutation.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub n: u32,
    pub mode: Mode,
    pub blocks: Vec<Block>,
    pub source_digest: String,
    pub stats: DecompStats,
}

impl Decomposition {
    /// Ordered product of the lifted blocks (rightmost applied first).
    pub fn product(&self) -> Perm {
        let mut acc = Perm::identity(self.n);
        for b in self.blocks.iter().rev() {
            acc = b.lift().compose(&acc);
        }
        acc
    }
}

/// JSON-facing view of a decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub n: u32,
    pub mode: Mode,
    pub blocks: Vec<BlockReport>,
    pub verified: bool,
    pub stats: DecompStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub dim: Dim,
    pub inner_cycles: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_images: Option<Vec<u32>>,
    pub concurrent_parity: Parity,
}

impl DecompositionReport {
    pub fn new(d: &Decomposition, verified: bool, with_images: bool) -> DecompositionReport {
        DecompositionReport {
            n: d.n,
            mode: d.mode,
            blocks: d
                .blocks
                .iter()
                .map(|b| BlockReport {
                    dim: b.dim,
                    inner_cycles: crate::text::format_cycles(&b.inner),
                    inner_images: with_images.then(|| b.inner.images().to_vec()),
                    concurrent_parity: b.inner_parity(),
                })
                .collect(),
            verified,
            stats: d.stats.clone(),
        }
    }
}
