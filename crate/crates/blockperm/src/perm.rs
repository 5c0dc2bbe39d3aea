//! Exact permutation algebra over `{0,1}^n`.
//!
//! A [`Perm`] stores the full image table of a bijection on `n`-bit strings.
//! Bit 1 is the most significant position of the node index, so the string
//! `1100` (n = 4) is node `0b1100 = 12`. Products apply the right factor
//! first: `(p * q)(x) = p(q(x))`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A node of `{0,1}^n`, encoded with bit 1 as the most significant bit.
pub type Node = u32;

/// A 1-indexed bit position ("dimension"); dimension 1 is the most
/// significant bit.
pub type Dim = u32;

/// Default upper bound on the width `n`. A width-24 table holds 16M images.
pub const DEFAULT_WIDTH_CAP: u32 = 24;

/// Sign of a permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn xor(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_even(self) -> bool {
        self == Parity::Even
    }
}

/// Value of bit `i` (1-indexed, MSB first) of `x` as an `n`-bit string.
#[inline]
pub fn bit(x: Node, i: Dim, n: u32) -> u32 {
    (x >> (n - i)) & 1
}

/// `x` with bit `i` flipped.
#[inline]
pub fn flip(x: Node, i: Dim, n: u32) -> Node {
    x ^ (1 << (n - i))
}

/// Remove bit `i` from an `n`-bit index, producing an `(n-1)`-bit index.
#[inline]
pub fn delete_bit(x: Node, i: Dim, n: u32) -> Node {
    let w = n - i; // weight of the removed bit
    let high = x >> (w + 1);
    let low = x & ((1 << w) - 1);
    (high << w) | low
}

/// Insert bit value `b` at position `i` of an `(n-1)`-bit index, producing an
/// `n`-bit index.
#[inline]
pub fn insert_bit(y: Node, i: Dim, b: u32, n: u32) -> Node {
    let w = n - i;
    let high = y >> w;
    let low = y & ((1 << w) - 1);
    (high << (w + 1)) | (b << w) | low
}

/// Position of dimension `d` after dimension `removed` has been deleted.
#[inline]
pub fn reduced_dim(d: Dim, removed: Dim) -> Dim {
    debug_assert_ne!(d, removed);
    if d < removed {
        d
    } else {
        d - 1
    }
}

/// A permutation of `{0,1}^n` stored as a full image table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Perm {
    n: u32,
    image: Vec<Node>,
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm(n={}, {})", self.n, crate::text::format_cycles(self))
    }
}

impl Perm {
    /// The identity on `{0,1}^n`.
    pub fn identity(n: u32) -> Perm {
        Self::check_width(n, DEFAULT_WIDTH_CAP).expect("width out of range");
        Perm {
            n,
            image: (0..(1u32 << n)).collect(),
        }
    }

    fn check_width(n: u32, cap: u32) -> Result<()> {
        if !(2..=cap).contains(&n) {
            return Err(Error::WidthOutOfRange { n, cap });
        }
        Ok(())
    }

    /// Build from an image table, validating that it is a bijection.
    pub fn from_images(n: u32, image: Vec<Node>) -> Result<Perm> {
        Self::from_images_with_cap(n, image, DEFAULT_WIDTH_CAP)
    }

    /// Same as [`Perm::from_images`] with an explicit width cap.
    pub fn from_images_with_cap(n: u32, image: Vec<Node>, cap: u32) -> Result<Perm> {
        Self::check_width(n, cap)?;
        let size = 1usize << n;
        if image.len() != size {
            return Err(Error::BadTableLength {
                expected: size,
                got: image.len(),
            });
        }
        let mut seen = vec![false; size];
        for (pos, &y) in image.iter().enumerate() {
            if (y as usize) >= size || seen[y as usize] {
                return Err(Error::NotBijection {
                    position: pos as u32,
                    value: y,
                });
            }
            seen[y as usize] = true;
        }
        Ok(Perm { n, image })
    }

    /// Build from a list of disjoint cycles over explicit node indices.
    pub fn from_cycles(n: u32, cycles: &[Vec<Node>]) -> Result<Perm> {
        Self::check_width(n, DEFAULT_WIDTH_CAP)?;
        let size = 1u32 << n;
        let mut image: Vec<Node> = (0..size).collect();
        let mut touched = vec![false; size as usize];
        for cycle in cycles {
            for (k, &x) in cycle.iter().enumerate() {
                if x >= size {
                    return Err(Error::Parse(format!("node {x} out of range for n={n}")));
                }
                if touched[x as usize] {
                    return Err(Error::Parse(format!("node {x} appears in two cycles")));
                }
                touched[x as usize] = true;
                image[x as usize] = cycle[(k + 1) % cycle.len()];
            }
        }
        Ok(Perm { n, image })
    }

    pub fn width(&self) -> u32 {
        self.n
    }

    pub fn images(&self) -> &[Node] {
        &self.image
    }

    #[inline]
    pub fn apply(&self, x: Node) -> Node {
        self.image[x as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &y)| i as Node == y)
    }

    fn assert_same_width(&self, other: &Perm) {
        assert_eq!(
            self.n, other.n,
            "permutation widths differ: {} vs {}",
            self.n, other.n
        );
    }

    /// Product `self * other`; the right factor is applied first.
    pub fn compose(&self, other: &Perm) -> Perm {
        self.assert_same_width(other);
        let image = other.image.iter().map(|&y| self.image[y as usize]).collect();
        Perm { n: self.n, image }
    }

    /// Ordered product of several factors; the last is applied first.
    pub fn product(factors: &[&Perm]) -> Perm {
        let n = factors.first().expect("empty product").n;
        let mut acc = Perm::identity(n);
        for p in factors.iter().rev() {
            acc = p.compose(&acc);
        }
        acc
    }

    pub fn inverse(&self) -> Perm {
        let mut image = vec![0; self.image.len()];
        for (x, &y) in self.image.iter().enumerate() {
            image[y as usize] = x as Node;
        }
        Perm { n: self.n, image }
    }

    /// `h * self * h^-1`: relabels every cycle through `h`.
    pub fn conjugate_by(&self, h: &Perm) -> Perm {
        self.assert_same_width(h);
        let mut image = vec![0; self.image.len()];
        for (x, &y) in self.image.iter().enumerate() {
            image[h.image[x] as usize] = h.image[y as usize];
        }
        Perm { n: self.n, image }
    }

    /// Sign of the permutation.
    pub fn parity(&self) -> Parity {
        let moved_minus_cycles = self.cycle_iter_count();
        if moved_minus_cycles % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Number of transpositions mod 2: `sum over cycles of (len - 1)`.
    fn cycle_iter_count(&self) -> u64 {
        let mut visited = vec![false; self.image.len()];
        let mut transpositions = 0u64;
        for start in 0..self.image.len() {
            if visited[start] {
                continue;
            }
            let mut x = start;
            let mut len = 0u64;
            while !visited[x] {
                visited[x] = true;
                x = self.image[x] as usize;
                len += 1;
            }
            transpositions += len - 1;
        }
        transpositions
    }

    /// Disjoint cycles of length >= 2. Each cycle starts at its minimal
    /// element; cycles are sorted by that element.
    pub fn cycles(&self) -> Vec<Vec<Node>> {
        let mut visited = vec![false; self.image.len()];
        let mut out = Vec::new();
        for start in 0..self.image.len() {
            if visited[start] || self.image[start] as usize == start {
                visited[start] = true;
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !visited[x] {
                visited[x] = true;
                cycle.push(x as Node);
                x = self.image[x] as usize;
            }
            out.push(cycle);
        }
        out
    }

    /// Cycle type including fix-points as 1-cycles.
    pub fn cycle_pattern(&self) -> CyclePattern {
        let mut counts = BTreeMap::new();
        let mut visited = vec![false; self.image.len()];
        for start in 0..self.image.len() {
            if visited[start] {
                continue;
            }
            let mut x = start;
            let mut len = 0u64;
            while !visited[x] {
                visited[x] = true;
                x = self.image[x] as usize;
                len += 1;
            }
            *counts.entry(len).or_insert(0) += 1;
        }
        CyclePattern { counts }
    }

    /// Nodes moved by the permutation, ascending.
    pub fn support(&self) -> Vec<Node> {
        self.image
            .iter()
            .enumerate()
            .filter(|&(x, &y)| x as Node != y)
            .map(|(x, _)| x as Node)
            .collect()
    }

    /// Steps from `x` to `y` along the cycle of `x`, or `None` if `y` is
    /// unreachable.
    pub fn dist(&self, x: Node, y: Node) -> Option<u64> {
        let mut cur = x;
        let mut k = 0u64;
        loop {
            if cur == y {
                return Some(k);
            }
            cur = self.apply(cur);
            k += 1;
            if cur == x {
                return None;
            }
        }
    }

    /// `min(dist(x, y), dist(y, x))`.
    pub fn dist_min(&self, x: Node, y: Node) -> Option<u64> {
        match (self.dist(x, y), self.dist(y, x)) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Does the permutation fix bit `i` of every input?
    pub fn is_controlled(&self, i: Dim) -> bool {
        assert!(i >= 1 && i <= self.n, "dimension out of range");
        self.image
            .iter()
            .enumerate()
            .all(|(x, &y)| bit(x as Node, i, self.n) == bit(y, i, self.n))
    }

    /// Is the permutation controlled at `i` and identical on both halves?
    pub fn is_concurrent(&self, i: Dim) -> bool {
        if !self.is_controlled(i) {
            return false;
        }
        let mask = 1u32 << (self.n - i);
        self.image
            .iter()
            .enumerate()
            .all(|(x, &y)| self.image[x ^ mask as usize] == y ^ mask)
    }

    /// Sign of the `(n-1)`-bit action of a permutation concurrent at `i`.
    ///
    /// Panics if the permutation is not concurrent at `i`.
    pub fn concurrent_parity(&self, i: Dim) -> Parity {
        self.restrict(i)
            .expect("concurrent_parity requires a concurrent permutation")
            .parity()
    }

    /// The `(n-1)`-bit action of a permutation concurrent at `i`.
    pub fn restrict(&self, i: Dim) -> Result<Perm> {
        if !self.is_concurrent(i) {
            return Err(Error::NotConcurrent { dim: i });
        }
        let m = self.n - 1;
        let image = (0..(1u32 << m))
            .map(|y| delete_bit(self.apply(insert_bit(y, i, 0, self.n)), i, self.n))
            .collect();
        Ok(Perm { n: m, image })
    }

    /// Lift an `(n-1)`-bit permutation along dimension `i` of an `n`-bit
    /// space: the result applies `inner` on both `i`-halves.
    pub fn lift(inner: &Perm, i: Dim) -> Perm {
        let n = inner.n + 1;
        assert!(i >= 1 && i <= n, "dimension out of range");
        let image = (0..(1u32 << n))
            .map(|x| {
                let b = bit(x, i, n);
                insert_bit(inner.apply(delete_bit(x, i, n)), i, b, n)
            })
            .collect();
        Perm { n, image }
    }

    /// Split a permutation controlled at `i` into its two half actions
    /// `(f, g)`: `f` acts on the half with bit `i` = 0, `g` on bit `i` = 1.
    pub fn controlled_halves(&self, i: Dim) -> Result<(Perm, Perm)> {
        if !self.is_controlled(i) {
            return Err(Error::NotControlled { dim: i });
        }
        let m = self.n - 1;
        let half = |b: u32| -> Perm {
            let image = (0..(1u32 << m))
                .map(|y| delete_bit(self.apply(insert_bit(y, i, b, self.n)), i, self.n))
                .collect();
            Perm { n: m, image }
        };
        Ok((half(0), half(1)))
    }

    /// Inverse of [`Perm::controlled_halves`]: the permutation acting as `f`
    /// on the `i = 0` half and `g` on the `i = 1` half.
    pub fn assemble_halves(f: &Perm, g: &Perm, i: Dim) -> Perm {
        f.assert_same_width(g);
        let n = f.n + 1;
        let image = (0..(1u32 << n))
            .map(|x| {
                let b = bit(x, i, n);
                let y = delete_bit(x, i, n);
                let fy = if b == 0 { f.apply(y) } else { g.apply(y) };
                insert_bit(fy, i, b, n)
            })
            .collect();
        Perm { n, image }
    }

    /// The permutation acting as `q` on the half with bit `i` = 1 and as the
    /// identity on the other half.
    pub fn embed_upper_half(q: &Perm, i: Dim) -> Perm {
        let id = Perm::identity(q.n);
        Perm::assemble_halves(&id, q, i)
    }

    /// The involution `x -> x` with bit `i` flipped.
    pub fn bit_flip(n: u32, i: Dim) -> Perm {
        let image = (0..(1u32 << n)).map(|x| flip(x, i, n)).collect();
        Perm { n, image }
    }

    /// Relabel nodes by a permutation of bit positions: `dims[k]` is where
    /// input bit `k+1` is sent. Conjugation by the result moves structure
    /// between dimensions.
    pub fn bit_permutation(n: u32, dims: &[Dim]) -> Perm {
        assert_eq!(dims.len() as u32, n);
        let image = (0..(1u32 << n))
            .map(|x| {
                let mut y = 0;
                for (k, &d) in dims.iter().enumerate() {
                    y |= bit(x, k as Dim + 1, n) << (n - d);
                }
                y
            })
            .collect();
        Perm { n, image }
    }

    /// Uniformly random permutation from a seeded generator.
    pub fn random(n: u32, rng: &mut impl rand::Rng) -> Perm {
        use rand::seq::SliceRandom;
        let mut image: Vec<Node> = (0..(1u32 << n)).collect();
        image.shuffle(rng);
        Perm { n, image }
    }

    /// Random even permutation: a seeded shuffle, with the first two images
    /// swapped when the shuffle comes out odd.
    pub fn random_even(n: u32, rng: &mut impl rand::Rng) -> Perm {
        let mut p = Self::random(n, rng);
        if p.parity() == Parity::Odd {
            p.image.swap(0, 1);
        }
        p
    }

    /// SHA-256 digest of the image table, as lowercase hex.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.n.to_le_bytes());
        for &y in &self.image {
            hasher.update(y.to_le_bytes());
        }
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}


/// Lexicographic successor of `v` in place; false at the last permutation.
pub(crate) fn next_permutation(v: &mut [Node]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Multiset of cycle lengths: `counts[k]` is the number of `k`-cycles, with
/// fix-points stored as 1-cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclePattern {
    counts: BTreeMap<u64, u64>,
}

impl CyclePattern {
    pub fn new(counts: BTreeMap<u64, u64>) -> CyclePattern {
        CyclePattern { counts }
    }

    pub fn from_pairs(pairs: &[(u64, u64)]) -> CyclePattern {
        let mut counts = BTreeMap::new();
        for &(len, mult) in pairs {
            if mult > 0 {
                *counts.entry(len).or_insert(0) += mult;
            }
        }
        CyclePattern { counts }
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn count(&self, len: u64) -> u64 {
        self.counts.get(&len).copied().unwrap_or(0)
    }

    /// Sum of `k * counts[k]`: the number of nodes covered.
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|(k, c)| k * c).sum()
    }

    /// True when none of the given lengths occur.
    pub fn free_of(&self, lengths: &[u64]) -> bool {
        lengths.iter().all(|l| self.count(*l) == 0)
    }

    /// Number of cycles of length >= 2.
    pub fn nontrivial_cycles(&self) -> u64 {
        self.counts
            .iter()
            .filter(|(k, _)| **k >= 2)
            .map(|(_, c)| c)
            .sum()
    }

    pub fn max_len(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// Sign of any permutation with this pattern.
    pub fn parity(&self) -> Parity {
        let transpositions: u64 = self.counts.iter().map(|(k, c)| (k - 1) * c).sum();
        if transpositions % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for CyclePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .counts
            .iter()
            .map(|(k, c)| format!("{k}^{c}"))
            .collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_cycles;
    use rand::SeedableRng;

    /// The 4-bit permutation used as the running example throughout the
    /// test suite: a 3-cycle and two 4-cycles.
    pub(crate) fn demo4() -> Perm {
        parse_cycles(
            4,
            "(1001,1100,0101)(1110,0110,0111,1111)(1010,0010,0011,1011)",
        )
        .unwrap()
    }

    #[test]
    fn compose_identity_and_inverse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let q = Perm::random(5, &mut rng);
        assert_eq!(Perm::identity(5).compose(&q), q);
        assert!(q.compose(&q.inverse()).is_identity());
    }

    #[test]
    fn demo_three_layer_product() {
        let pi1 = parse_cycles(4, "(1110,0111)(1010,0011)").unwrap();
        let pi2 = parse_cycles(4, "(0100,0101)(0000,0001)").unwrap();
        let pi3 = parse_cycles(4, "(0100,1110)(0000,1010)(1101,0110)(1001,0010)").unwrap();
        let product = Perm::product(&[&pi1, &pi2, &pi3]);
        let expected = parse_cycles(
            4,
            "(0000,0011,1010,0001)(0100,0111,1110,0101)(0010,1001)(0110,1101)",
        )
        .unwrap();
        assert_eq!(product, expected);
    }

    #[test]
    fn parity_of_three_transpositions_is_odd() {
        let p = parse_cycles(3, "(000,001)(101,111)(010,110)").unwrap();
        assert_eq!(p.parity(), Parity::Odd);
        assert_eq!(Perm::identity(3).parity(), Parity::Even);
        assert_eq!(demo4().parity(), Parity::Even);
    }

    #[test]
    fn cycle_pattern_identity() {
        let pat = Perm::identity(2).cycle_pattern();
        assert_eq!(pat.count(1), 4);
        assert_eq!(pat.total(), 4);
    }

    #[test]
    fn halves_quotient_cycles() {
        // f and g of the worked controlled permutation; f^-1 g has a 4-cycle
        // and a 2-cycle.
        let f = parse_cycles(3, "(000,001)(010,011)(100,101)(110,111)").unwrap();
        let g = parse_cycles(3, "(000,100,111,110,001,011,010)").unwrap();
        let q = f.inverse().compose(&g);
        let expected = parse_cycles(3, "(000,101,100,110)(001,010)").unwrap();
        assert_eq!(q, expected);
        let pat = q.cycle_pattern();
        assert_eq!((pat.count(4), pat.count(2), pat.count(1)), (1, 1, 2));
    }

    #[test]
    fn cycles_recompose() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = Perm::random(6, &mut rng);
            let rebuilt = Perm::from_cycles(6, &p.cycles()).unwrap();
            assert_eq!(p, rebuilt);
        }
    }

    #[test]
    fn concurrency_predicates() {
        let tau = parse_cycles(2, "(00,01)(10,11)").unwrap();
        assert!(tau.is_concurrent(1));
        let inner = tau.restrict(1).unwrap();
        assert_eq!(inner.apply(0), 1);
        assert_eq!(Perm::lift(&inner, 1), tau);

        let pi8 = parse_cycles(4, "(1010,1110)(1000,1100)").unwrap();
        assert!(pi8.is_concurrent(3));
        assert!(!pi8.is_concurrent(1));

        let id = Perm::identity(4);
        for d in 1..=4 {
            assert!(id.is_concurrent(d));
            assert_eq!(id.concurrent_parity(d), Parity::Even);
        }
    }

    #[test]
    fn lift_restrict_round_trip_exhaustive_n3() {
        // all 24 two-bit permutations, lifted along each dimension
        let mut images: Vec<Node> = vec![0, 1, 2, 3];
        loop {
            let inner = Perm::from_images(2, images.clone()).unwrap();
            for d in 1..=3 {
                let lifted = Perm::lift(&inner, d);
                assert!(lifted.is_concurrent(d));
                assert_eq!(lifted.restrict(d).unwrap(), inner);
                // lifted blocks are even regardless of the inner parity
                assert_eq!(lifted.parity(), Parity::Even);
            }
            if !next_permutation(&mut images) {
                break;
            }
        }
    }

    #[test]
    fn controlled_halves_round_trip() {
        let sigma1 = parse_cycles(
            4,
            "(0000,0001)(0010,0011)(0100,0101)(0110,0111)(1000,1100,1111,1110,1001,1011,1010)",
        )
        .unwrap();
        assert!(sigma1.is_controlled(1));
        let (f, g) = sigma1.controlled_halves(1).unwrap();
        assert_eq!(
            f,
            parse_cycles(3, "(000,001)(010,011)(100,101)(110,111)").unwrap()
        );
        assert_eq!(g, parse_cycles(3, "(000,100,111,110,001,011,010)").unwrap());
        assert_eq!(Perm::assemble_halves(&f, &g, 1), sigma1);

        let id = Perm::identity(4);
        let (fi, gi) = id.controlled_halves(2).unwrap();
        assert!(fi.is_identity() && gi.is_identity());
    }

    #[test]
    fn conjugation_matches_fixture() {
        let q = parse_cycles(3, "(000,101,100,110)(001,010)").unwrap();
        let h = parse_cycles(3, "(101,111)(001,010,110,011)").unwrap();
        let s1 = parse_cycles(3, "(000,011)(100,111)").unwrap();
        let s2 = parse_cycles(3, "(010,110)(000,100)").unwrap();
        assert_eq!(q.conjugate_by(&h), s1.compose(&s2));
        assert_eq!(q.conjugate_by(&Perm::identity(3)), q);
    }

    #[test]
    fn conjugation_preserves_pattern() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = Perm::random(6, &mut rng);
            let h = Perm::random(6, &mut rng);
            assert_eq!(p.conjugate_by(&h).cycle_pattern(), p.cycle_pattern());
        }
    }

    #[test]
    fn distances_within_and_across_cycles() {
        let p = parse_cycles(3, "(000,101,100,110)(001,010)").unwrap();
        assert_eq!(p.dist(0b000, 0b000), Some(0));
        assert_eq!(p.dist(0b000, 0b100), Some(2));
        assert_eq!(p.dist_min(0b000, 0b110), Some(1));
        assert_eq!(p.dist(0b000, 0b001), None);
        assert_eq!(p.dist_min(0b000, 0b001), None);
    }

    #[test]
    fn support_lists_moved_nodes() {
        let p = parse_cycles(3, "(001,010)").unwrap();
        assert_eq!(p.support(), vec![0b001, 0b010]);
        assert!(Perm::identity(3).support().is_empty());
    }

    #[test]
    fn parity_homomorphism_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for n in [3, 6, 9, 12] {
            for _ in 0..10 {
                let p = Perm::random(n, &mut rng);
                let q = Perm::random(n, &mut rng);
                assert_eq!(p.compose(&q).parity(), p.parity().xor(q.parity()));
            }
        }
    }

    #[test]
    fn random_even_is_even() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            assert_eq!(Perm::random_even(5, &mut rng).parity(), Parity::Even);
        }
    }

    #[test]
    fn bit_helpers() {
        // bit 1 is the most significant position: 1100 has bits 1,2 set
        let x = 0b1100;
        assert_eq!(bit(x, 1, 4), 1);
        assert_eq!(bit(x, 4, 4), 0);
        assert_eq!(flip(x, 4, 4), 0b1101);
        assert_eq!(delete_bit(0b1100, 2, 4), 0b100);
        assert_eq!(insert_bit(0b100, 2, 1, 4), 0b1100);
        assert_eq!(insert_bit(delete_bit(0b1011, 3, 4), 3, 1, 4), 0b1011);
    }
}
