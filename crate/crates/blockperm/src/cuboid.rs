//! Colored-cuboid analysis: turning an even permutation into one that fixes
//! a chosen bit, using three concurrent blocks.
//!
//! Fix two dimensions `r1`, `r2` and compress the rest. Node `x` is painted
//! black when the permutation moves it to the wrong `r1`-half, i.e. when
//! `sigma(x)_{r1} != x_{r1}`. The permutation is controlled at `r1` exactly
//! when the cuboid is all white. Right-multiplying by a block concurrent at
//! `r2` permutes the `r2`-pair colors, flipping a pair whenever it crosses
//! faces; a block concurrent at `r1` permutes colors within both faces
//! identically and never flips. Whitening the cuboid with a
//! (`r2`, `r1`, `r2`) layer sandwich is a combinatorial matching problem on
//! pair colors, solved below.

use serde::Serialize;

use crate::blocks::Block;
use crate::error::{Error, Result};
use crate::perm::{bit, flip, insert_bit, reduced_dim, Dim, Node, Parity, Perm};

/// Tallies of the four `r2`-pair color types on each face.
///
/// For the pair `{x, x^r2}` read as (color at `x_{r2}` = 0, color at
/// `x_{r2}` = 1): type 1 = (white, black), type 2 = (black, white),
/// type 3 = (black, black), type 4 = (white, white). The `a` counts are
/// pairs on the face `x_{r1}` = 1, the `b` counts on `x_{r1}` = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairCounts {
    pub a1: u64,
    pub a2: u64,
    pub a3: u64,
    pub a4: u64,
    pub b1: u64,
    pub b2: u64,
    pub b3: u64,
    pub b4: u64,
}

impl PairCounts {
    pub fn a_sum(&self) -> u64 {
        self.a1 + self.a2 + self.a3 + self.a4
    }

    pub fn b_sum(&self) -> u64 {
        self.b1 + self.b2 + self.b3 + self.b4
    }

    /// Number of monochromatic pairs, the quantity the case split keys on.
    pub fn mono_sum(&self) -> u64 {
        self.a3 + self.a4 + self.b3 + self.b4
    }

    /// Consistency checks every cuboid of a real permutation satisfies.
    pub fn validate(&self) -> Result<()> {
        if self.a_sum() != self.b_sum() {
            return Err(Error::Internal(format!(
                "pair counts unbalanced: {} top vs {} bottom",
                self.a_sum(),
                self.b_sum()
            )));
        }
        // black nodes split evenly across faces
        if self.a1 + self.a2 + 2 * self.a3 != self.b1 + self.b2 + 2 * self.b3 {
            return Err(Error::Internal("black node count differs per face".into()));
        }
        if self.mono_sum() % 2 != 0 {
            return Err(Error::Internal("odd monochromatic pair count".into()));
        }
        Ok(())
    }
}

/// Card tallies of the canonical form, computable from pre-canonical counts.
///
/// An A-card pairs a (white, black) top pair with a (black, white) bottom
/// pair, a B-card pairs (white, black) with (white, black), and a C-card is
/// all white. `alpha + beta + gamma = 2^(n-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CardTally {
    pub alpha: u64,
    pub beta: u64,
    pub gamma: u64,
}

/// `alpha = (a1 - a2 + b2 - b1) / 2`, `beta = b1 + a2`,
/// `gamma = (a3 + a4 + b3 + b4) / 2`. Valid when `a2 + a3 <= b2 + b3`.
pub fn card_tally(c: &PairCounts) -> Result<CardTally> {
    let twice_alpha = (c.a1 + c.b2)
        .checked_sub(c.a2 + c.b1)
        .ok_or_else(|| Error::Internal("negative card tally; mirror faces first".into()))?;
    Ok(CardTally {
        alpha: twice_alpha / 2,
        beta: c.b1 + c.a2,
        gamma: c.mono_sum() / 2,
    })
}

/// The black-white coloring of `{0,1}^n` with respect to `(r1, r2)`.
#[derive(Debug, Clone)]
pub struct Cuboid {
    pub r1: Dim,
    pub r2: Dim,
    /// `color[x]` is true when node `x` is black.
    pub color: Vec<bool>,
    pub counts: PairCounts,
}

impl Cuboid {
    pub fn is_white(&self) -> bool {
        self.color.iter().all(|&c| !c)
    }
}

fn check_dim(d: Dim, n: u32) -> Result<()> {
    if d < 1 || d > n {
        return Err(Error::DimOutOfRange { dim: d, n });
    }
    Ok(())
}

/// Paint node `x` black iff `sigma(x)_{r1} != x_{r1}` and tally the
/// `r2`-pair types.
pub fn build_cuboid(sigma: &Perm, r1: Dim, r2: Dim) -> Result<Cuboid> {
    let n = sigma.width();
    check_dim(r1, n)?;
    check_dim(r2, n)?;
    if r1 == r2 {
        return Err(Error::DimsNotDistinct(vec![r1, r2]));
    }
    let color: Vec<bool> = (0..(1u32 << n))
        .map(|x| bit(sigma.apply(x), r1, n) != bit(x, r1, n))
        .collect();
    let mut counts = PairCounts {
        a1: 0,
        a2: 0,
        a3: 0,
        a4: 0,
        b1: 0,
        b2: 0,
        b3: 0,
        b4: 0,
    };
    for x in 0..(1u32 << n) {
        if bit(x, r2, n) != 0 {
            continue; // visit each pair once, at its r2 = 0 end
        }
        let c0 = color[x as usize];
        let c1 = color[flip(x, r2, n) as usize];
        let top = bit(x, r1, n) == 1;
        let slot = match (c0, c1) {
            (false, true) => 0,
            (true, false) => 1,
            (true, true) => 2,
            (false, false) => 3,
        };
        let tally = if top {
            [&mut counts.a1, &mut counts.a2, &mut counts.a3, &mut counts.a4]
        } else {
            [&mut counts.b1, &mut counts.b2, &mut counts.b3, &mut counts.b4]
        };
        *tally[slot] += 1;
    }
    counts.validate()?;
    Ok(Cuboid {
        r1,
        r2,
        color,
        counts,
    })
}

/// Count vertical pairs `{x, x^r1}` that are mixed-color (`eta`) and
/// both-black (`xi`).
pub fn vertical_pair_stats(sigma: &Perm, r1: Dim) -> (u64, u64) {
    let n = sigma.width();
    let mut eta = 0;
    let mut xi = 0;
    for x in 0..(1u32 << n) {
        if bit(x, r1, n) != 0 {
            continue;
        }
        let c0 = bit(sigma.apply(x), r1, n) != 0;
        let y = flip(x, r1, n);
        let c1 = bit(sigma.apply(y), r1, n) == 0;
        if c0 != c1 {
            eta += 1;
        }
        if c0 && c1 {
            xi += 1;
        }
    }
    (eta, xi)
}

/// Solvability classification of a cuboid from its pair counts.
///
/// In card tallies: `Good1` is `gamma >= 2`, `Good2` is `gamma = 1` with
/// `beta >= 1`, `Good3` is `gamma = 0` with `beta` even. The bad cases are
/// the two remaining combinations; they cannot be whitened with layers on
/// (`r2`, `r1`, `r2`) and force a different second dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseLabel {
    Good1,
    Good2,
    Good3,
    Bad1,
    Bad2,
}

impl CaseLabel {
    pub fn is_good(self) -> bool {
        matches!(self, CaseLabel::Good1 | CaseLabel::Good2 | CaseLabel::Good3)
    }
}

/// Classify pair counts into the five solvability cases.
pub fn case_classify(c: &PairCounts) -> CaseLabel {
    debug_assert!(c.validate().is_ok());
    let mono = c.mono_sum();
    let lo = (c.b1 + c.a2).min(c.a1 + c.b2);
    if mono > 2 {
        CaseLabel::Good1
    } else if mono == 2 {
        if lo > 0 {
            CaseLabel::Good2
        } else {
            CaseLabel::Bad1
        }
    } else if (c.b1 + c.a2) % 2 == 0 {
        CaseLabel::Good3
    } else {
        CaseLabel::Bad2
    }
}

/// Recount pair types after replacing the pair dimension `r2` by `r3`.
pub fn switch_dimension_counts(sigma: &Perm, r1: Dim, r2: Dim, r3: Dim) -> Result<PairCounts> {
    if r1 == r2 || r1 == r3 || r2 == r3 {
        return Err(Error::DimsNotDistinct(vec![r1, r2, r3]));
    }
    Ok(build_cuboid(sigma, r1, r3)?.counts)
}

// ---------------------------------------------------------------------------
// Layer engine.
//
// Positions for a layer concurrent at r2 are (n-1)-bit indices with bit r2
// deleted ("pair positions"); the layer is the lift of a permutation of
// those. Positions for the middle layer are indices with bit r1 deleted
// ("cells"). Colors are always recomputed from the running product, so each
// phase reads ground truth instead of propagating deltas.
// ---------------------------------------------------------------------------

struct PairSpace {
    n: u32,
    r1: Dim,
    r2: Dim,
    r1_in_pair: Dim, // position of r1 after deleting r2
    r2_in_cell: Dim, // position of r2 after deleting r1
}

impl PairSpace {
    fn new(n: u32, r1: Dim, r2: Dim) -> PairSpace {
        PairSpace {
            n,
            r1,
            r2,
            r1_in_pair: reduced_dim(r1, r2),
            r2_in_cell: reduced_dim(r2, r1),
        }
    }

    fn pair_count(&self) -> u32 {
        1 << (self.n - 1)
    }

    /// Face (bit r1) of a pair position.
    fn face(&self, p: Node) -> u32 {
        bit(p, self.r1_in_pair, self.n - 1)
    }

    /// Colors of the two nodes of pair `p`, ordered by the r2 bit.
    fn pair_colors(&self, color: &[bool], p: Node) -> (bool, bool) {
        let x0 = insert_bit(p, self.r2, 0, self.n);
        let x1 = insert_bit(p, self.r2, 1, self.n);
        (color[x0 as usize], color[x1 as usize])
    }

    /// Pair position for (face, compressed column).
    fn pair_at(&self, face: u32, z: Node) -> Node {
        insert_bit(z, self.r1_in_pair, face, self.n - 1)
    }

    /// Cell position for (r2 side, compressed column).
    fn cell_at(&self, side: u32, z: Node) -> Node {
        insert_bit(z, self.r2_in_cell, side, self.n - 1)
    }

    /// (top color, bottom color) of cell `c`.
    fn cell_colors(&self, color: &[bool], c: Node) -> (bool, bool) {
        let x_top = insert_bit(c, self.r1, 1, self.n);
        let x_bot = insert_bit(c, self.r1, 0, self.n);
        (color[x_top as usize], color[x_bot as usize])
    }
}

fn colors_of(sigma: &Perm, r1: Dim) -> Vec<bool> {
    let n = sigma.width();
    (0..(1u32 << n))
        .map(|x| bit(sigma.apply(x), r1, n) != bit(x, r1, n))
        .collect()
}

fn perm_from_swaps(n: u32, swaps: &[(Node, Node)]) -> Perm {
    let mut image: Vec<Node> = (0..(1u32 << n)).collect();
    for &(u, v) in swaps {
        image.swap(u as usize, v as usize);
    }
    Perm::from_images(n, image).expect("swap list forms a permutation")
}

/// Deterministic column layout of a canonical cuboid.
#[derive(Debug, Clone)]
struct CanonicalLayout {
    alpha: u64,
    beta: u64,
    gamma: u64,
}

/// First canonicalization phase: cross face-changing swaps so that no
/// (black, white) top pairs and no both-black pairs remain. Requires
/// `a2 + a3 <= b2 + b3`.
fn canonical_phase_one(sigma: &Perm, sp: &PairSpace) -> Result<Perm> {
    let color = colors_of(sigma, sp.r1);
    let mut a1 = Vec::new();
    let mut a2 = Vec::new();
    let mut a3 = Vec::new();
    let mut b2 = Vec::new();
    let mut b3 = Vec::new();
    for p in 0..sp.pair_count() {
        let (c0, c1) = sp.pair_colors(&color, p);
        let top = sp.face(p) == 1;
        match (top, c0, c1) {
            (true, false, true) => a1.push(p),
            (true, true, false) => a2.push(p),
            (true, true, true) => a3.push(p),
            (false, true, false) => b2.push(p),
            (false, true, true) => b3.push(p),
            _ => {}
        }
    }
    if a2.len() + a3.len() > b2.len() + b3.len() {
        return Err(Error::MirrorRequired {
            lhs: (a2.len() + a3.len()) as u64,
            rhs: (b2.len() + b3.len()) as u64,
        });
    }
    // Down-crossers: every (black, white) and both-black top pair; pad with
    // type-1 tops when more pairs must rise than fall. Up-crossers: every
    // both-black bottom pair, padded with (black, white) bottoms.
    let mut down: Vec<Node> = a2.iter().chain(a3.iter()).copied().collect();
    let mut up: Vec<Node> = b3.clone();
    if down.len() < up.len() {
        let need = up.len() - down.len();
        down.extend(a1.iter().take(need));
    } else {
        let need = down.len() - up.len();
        debug_assert!(need <= b2.len(), "phase one padding exceeds b2");
        up.extend(b2.iter().take(need));
    }
    debug_assert_eq!(down.len(), up.len());
    let swaps: Vec<(Node, Node)> = down.into_iter().zip(up).collect();
    Ok(perm_from_swaps(sp.n - 1, &swaps))
}

/// Second phase: same-face rearrangement into A-, B-, C-cards at ascending
/// column indices.
fn canonical_phase_two(sigma: &Perm, sp: &PairSpace) -> Result<(Perm, CanonicalLayout)> {
    let color = colors_of(sigma, sp.r1);
    let mut top_wb = Vec::new();
    let mut top_ww = Vec::new();
    let mut bot_wb = Vec::new();
    let mut bot_bw = Vec::new();
    let mut bot_ww = Vec::new();
    for p in 0..sp.pair_count() {
        let (c0, c1) = sp.pair_colors(&color, p);
        let top = sp.face(p) == 1;
        match (top, c0, c1) {
            (true, false, true) => top_wb.push(p),
            (true, false, false) => top_ww.push(p),
            (false, false, true) => bot_wb.push(p),
            (false, true, false) => bot_bw.push(p),
            (false, false, false) => bot_ww.push(p),
            other => {
                return Err(Error::Internal(format!(
                    "unexpected pair type {other:?} after phase one"
                )))
            }
        }
    }
    let alpha = bot_bw.len() as u64;
    let beta = bot_wb.len() as u64;
    let gamma = top_ww.len() as u64;
    if top_wb.len() as u64 != alpha + beta || bot_ww.len() as u64 != gamma {
        return Err(Error::Internal("canonical tallies inconsistent".into()));
    }
    let cols = 1u32 << (sp.n - 2);
    let mut map: Vec<Node> = (0..sp.pair_count()).collect();
    for k in 0..cols {
        let (top_src, bot_src) = if (k as u64) < alpha {
            (top_wb[k as usize], bot_bw[k as usize])
        } else if (k as u64) < alpha + beta {
            (top_wb[k as usize], bot_wb[k as usize - alpha as usize])
        } else {
            let j = k as usize - (alpha + beta) as usize;
            (top_ww[j], bot_ww[j])
        };
        map[sp.pair_at(1, k) as usize] = top_src;
        map[sp.pair_at(0, k) as usize] = bot_src;
    }
    let phase_two =
        Perm::from_images(sp.n - 1, map).map_err(|e| Error::Internal(format!("phase two: {e}")))?;
    Ok((phase_two, CanonicalLayout { alpha, beta, gamma }))
}

/// Bring the cuboid to canonical card form with a block concurrent at `r2`.
///
/// Requires `a2 + a3 <= b2 + b3`; callers mirror the faces (conjugate by the
/// `r1` bit flip) when the inequality points the other way.
pub fn canonicalize(sigma: &Perm, r1: Dim, r2: Dim) -> Result<Perm> {
    let (pi, _) = canonicalize_with_layout(sigma, r1, r2)?;
    Ok(pi)
}

fn canonicalize_with_layout(sigma: &Perm, r1: Dim, r2: Dim) -> Result<(Perm, CanonicalLayout)> {
    let n = sigma.width();
    check_dim(r1, n)?;
    check_dim(r2, n)?;
    if r1 == r2 {
        return Err(Error::DimsNotDistinct(vec![r1, r2]));
    }
    let sp = PairSpace::new(n, r1, r2);
    let phase1 = canonical_phase_one(sigma, &sp)?;
    let after1 = sigma.compose(&Perm::lift(&phase1, r2));
    debug_assert!(phase_one_postcondition(&after1, &sp));
    let (phase2, layout) = canonical_phase_two(&after1, &sp)?;
    Ok((Perm::lift(&phase1.compose(&phase2), r2), layout))
}

/// Intermediate state of canonicalization, exposed for tests: after phase
/// one, counts satisfy `a2 = a3 = b3 = 0` and `a4 = b4`.
#[cfg(test)]
pub(crate) fn canonical_intermediate(sigma: &Perm, r1: Dim, r2: Dim) -> Result<Perm> {
    let sp = PairSpace::new(sigma.width(), r1, r2);
    let phase1 = canonical_phase_one(sigma, &sp)?;
    Ok(sigma.compose(&Perm::lift(&phase1, r2)))
}

fn phase_one_postcondition(sigma: &Perm, sp: &PairSpace) -> bool {
    let c = build_cuboid(sigma, sp.r1, sp.r2).unwrap().counts;
    c.a2 == 0 && c.a3 == 0 && c.b3 == 0 && c.a4 == c.b4
}

/// Joint (top, bottom) color of a cell, as a bucket index.
fn j_bucket(colors: (bool, bool)) -> usize {
    match colors {
        (false, false) => 0,
        (false, true) => 1,
        (true, false) => 2,
        (true, true) => 3,
    }
}

/// Parity-fixing moves on the canonical form, keyed by (alpha, beta) parity.
/// Each move changes the counts of bichromatic and both-black cells to even
/// numbers, which is exactly what the last two layers need.
fn parity_fix(layout: &CanonicalLayout, sp: &PairSpace, label: CaseLabel) -> Result<Perm> {
    let alpha = layout.alpha;
    let beta = layout.beta;
    let gamma = layout.gamma;
    let a_col = |k: u64| k as Node;
    let b_col = |k: u64| (alpha + k) as Node;
    let c_col = |k: u64| (alpha + beta + k) as Node;
    let id = Perm::identity(sp.n - 1);
    let swaps: Vec<(Node, Node)> = match (alpha % 2 == 1, beta % 2 == 1) {
        (false, false) => return Ok(id),
        (true, true) => {
            // re-pair one B bottom with a C bottom
            debug_assert!(beta >= 1 && gamma >= 1);
            vec![(sp.pair_at(0, b_col(0)), sp.pair_at(0, c_col(0)))]
        }
        (true, false) => {
            if beta >= 1 {
                debug_assert!(gamma >= 1);
                vec![(sp.pair_at(0, b_col(0)), sp.pair_at(1, c_col(0)))]
            } else {
                // lone A parity: push the A card and a C card across faces
                if gamma < 2 {
                    return Err(Error::BadCase(label));
                }
                vec![
                    (sp.pair_at(0, a_col(0)), sp.pair_at(1, c_col(0))),
                    (sp.pair_at(0, c_col(0)), sp.pair_at(1, c_col(1))),
                ]
            }
        }
        (false, true) => {
            if alpha >= 1 {
                debug_assert!(gamma >= 1);
                vec![(sp.pair_at(0, a_col(0)), sp.pair_at(1, c_col(0)))]
            } else if gamma >= 2 {
                vec![
                    (sp.pair_at(0, b_col(0)), sp.pair_at(1, c_col(0))),
                    (sp.pair_at(0, c_col(0)), sp.pair_at(1, c_col(1))),
                ]
            } else if gamma == 1 && beta >= 3 {
                // one cross swap plus a bottom 3-cycle over three B columns
                let mut image: Vec<Node> = (0..sp.pair_count()).collect();
                let x0 = sp.pair_at(0, b_col(0));
                let y0 = sp.pair_at(1, c_col(0));
                image.swap(x0 as usize, y0 as usize);
                let p1 = sp.pair_at(0, b_col(1));
                let p2 = sp.pair_at(0, b_col(2));
                let p3 = sp.pair_at(0, c_col(0));
                // pull sources around: p1 <- p2 <- p3 <- p1
                let tmp = image[p1 as usize];
                image[p1 as usize] = image[p2 as usize];
                image[p2 as usize] = image[p3 as usize];
                image[p3 as usize] = tmp;
                return Perm::from_images(sp.n - 1, image)
                    .map_err(|e| Error::Internal(format!("parity fix: {e}")));
            } else {
                return Err(Error::BadCase(label));
            }
        }
    };
    Ok(perm_from_swaps(sp.n - 1, &swaps))
}

/// Middle layer: group cells of equal joint color into common columns.
fn pair_cells(sigma: &Perm, sp: &PairSpace) -> Result<Perm> {
    let color = colors_of(sigma, sp.r1);
    let mut buckets: [Vec<Node>; 4] = Default::default();
    for c in 0..(1u32 << (sp.n - 1)) {
        buckets[j_bucket(sp.cell_colors(&color, c))].push(c);
    }
    for b in &buckets {
        if b.len() % 2 != 0 {
            return Err(Error::Internal(
                "cell colors not pairable; parity fix failed".into(),
            ));
        }
    }
    let mut pairs = Vec::with_capacity(1 << (sp.n - 2));
    for b in &buckets {
        for chunk in b.chunks(2) {
            pairs.push((chunk[0], chunk[1]));
        }
    }
    let mut map: Vec<Node> = (0..(1u32 << (sp.n - 1))).collect();
    for (k, &(c0, c1)) in pairs.iter().enumerate() {
        map[sp.cell_at(0, k as Node) as usize] = c0;
        map[sp.cell_at(1, k as Node) as usize] = c1;
    }
    Perm::from_images(sp.n - 1, map).map_err(|e| Error::Internal(format!("cell pairing: {e}")))
}

/// Final layer: swap both-black pairs across faces.
fn whiten(sigma: &Perm, sp: &PairSpace) -> Result<Perm> {
    let color = colors_of(sigma, sp.r1);
    let mut bb_top = Vec::new();
    let mut bb_bot = Vec::new();
    for p in 0..sp.pair_count() {
        match (sp.face(p) == 1, sp.pair_colors(&color, p)) {
            (_, (false, false)) => {}
            (true, (true, true)) => bb_top.push(p),
            (false, (true, true)) => bb_bot.push(p),
            other => {
                return Err(Error::Internal(format!(
                    "bichromatic pair {other:?} at whitening"
                )))
            }
        }
    }
    if bb_top.len() != bb_bot.len() {
        return Err(Error::Internal("unbalanced both-black pairs".into()));
    }
    let swaps: Vec<(Node, Node)> = bb_top.into_iter().zip(bb_bot).collect();
    Ok(perm_from_swaps(sp.n - 1, &swaps))
}

/// Make a layer even by appending a transposition that fixes the current
/// coloring: two same-face pairs of equal colors, or a cross-face pair of
/// complementary colors.
fn evening_move_pairs(sigma: &Perm, sp: &PairSpace) -> Option<(Node, Node)> {
    let color = colors_of(sigma, sp.r1);
    let mut seen: [[Option<Node>; 4]; 2] = [[None; 4]; 2];
    for p in 0..sp.pair_count() {
        let f = sp.face(p) as usize;
        let k = j_bucket(sp.pair_colors(&color, p));
        if let Some(q) = seen[f][k] {
            return Some((q, p));
        }
        seen[f][k] = Some(p);
    }
    // complementary cross-face pair
    for p in 0..sp.pair_count() {
        if sp.face(p) != 1 {
            continue;
        }
        let (c0, c1) = sp.pair_colors(&color, p);
        for q in 0..sp.pair_count() {
            if sp.face(q) == 0 && sp.pair_colors(&color, q) == (!c0, !c1) {
                return Some((p, q));
            }
        }
    }
    None
}

/// The three whitening layers for a cuboid in a good case.
///
/// Returns (`pi1`, `sigma1`, `pi2`) with `pi1`, `pi2` concurrent at `rd`,
/// `sigma1` concurrent at `r1`, and `sigma * pi1 * sigma1 * pi2` controlled
/// at `r1`. With `even_blocks`, every layer also has an even inner action.
fn solve_layers(
    sigma: &Perm,
    r1: Dim,
    rd: Dim,
    even_blocks: bool,
) -> Result<(Perm, Perm, Perm)> {
    let n = sigma.width();
    let counts = build_cuboid(sigma, r1, rd)?.counts;
    let label = case_classify(&counts);
    if !label.is_good() {
        return Err(Error::BadCase(label));
    }
    if counts.a2 + counts.a3 > counts.b2 + counts.b3 {
        let f = Perm::bit_flip(n, r1);
        let mirrored = sigma.conjugate_by(&f);
        let (p1, s1, p2) = solve_layers(&mirrored, r1, rd, even_blocks)?;
        return Ok((
            p1.conjugate_by(&f),
            s1.conjugate_by(&f),
            p2.conjugate_by(&f),
        ));
    }

    let sp = PairSpace::new(n, r1, rd);
    let phase1 = canonical_phase_one(sigma, &sp)?;
    let state1 = sigma.compose(&Perm::lift(&phase1, rd));
    let (phase2, layout) = canonical_phase_two(&state1, &sp)?;
    let fix = parity_fix(&layout, &sp, label)?;
    let mut layer1 = phase1.compose(&phase2).compose(&fix);
    let mut state2 = sigma.compose(&Perm::lift(&layer1, rd));
    if even_blocks && layer1.parity() == Parity::Odd {
        let (p, q) = evening_move_pairs(&state2, &sp).ok_or_else(|| {
            Error::Internal("no color-preserving transposition for the first layer".into())
        })?;
        layer1 = layer1.compose(&perm_from_swaps(n - 1, &[(p, q)]));
        state2 = sigma.compose(&Perm::lift(&layer1, rd));
    }

    let mut layer2 = pair_cells(&state2, &sp)?;
    if even_blocks && layer2.parity() == Parity::Odd {
        // the two cells of any column carry equal colors after pairing
        let t = (sp.cell_at(0, 0), sp.cell_at(1, 0));
        layer2 = layer2.compose(&perm_from_swaps(n - 1, &[t]));
    }
    let state3 = state2.compose(&Perm::lift(&layer2, r1));

    let mut layer3 = whiten(&state3, &sp)?;
    if even_blocks && layer3.parity() == Parity::Odd {
        let t = (sp.pair_at(1, 0), sp.pair_at(1, 1));
        layer3 = layer3.compose(&perm_from_swaps(n - 1, &[t]));
    }

    Ok((
        Perm::lift(&layer1, rd),
        Perm::lift(&layer2, r1),
        Perm::lift(&layer3, rd),
    ))
}

/// Whiten a good-case cuboid: returns (`pi1`, `sigma1`, `pi2`) such that
/// `sigma * pi1 * sigma1 * pi2` is controlled at `r1`.
pub fn solve_good(sigma: &Perm, r1: Dim, r2: Dim) -> Result<(Perm, Perm, Perm)> {
    solve_layers(sigma, r1, r2, false)
}

/// Result of [`to_controlled`]: the three blocks and the controlled product.
pub type Controlled = ([Block; 3], Perm);

pub(crate) fn to_controlled_impl(
    sigma: &Perm,
    r1: Dim,
    even_blocks: bool,
) -> Result<(Controlled, Vec<String>)> {
    let n = sigma.width();
    check_dim(r1, n)?;
    if n < 4 {
        return Err(Error::WidthTooSmall {
            op: "to_controlled",
            n,
            min: 4,
        });
    }
    if sigma.parity() == Parity::Odd {
        return Err(Error::OddPermutation(
            "only even permutations can be made controlled",
        ));
    }
    let fallback_dim = if r1 == 1 { 2 } else { 1 };
    if sigma.is_controlled(r1) {
        let blocks = [
            Block::identity(fallback_dim, n),
            Block::identity(r1, n),
            Block::identity(fallback_dim, n),
        ];
        return Ok(((blocks, sigma.clone()), vec!["controlled".into()]));
    }

    let r2 = (1..=n).find(|&d| d != r1).unwrap();
    let label = case_classify(&build_cuboid(sigma, r1, r2)?.counts);
    let mut labels = vec![format!("{label:?}")];
    let rd = if label.is_good() {
        r2
    } else {
        let r3 = (1..=n).find(|&d| d != r1 && d != r2).unwrap();
        let escape = case_classify(&switch_dimension_counts(sigma, r1, r2, r3)?);
        labels.push(format!("{escape:?}"));
        if !escape.is_good() {
            return Err(Error::BadCase(escape));
        }
        r3
    };

    let (pi1, mid, pi2) = solve_layers(sigma, r1, rd, even_blocks)?;
    let product = Perm::product(&[sigma, &pi1, &mid, &pi2]);
    if !product.is_controlled(r1) {
        return Err(Error::Internal("whitening did not control the bit".into()));
    }
    let blocks = [
        Block::new(rd, pi1.restrict(rd)?),
        Block::new(r1, mid.restrict(r1)?),
        Block::new(rd, pi2.restrict(rd)?),
    ];
    if even_blocks {
        for b in &blocks {
            if b.inner_parity() == Parity::Odd {
                return Err(Error::Internal("layer left odd after evening".into()));
            }
        }
    }
    Ok(((blocks, product), labels))
}

/// Transform an even permutation into one controlled at `r1` using three
/// concurrent blocks: two on a shared dimension `r'` sandwiching one on
/// `r1`. When the first candidate pair dimension classifies as bad, the
/// next dimension is used instead.
pub fn to_controlled(sigma: &Perm, r1: Dim) -> Result<Controlled> {
    Ok(to_controlled_impl(sigma, r1, false)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_cycles;
    use rand::SeedableRng;

    fn demo4() -> Perm {
        parse_cycles(
            4,
            "(1001,1100,0101)(1110,0110,0111,1111)(1010,0010,0011,1011)",
        )
        .unwrap()
    }

    #[test]
    fn demo_counts_pin_the_taxonomy() {
        let cub = build_cuboid(&demo4(), 1, 2).unwrap();
        let c = cub.counts;
        assert_eq!(
            (c.a1, c.a2, c.a3, c.a4, c.b1, c.b2, c.b3, c.b4),
            (1, 0, 1, 2, 1, 0, 1, 2)
        );
        assert_eq!(case_classify(&c), CaseLabel::Good1);
        let t = card_tally(&c).unwrap();
        assert_eq!((t.alpha, t.beta, t.gamma), (0, 1, 3));
    }

    #[test]
    fn identity_cuboid_is_white() {
        let cub = build_cuboid(&Perm::identity(4), 1, 2).unwrap();
        assert!(cub.is_white());
        assert_eq!((cub.counts.a4, cub.counts.b4), (4, 4));
        // all monochromatic pairs count toward the first case's sum
        assert_eq!(case_classify(&cub.counts), CaseLabel::Good1);
    }

    #[test]
    fn controlled_perms_have_white_cuboids() {
        // anything concurrent at r1 = 2 is controlled there, hence white
        let inner = parse_cycles(3, "(000,101,100,110)(001,010)").unwrap();
        let p = Perm::lift(&inner, 2);
        for r2 in [1, 3, 4] {
            assert!(build_cuboid(&p, 2, r2).unwrap().is_white());
        }
    }

    #[test]
    fn vertical_stats_examples() {
        assert_eq!(vertical_pair_stats(&Perm::identity(4), 1), (0, 0));
        // a single swap across the r1 direction blackens both endpoints
        let p = parse_cycles(3, "(000,100)").unwrap();
        assert_eq!(vertical_pair_stats(&p, 1), (0, 1));
        // the demo permutation as counted from its color table
        assert_eq!(vertical_pair_stats(&demo4(), 1), (6, 0));
    }

    #[test]
    fn classify_edge_cases() {
        let bad2 = PairCounts {
            a1: 2,
            a2: 1,
            a3: 0,
            a4: 0,
            b1: 0,
            b2: 3,
            b3: 0,
            b4: 0,
        };
        // a3+a4+b3+b4 = 0 and b1+a2 = 1 odd
        assert_eq!(case_classify(&bad2), CaseLabel::Bad2);
        let good3 = PairCounts {
            a1: 2,
            a2: 2,
            a3: 0,
            a4: 0,
            b1: 2,
            b2: 2,
            b3: 0,
            b4: 0,
        };
        assert_eq!(case_classify(&good3), CaseLabel::Good3);
        let bad1 = PairCounts {
            a1: 3,
            a2: 0,
            a3: 1,
            a4: 0,
            b1: 0,
            b2: 3,
            b3: 1,
            b4: 0,
        };
        assert_eq!(case_classify(&bad1), CaseLabel::Bad1);
    }

    #[test]
    fn published_canonicalizer_reaches_card_form() {
        // the worked example's two-step canonicalization
        let sigma = demo4();
        let pi1 = parse_cycles(4, "(1110,0111)(1010,0011)").unwrap();
        let pi2 = parse_cycles(4, "(0100,0101)(0000,0001)").unwrap();
        let mid = sigma.compose(&pi1);
        let c = build_cuboid(&mid, 1, 2).unwrap().counts;
        assert_eq!((c.a2, c.a3, c.b3), (0, 0, 0));
        assert_eq!(c.a4, c.b4);
        let done = mid.compose(&pi2);
        assert!(is_canonical(&done, 1, 2));
    }

    /// A cuboid is canonical when every column is an A-, B- or C-card.
    fn is_canonical(sigma: &Perm, r1: Dim, r2: Dim) -> bool {
        let n = sigma.width();
        let sp = PairSpace::new(n, r1, r2);
        let color = colors_of(sigma, r1);
        (0..(1u32 << (n - 2))).all(|z| {
            let top = sp.pair_colors(&color, sp.pair_at(1, z));
            let bot = sp.pair_colors(&color, sp.pair_at(0, z));
            matches!(
                (top, bot),
                ((false, true), (true, false))   // A
                    | ((false, true), (false, true)) // B
                    | ((false, false), (false, false)) // C
            )
        })
    }

    #[test]
    fn canonicalize_demo_and_tallies() {
        let sigma = demo4();
        let counts = build_cuboid(&sigma, 1, 2).unwrap().counts;
        let want = card_tally(&counts).unwrap();
        let pi = canonicalize(&sigma, 1, 2).unwrap();
        assert!(pi.is_concurrent(2));
        let done = sigma.compose(&pi);
        assert!(is_canonical(&done, 1, 2));
        // recount card types and compare with the closed-form tallies
        let sp = PairSpace::new(4, 1, 2);
        let color = colors_of(&done, 1);
        let mut got = (0u64, 0u64, 0u64);
        for z in 0..4 {
            let top = sp.pair_colors(&color, sp.pair_at(1, z));
            let bot = sp.pair_colors(&color, sp.pair_at(0, z));
            match (top, bot) {
                ((false, true), (true, false)) => got.0 += 1,
                ((false, true), (false, true)) => got.1 += 1,
                ((false, false), (false, false)) => got.2 += 1,
                other => panic!("not a card: {other:?}"),
            }
        }
        assert_eq!(got, (want.alpha, want.beta, want.gamma));
    }

    #[test]
    fn canonicalize_intermediate_state() {
        let mid = canonical_intermediate(&demo4(), 1, 2).unwrap();
        let c = build_cuboid(&mid, 1, 2).unwrap().counts;
        assert_eq!((c.a2, c.a3, c.b3), (0, 0, 0));
        assert_eq!(c.a4, c.b4);
    }

    #[test]
    fn canonicalize_white_input_is_identity() {
        let pi = canonicalize(&Perm::identity(5), 1, 2).unwrap();
        assert!(pi.is_identity());
    }

    #[test]
    fn canonicalize_tallies_random_recount() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 4..=8 {
            for _ in 0..12 {
                let sigma = Perm::random_even(n, &mut rng);
                let counts = build_cuboid(&sigma, 1, 2).unwrap().counts;
                if counts.a2 + counts.a3 > counts.b2 + counts.b3 {
                    assert!(matches!(
                        canonicalize(&sigma, 1, 2),
                        Err(Error::MirrorRequired { .. })
                    ));
                    continue;
                }
                let want = card_tally(&counts).unwrap();
                let pi = canonicalize(&sigma, 1, 2).unwrap();
                let done = sigma.compose(&pi);
                assert!(is_canonical(&done, 1, 2));
                let after = build_cuboid(&done, 1, 2).unwrap().counts;
                let got = card_tally(&after).unwrap();
                assert_eq!((got.alpha, got.beta, got.gamma), (want.alpha, want.beta, want.gamma));
            }
        }
    }

    #[test]
    fn solve_good_whitens_random_inputs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mut solved = 0;
        for n in [4, 5, 6] {
            for _ in 0..40 {
                let sigma = Perm::random_even(n, &mut rng);
                let counts = build_cuboid(&sigma, 1, 2).unwrap().counts;
                if !case_classify(&counts).is_good() {
                    continue;
                }
                let (pi1, s1, pi2) = solve_good(&sigma, 1, 2).unwrap();
                assert!(pi1.is_concurrent(2) && pi2.is_concurrent(2) && s1.is_concurrent(1));
                let product = Perm::product(&[&sigma, &pi1, &s1, &pi2]);
                assert!(build_cuboid(&product, 1, 2).unwrap().is_white());
                assert!(product.is_controlled(1));
                solved += 1;
            }
        }
        assert!(solved > 50, "too few good cases sampled: {solved}");
    }

    #[test]
    fn switch_dimension_agrees_with_direct_recount() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let sigma = Perm::random(5, &mut rng);
            let switched = switch_dimension_counts(&sigma, 1, 2, 4).unwrap();
            assert_eq!(switched, build_cuboid(&sigma, 1, 4).unwrap().counts);
        }
        assert!(switch_dimension_counts(&demo4(), 1, 2, 2).is_err());
    }

    #[test]
    fn to_controlled_demo_and_random() {
        let sigma = demo4();
        let ([b1, b2, b3], ctl) = to_controlled(&sigma, 1).unwrap();
        assert!(ctl.is_controlled(1));
        assert_eq!(ctl.parity(), Parity::Even);
        assert_eq!(b1.dim, b3.dim);
        assert_eq!(b2.dim, 1);
        let product = Perm::product(&[&sigma, &b1.lift(), &b2.lift(), &b3.lift()]);
        assert_eq!(product, ctl);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        for n in [6, 8] {
            for _ in 0..15 {
                let sigma = Perm::random_even(n, &mut rng);
                let (blocks, ctl) = to_controlled(&sigma, 1).unwrap();
                assert!(ctl.is_controlled(1));
                assert_eq!(ctl.parity(), Parity::Even);
                let product = Perm::product(&[
                    &sigma,
                    &blocks[0].lift(),
                    &blocks[1].lift(),
                    &blocks[2].lift(),
                ]);
                assert_eq!(product, ctl);
            }
        }
    }

    #[test]
    fn to_controlled_on_controlled_input_is_trivial() {
        let inner = parse_cycles(3, "(000,001)(010,011)").unwrap();
        let sigma = Perm::lift(&inner, 1);
        let (blocks, ctl) = to_controlled(&sigma, 1).unwrap();
        assert!(blocks.iter().all(Block::is_identity));
        assert_eq!(ctl, sigma);
    }

    #[test]
    fn to_controlled_rejects_odd() {
        let odd = parse_cycles(4, "(0000,0001)").unwrap();
        assert!(matches!(
            to_controlled(&odd, 1),
            Err(Error::OddPermutation(_))
        ));
    }
}
