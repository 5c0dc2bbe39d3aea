//! Decomposition into blocks whose inner permutations are all even, and the
//! ten-block pipeline built on it.
//!
//! The layer machinery mirrors the plain pipeline, with three extra
//! ingredients: a short-cycle eliminator that also guarantees an even-length
//! cycle while itself staying concurrently even, an even conjugator, and a
//! factorization of one concurrently odd block into four concurrently even
//! ones (used to repair half parities).

use crate::blocks::{Block, DecompStats, Decomposition, Mode};
use crate::cuboid::to_controlled_impl;
use crate::error::{Error, Result};
use crate::perm::{bit, flip, reduced_dim, CyclePattern, Dim, Node, Parity, Perm};
use crate::synth::synthesize_pattern_impl;

/// Like [`crate::cuboid::to_controlled`], with every block's inner
/// permutation even.
pub fn to_controlled_even(sigma: &Perm, r1: Dim) -> Result<([Block; 3], Perm)> {
    Ok(to_controlled_impl(sigma, r1, true)?.0)
}

/// Two concurrently even blocks realizing a pattern with at least twelve
/// nontrivial cycles (free of 3- and 5-cycles, even).
pub fn synth_many_cycles_even(
    pattern: &CyclePattern,
    r1: Dim,
    r2: Dim,
    n: u32,
) -> Result<(Perm, Perm)> {
    if pattern.nontrivial_cycles() < 12 {
        return Err(Error::BadPattern(format!(
            "need at least 12 nontrivial cycles, got {}",
            pattern.nontrivial_cycles()
        )));
    }
    synthesize_pattern_impl(pattern, r1, r2, n, true)
}

/// Two concurrently even blocks realizing a pattern containing a cycle of
/// length at least twelve (free of 3- and 5-cycles, even).
pub fn synth_long_cycle_even(
    pattern: &CyclePattern,
    r1: Dim,
    r2: Dim,
    n: u32,
) -> Result<(Perm, Perm)> {
    if pattern.max_len() < 12 {
        return Err(Error::BadPattern(format!(
            "need a cycle of length at least 12, got {}",
            pattern.max_len()
        )));
    }
    synthesize_pattern_impl(pattern, r1, r2, n, true)
}

/// An even `h` with `h * p * h^-1 = q`; requires equal patterns and an
/// even-length cycle in `p` (rotating that cycle absorbs an odd sign).
pub fn even_conjugator(p: &Perm, q: &Perm) -> Result<Perm> {
    let pat = p.cycle_pattern();
    let has_even = pat.counts().keys().any(|k| k % 2 == 0);
    if !has_even {
        return Err(Error::BadPattern(
            "even conjugation needs an even-length cycle".into(),
        ));
    }
    let h1 = crate::synth::conjugator(p, q)?;
    if h1.parity() == Parity::Even {
        return Ok(h1);
    }
    let cycle = p
        .cycles()
        .into_iter()
        .find(|c| c.len() % 2 == 0)
        .expect("even cycle exists");
    let rot = Perm::from_cycles(p.width(), &[cycle])?;
    let h = h1.compose(&rot);
    debug_assert_eq!(h.parity(), Parity::Even);
    debug_assert_eq!(p.conjugate_by(&h), *q);
    Ok(h)
}

/// Literal width-3 tables for the odd-block factorization, padded with
/// trailing zeros into wider spaces.
fn odd_block_tables(n: u32) -> Result<[Perm; 5]> {
    let parse3 = |s: &str| crate::text::parse_cycles(3, s).unwrap();
    let base = [
        parse3("(001,011)(101,111)"),
        parse3("(010,100,110)(011,101,111)"),
        parse3("(001,100,101)(011,110,111)"),
        parse3("(001,010,011)(101,110,111)"),
        parse3("(001,101,100)(011,111,110)"),
    ];
    if n == 3 {
        return Ok(base);
    }
    let pad = n - 3;
    let widen = |p: &Perm| -> Perm {
        let mut image: Vec<Node> = (0..(1u32 << n)).collect();
        for (x, &y) in p.images().iter().enumerate() {
            image[(x as Node as usize) << pad] = y << pad;
        }
        Perm::from_images(n, image).unwrap()
    };
    Ok([
        widen(&base[0]),
        widen(&base[1]),
        widen(&base[2]),
        widen(&base[3]),
        widen(&base[4]),
    ])
}

/// A concurrently odd `pi` concurrent at `r1`, together with four
/// concurrently even factors on dimensions `(r3, r2, r1, r2)` whose product
/// is `pi`.
pub fn odd_block_from_even(n: u32, r1: Dim, r2: Dim, r3: Dim) -> Result<(Perm, [Perm; 4])> {
    if n < 3 {
        return Err(Error::WidthTooSmall {
            op: "odd_block_from_even",
            n,
            min: 3,
        });
    }
    if r1 == r2 || r1 == r3 || r2 == r3 {
        return Err(Error::DimsNotDistinct(vec![r1, r2, r3]));
    }
    let [pi0, t1, t2, t3, t4] = odd_block_tables(n)?;
    // move the construction from dimensions (1, 2, 3) onto (r1, r2, r3)
    let mut dims: Vec<Dim> = vec![r1, r2, r3];
    for d in 1..=n {
        if !dims.contains(&d) {
            dims.push(d);
        }
    }
    let rho = Perm::bit_permutation(n, &dims);
    let move_to = |p: &Perm| p.conjugate_by(&rho);
    let pi = move_to(&pi0);
    let taus = [move_to(&t1), move_to(&t2), move_to(&t3), move_to(&t4)];
    debug_assert_eq!(pi.concurrent_parity(r1), Parity::Odd);
    debug_assert_eq!(
        Perm::product(&[&taus[0], &taus[1], &taus[2], &taus[3]]),
        pi
    );
    Ok((pi, taus))
}

// ---------------------------------------------------------------------------
// Short-cycle elimination with an even-cycle guarantee.
// ---------------------------------------------------------------------------

fn cycle_of(p: &Perm, x: Node) -> Vec<Node> {
    let mut out = vec![x];
    let mut cur = p.apply(x);
    while cur != x {
        out.push(cur);
        cur = p.apply(cur);
    }
    out
}

fn mirrored_swap(n: u32, r1: Dim, a: Node, b: Node) -> Perm {
    let mut image: Vec<Node> = (0..(1u32 << n)).collect();
    image.swap(a as usize, b as usize);
    image.swap(flip(a, r1, n) as usize, flip(b, r1, n) as usize);
    Perm::from_images(n, image).unwrap()
}

struct EvenElim {
    n: u32,
    r1: Dim,
    cur: Perm,
    acc: Perm,
    anchor: Node, // a node of the protected even cycle
    rounds: u64,
    special_w: Option<Vec<Node>>,
}

impl EvenElim {
    fn apply(&mut self, step: &Perm) {
        self.cur = self.cur.compose(step);
        self.acc = self.acc.compose(step);
    }

    fn anchor_cycle(&self) -> Vec<Node> {
        cycle_of(&self.cur, self.anchor)
    }

    /// Stage one: make sure a short even cycle exists, possibly after one
    /// concurrent move.
    fn stage_one(&mut self) -> Result<()> {
        let n = self.n;
        let r1 = self.r1;
        let sigma = self.cur.clone();
        let face = |x: Node| bit(x, r1, n);

        // case 0: a 2-cycle already exists
        if let Some(c) = sigma.cycles().iter().find(|c| c.len() == 2) {
            self.anchor = c[0];
            return Ok(());
        }
        let moved: Vec<Node> = sigma.support();
        // case 1: two moved nodes staying on one face
        let stayers: Vec<Node> = moved
            .iter()
            .copied()
            .filter(|&u| face(sigma.apply(u)) == face(u))
            .collect();
        for (i, &u) in stayers.iter().enumerate() {
            for &v in stayers.iter().skip(i + 1) {
                if face(u) != face(v) {
                    continue;
                }
                let (su, sv) = (sigma.apply(u), sigma.apply(v));
                if su == v || sv == u {
                    let (u, v, sv) = if su == v { (u, v, sigma.apply(v)) } else { (v, u, su) };
                    let quad = [u, sv, flip(u, r1, n), flip(sv, r1, n)];
                    if distinct(&quad) && sv != v {
                        self.apply(&mirrored_swap(n, r1, u, sv));
                        if let Some(a) = find_short_even(&self.cur) {
                            self.anchor = a;
                            return Ok(());
                        }
                    }
                    continue;
                }
                let eight = [
                    u,
                    su,
                    flip(u, r1, n),
                    flip(su, r1, n),
                    v,
                    sv,
                    flip(v, r1, n),
                    flip(sv, r1, n),
                ];
                if !distinct(&eight) {
                    continue;
                }
                let step = Perm::product(&[
                    &mirrored_swap(n, r1, u, su),
                    &mirrored_swap(n, r1, v, sv),
                    &mirrored_swap(n, r1, su, sv),
                ]);
                let cand = sigma.compose(&step);
                if let Some(a) = find_short_even(&cand) {
                    self.apply(&step);
                    self.anchor = a;
                    return Ok(());
                }
            }
        }
        // case 2: a face-crossing step that returns after two applications
        for &u in &moved {
            let su = sigma.apply(u);
            let ssu = sigma.apply(su);
            if face(u) == face(ssu) && face(u) != face(su) && u != ssu {
                let quad = [u, ssu, flip(u, r1, n), flip(ssu, r1, n)];
                if !distinct(&quad) || flip(su, r1, n) == u || flip(su, r1, n) == ssu {
                    continue;
                }
                self.apply(&mirrored_swap(n, r1, u, ssu));
                if let Some(a) = find_short_even(&self.cur) {
                    self.anchor = a;
                    return Ok(());
                }
            }
        }
        // case 3: two fix-points on one face
        let fixed: Vec<Node> = (0..(1u32 << n))
            .filter(|&x| sigma.apply(x) == x)
            .collect();
        for (i, &u) in fixed.iter().enumerate() {
            if let Some(&v) = fixed.iter().skip(i + 1).find(|&&v| face(v) == face(u)) {
                self.apply(&mirrored_swap(n, r1, u, v));
                self.anchor = u;
                return Ok(());
            }
        }
        // case 4: a 4-cycle of two mirror pairs, or three mirror pairs
        // consecutive in one cycle
        for c in sigma.cycles() {
            if c.len() == 4 && c.iter().all(|&x| c.contains(&flip(x, r1, n))) {
                self.anchor = c[0];
                return Ok(());
            }
        }
        for c in sigma.cycles() {
            let l = c.len();
            if l < 6 {
                continue;
            }
            for start in 0..l {
                let at = |k: usize| c[(start + k) % l];
                let (u1, u2, u3, u4, u5, u6) = (at(0), at(1), at(2), at(3), at(4), at(5));
                if u2 == flip(u1, r1, n)
                    && u4 == flip(u3, r1, n)
                    && u6 == flip(u5, r1, n)
                    && face(u1) == face(u3)
                    && face(u3) == face(u5)
                {
                    let mut image: Vec<Node> = (0..(1u32 << n)).collect();
                    image[u1 as usize] = u3;
                    image[u3 as usize] = u5;
                    image[u5 as usize] = u1;
                    image[u2 as usize] = u4;
                    image[u4 as usize] = u6;
                    image[u6 as usize] = u2;
                    let step = Perm::from_images(n, image)?;
                    self.apply(&step);
                    if let Some(a) = find_short_even(&self.cur) {
                        self.anchor = a;
                        return Ok(());
                    }
                }
            }
        }
        Err(Error::Internal("no short even cycle constructible".into()))
    }

    /// Stage two: remove every 3/5-cycle that stays clear of the protected
    /// cycle, merging each into something long.
    fn stage_two(&mut self) -> Result<()> {
        let n = self.n;
        let r1 = self.r1;
        loop {
            let c0 = self.anchor_cycle();
            let protected: Vec<Node> = c0
                .iter()
                .flat_map(|&x| [x, flip(x, r1, n)])
                .collect();
            let cycles = self.cur.cycles();
            let eligible = cycles.iter().find(|c| {
                (c.len() == 3 || c.len() == 5) && c.iter().all(|x| !protected.contains(x))
            });
            let Some(c1) = eligible.cloned() else { return Ok(()) };
            let zeta_before = eligible_small_count(&self.cur, &protected);
            let mut sorted = c1.clone();
            sorted.sort_unstable();
            let u = sorted
                .iter()
                .copied()
                .find(|&u| !c1.contains(&flip(u, r1, n)))
                .expect("odd cycles cannot be mirror-closed");
            let v = flip(u, r1, n);
            let mut window: Vec<Node> = c0.clone();
            window.extend(&c1);
            let c2 = cycle_of(&self.cur, v);
            let l2 = c2.len();
            for (i, &w) in c2.iter().enumerate() {
                if i.min(l2 - i) <= 5 {
                    window.push(w);
                }
            }
            let t = (0..(1u32 << n))
                .find(|&t| {
                    bit(t, r1, n) == bit(u, r1, n)
                        && !window.contains(&t)
                        && !window.contains(&flip(t, r1, n))
                })
                .ok_or_else(|| Error::Internal("no spare mirror pair".into()))?;
            self.apply(&mirrored_swap(n, r1, u, t));
            self.rounds += 1;
            let c0_after = self.anchor_cycle();
            if c0_after != c0 {
                return Err(Error::Internal("protected cycle was disturbed".into()));
            }
            let protected_after: Vec<Node> = c0_after
                .iter()
                .flat_map(|&x| [x, flip(x, r1, n)])
                .collect();
            let zeta_after = eligible_small_count(&self.cur, &protected_after);
            if zeta_after >= zeta_before {
                return Err(Error::Internal(format!(
                    "small-cycle count did not decrease: {zeta_before} -> {zeta_after}"
                )));
            }
        }
    }

    /// Stage three: at most two 3/5-cycles survive next to the protected
    /// cycle; remove them, allowing one repair pass.
    fn stage_three(&mut self) -> Result<()> {
        for pass in 0..3 {
            let shorts: Vec<Vec<Node>> = self
                .cur
                .cycles()
                .into_iter()
                .filter(|c| c.len() == 3 || c.len() == 5)
                .collect();
            match shorts.len() {
                0 => return Ok(()),
                1 => self.stage_three_single(&shorts[0])?,
                2 => self.stage_three_pair(&shorts[0], &shorts[1])?,
                more => {
                    return Err(Error::Internal(format!(
                        "{more} short cycles left for the repair stage"
                    )))
                }
            }
            if pass == 2 {
                return Err(Error::Internal("repair stage did not converge".into()));
            }
        }
        Ok(())
    }

    fn stage_three_pair(&mut self, c3: &[Node], c4: &[Node]) -> Result<()> {
        let n = self.n;
        let r1 = self.r1;
        let c0 = self.anchor_cycle();
        let v3 = c3
            .iter()
            .copied()
            .find(|&x| c0.contains(&flip(x, r1, n)))
            .ok_or_else(|| Error::Internal("short cycle detached from the protected one".into()))?;
        let v4 = c4
            .iter()
            .copied()
            .find(|&x| c0.contains(&flip(x, r1, n)))
            .ok_or_else(|| Error::Internal("short cycle detached from the protected one".into()))?;
        self.apply(&mirrored_swap(n, r1, v3, v4));
        self.rounds += 1;
        let merged = cycle_of(&self.cur, v3);
        if merged.len() % 2 != 0 || merged.len() > 12 {
            return Err(Error::Internal("pair merge produced no short even cycle".into()));
        }
        self.anchor = v3;
        Ok(())
    }

    fn stage_three_single(&mut self, c3: &[Node]) -> Result<()> {
        let n = self.n;
        let r1 = self.r1;
        let c0 = self.anchor_cycle();
        // sub-case: some mirror leaves both the protected and the short cycle
        let outside = c3
            .iter()
            .copied()
            .find(|&x| {
                let m = flip(x, r1, n);
                !c0.contains(&m) && !c3.contains(&m)
            });
        if let Some(u) = outside {
            let v = flip(u, r1, n);
            let mut window: Vec<Node> = c0.clone();
            window.extend(c3);
            let c2 = cycle_of(&self.cur, v);
            let l2 = c2.len();
            for (i, &w) in c2.iter().enumerate() {
                if i.min(l2 - i) <= 5 {
                    window.push(w);
                }
            }
            let t = (0..(1u32 << n))
                .find(|&t| {
                    bit(t, r1, n) == bit(u, r1, n)
                        && !window.contains(&t)
                        && !window.contains(&flip(t, r1, n))
                })
                .ok_or_else(|| Error::Internal("no spare mirror pair".into()))?;
            self.apply(&mirrored_swap(n, r1, u, t));
            self.rounds += 1;
            return Ok(());
        }
        // the short cycle contains a mirror pair
        let u = c3
            .iter()
            .copied()
            .find(|&x| c3.contains(&flip(x, r1, n)))
            .ok_or_else(|| Error::Internal("expected an internal mirror pair".into()))?;
        // prefer a pair outside both cycles whose halves sit in two cycles
        let candidate = (0..(1u32 << n)).find(|&t| {
            let s = flip(t, r1, n);
            bit(t, r1, n) == bit(u, r1, n)
                && !c0.contains(&t)
                && !c3.contains(&t)
                && !c0.contains(&s)
                && !c3.contains(&s)
                && self.cur.dist(t, s).is_none()
        });
        if let Some(t) = candidate {
            self.apply(&mirrored_swap(n, r1, u, t));
            self.rounds += 1;
            return Ok(());
        }
        // last resort: pull one node out of the protected cycle
        let s = c0
            .iter()
            .copied()
            .find(|&s| !c3.contains(&flip(s, r1, n)))
            .ok_or_else(|| Error::Internal("protected cycle fully mirrored into the short one".into()))?;
        let t = flip(s, r1, n);
        let (u, _v) = if bit(u, r1, n) == bit(t, r1, n) {
            (u, flip(u, r1, n))
        } else {
            (flip(u, r1, n), u)
        };
        let old_c0: Vec<Node> = c0.clone();
        self.apply(&mirrored_swap(n, r1, u, t));
        self.rounds += 1;
        // the protected cycle was consumed; find its even successor
        let merged = cycle_of(&self.cur, u);
        if merged.len() % 2 == 0 && merged.len() >= 2 {
            self.anchor = u;
        } else if let Some(a) = find_short_even(&self.cur) {
            self.anchor = a;
        } else {
            return Err(Error::Internal("no even cycle after the pull".into()));
        }
        self.special_w = Some(
            old_c0
                .iter()
                .flat_map(|&x| [x, flip(x, r1, n)])
                .collect(),
        );
        Ok(())
    }

    /// Stage four: if the accumulated block is concurrently odd, append an
    /// odd concurrent move that keeps the pattern acceptable.
    fn stage_four(&mut self) -> Result<()> {
        if self.acc.concurrent_parity(self.r1) == Parity::Even {
            return Ok(());
        }
        let n = self.n;
        let r1 = self.r1;
        let c0 = self.anchor_cycle();
        // case 1: a mirror pair split across two cycles, away from the
        // protected one
        let split_pair = (0..(1u32 << n)).find(|&u| {
            let v = flip(u, r1, n);
            bit(u, r1, n) == 0
                && !c0.contains(&u)
                && !c0.contains(&v)
                && self.cur.dist(u, v).is_none()
        });
        if let Some(u) = split_pair {
            let v = flip(u, r1, n);
            let mut window: Vec<Node> = c0.clone();
            for anchor in [u, v] {
                let c = cycle_of(&self.cur, anchor);
                let l = c.len();
                for (i, &w) in c.iter().enumerate() {
                    if i.min(l - i) <= 5 {
                        window.push(w);
                    }
                }
            }
            if let Some(t) = (0..(1u32 << n)).find(|&t| {
                bit(t, r1, n) == bit(u, r1, n)
                    && !window.contains(&t)
                    && !window.contains(&flip(t, r1, n))
            }) {
                self.apply(&mirrored_swap(n, r1, u, t));
                self.rounds += 1;
                debug_assert_eq!(self.acc.concurrent_parity(r1), Parity::Even);
                return self.verify_posture();
            }
        }
        // case 2: merge cycles until one long even cycle exists, then split
        // it with a mirrored swap at safe distances
        let w: Vec<Node> = match &self.special_w {
            Some(w) => w.clone(),
            None => c0.iter().flat_map(|&x| [x, flip(x, r1, n)]).collect(),
        };
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > 1u32 << n {
                return Err(Error::Internal("merging loop stalled".into()));
            }
            let cycles = self.cur.cycles();
            let big_even = cycles
                .iter()
                .find(|c| c.len() % 2 == 0 && c.len() >= 110 && c.iter().any(|x| !w.contains(x)));
            if big_even.is_some() {
                break;
            }
            // three internal mirror pairs in three distinct cycles
            let mut picks: Vec<(Node, Node)> = Vec::new();
            let mut leaders: Vec<Node> = Vec::new();
            for c in &cycles {
                if c.len() < 2 {
                    continue;
                }
                if let Some(&u) = c.iter().find(|&&x| {
                    let m = flip(x, r1, n);
                    bit(x, r1, n) == 0 && c.contains(&m) && !w.contains(&x) && !w.contains(&m)
                }) {
                    picks.push((u, flip(u, r1, n)));
                    leaders.push(c[0]);
                }
                if picks.len() == 3 {
                    break;
                }
            }
            if picks.len() < 3 {
                return Err(Error::Internal("not enough mergeable cycles".into()));
            }
            let mut image: Vec<Node> = (0..(1u32 << n)).collect();
            let us: Vec<Node> = picks.iter().map(|p| p.0).collect();
            let vs: Vec<Node> = picks.iter().map(|p| p.1).collect();
            for k in 0..3 {
                image[us[k] as usize] = us[(k + 1) % 3];
                image[vs[k] as usize] = vs[(k + 1) % 3];
            }
            let step = Perm::from_images(n, image)?;
            self.apply(&step);
            self.rounds += 1;
        }
        let cycles = self.cur.cycles();
        let c1 = cycles
            .iter()
            .find(|c| c.len() % 2 == 0 && c.len() >= 110)
            .unwrap()
            .clone();
        // three well-separated internal mirror pairs of the long cycle
        let pos: std::collections::HashMap<Node, usize> =
            c1.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let l = c1.len();
        let mut pairs: Vec<(usize, usize)> = Vec::new(); // positions of (u, v)
        for (i, &x) in c1.iter().enumerate() {
            let m = flip(x, r1, n);
            if w.contains(&x) || w.contains(&m) {
                continue;
            }
            if let Some(&j) = pos.get(&m) {
                if bit(x, r1, n) == 0 {
                    let far = |a: usize, b: usize| {
                        let d = a.abs_diff(b);
                        d.min(l - d) >= 6
                    };
                    if pairs
                        .iter()
                        .all(|&(pi, pj)| far(i, pi) && far(i, pj) && far(j, pi) && far(j, pj))
                    {
                        pairs.push((i, j));
                    }
                }
            }
            if pairs.len() == 3 {
                break;
            }
        }
        if pairs.len() < 3 {
            return Err(Error::Internal("no separated mirror pairs in the long cycle".into()));
        }
        let dist = |a: usize, b: usize| -> u64 { ((b + l - a) % l) as u64 };
        for (ai, bi) in [(0, 1), (0, 2), (1, 2), (1, 0), (2, 0), (2, 1)] {
            let (ui, vi) = pairs[ai];
            let (uj, vj) = pairs[bi];
            if dist(ui, vi) + dist(vj, uj) < 6 || dist(vi, ui) + dist(uj, vj) < 6 {
                continue;
            }
            let step = mirrored_swap(n, r1, c1[ui], c1[uj]);
            let cand = self.cur.compose(&step);
            let pat = cand.cycle_pattern();
            if pat.free_of(&[3, 5]) && pat.counts().keys().any(|k| k % 2 == 0) {
                self.apply(&step);
                self.rounds += 1;
                self.anchor = cand
                    .cycles()
                    .into_iter()
                    .find(|c| c.len() % 2 == 0)
                    .map(|c| c[0])
                    .unwrap();
                debug_assert_eq!(self.acc.concurrent_parity(r1), Parity::Even);
                return self.verify_posture();
            }
        }
        Err(Error::Internal("no parity-fixing split found".into()))
    }

    fn verify_posture(&self) -> Result<()> {
        let pat = self.cur.cycle_pattern();
        if !pat.free_of(&[3, 5]) {
            return Err(Error::Internal("short cycles survived".into()));
        }
        if !pat.counts().keys().any(|k| k % 2 == 0) {
            return Err(Error::Internal("no even cycle in the output".into()));
        }
        Ok(())
    }
}

fn distinct(xs: &[Node]) -> bool {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len() == xs.len()
}

fn find_short_even(p: &Perm) -> Option<Node> {
    p.cycles()
        .into_iter()
        .filter(|c| c.len() % 2 == 0 && c.len() <= 4)
        .map(|c| c[0])
        .next()
}

fn eligible_small_count(p: &Perm, protected: &[Node]) -> u64 {
    let mut count = 0;
    let mut visited = vec![false; 1 << p.width()];
    for start in 0..(1u32 << p.width()) {
        if visited[start as usize] {
            continue;
        }
        let c = cycle_of(p, start);
        for &x in &c {
            visited[x as usize] = true;
        }
        if c.len() <= 5 && c.iter().all(|x| !protected.contains(x)) {
            count += 1;
        }
    }
    count
}

/// A concurrently even block `pi` at `r1` such that `sigma * pi` has no 3-
/// or 5-cycles and contains at least one even-length cycle.
pub fn eliminate_short_cycles_even(sigma: &Perm, r1: Dim) -> Result<(Perm, u64)> {
    let n = sigma.width();
    if n < 8 {
        return Err(Error::WidthTooSmall {
            op: "eliminate_short_cycles_even",
            n,
            min: 8,
        });
    }
    if sigma.parity() == Parity::Odd {
        return Err(Error::OddPermutation("short-cycle removal expects even input"));
    }
    let mut state = EvenElim {
        n,
        r1,
        cur: sigma.clone(),
        acc: Perm::identity(n),
        anchor: 0,
        rounds: 0,
        special_w: None,
    };
    state.stage_one()?;
    state.stage_two()?;
    state.stage_three()?;
    state.stage_four()?;
    state.verify_posture()?;
    if state.acc.concurrent_parity(r1) != Parity::Even {
        return Err(Error::Internal("eliminator ended concurrently odd".into()));
    }
    Ok((state.acc, state.rounds))
}

/// Thirteen fix-point mirror pairs rotated into two 13-cycles, used to
/// guarantee a long cycle before pattern synthesis.
fn plant_thirteen_cycles(q: &Perm, d: Dim) -> Result<Perm> {
    let n = q.width();
    let mut xs = Vec::new();
    for x in 0..(1u32 << n) {
        let m = flip(x, d, n);
        if x < m && q.apply(x) == x && q.apply(m) == m {
            xs.push(x);
            if xs.len() == 13 {
                break;
            }
        }
    }
    if xs.len() < 13 {
        return Err(Error::Internal("fewer than 13 free mirror pairs".into()));
    }
    let ys: Vec<Node> = xs.iter().map(|&x| flip(x, d, n)).collect();
    Perm::from_cycles(n, &[xs, ys])
}

pub(crate) fn controlled_to_identity_even_impl(
    sigma: &Perm,
    r1: Dim,
    r2: Dim,
    r3: Dim,
    r4: Dim,
) -> Result<([Block; 8], u64)> {
    let n = sigma.width();
    if n < 10 {
        return Err(Error::WidthTooSmall {
            op: "controlled_to_identity_even",
            n,
            min: 10,
        });
    }
    let mut dims = vec![r1, r2, r3, r4];
    dims.sort_unstable();
    dims.dedup();
    if dims.len() != 4 {
        return Err(Error::DimsNotDistinct(vec![r1, r2, r3, r4]));
    }
    if !sigma.is_controlled(r1) {
        return Err(Error::NotControlled { dim: r1 });
    }
    if sigma.parity() == Parity::Odd {
        return Err(Error::OddPermutation("recovery expects an even permutation"));
    }
    let m = n - 1;
    let (f, g) = sigma.controlled_halves(r1)?;
    let q0 = f.inverse().compose(&g);
    let r2r = reduced_dim(r2, r1);
    let r3r = reduced_dim(r3, r1);
    let r4r = reduced_dim(r4, r1);
    let (g_prime, rounds) = eliminate_short_cycles_even(&q0, r2r)?;
    let mut g_tot = g_prime;
    let mut q = q0.compose(&g_tot);
    let pat = q.cycle_pattern();
    if pat.nontrivial_cycles() < 12 && pat.max_len() < 12 {
        let extra = plant_thirteen_cycles(&q, r2r)?;
        q = q.compose(&extra);
        g_tot = g_tot.compose(&extra);
    }
    // align half parities, factoring one odd block into four even ones
    let (s, odd_taus) = if f.parity() == Parity::Even {
        (Perm::identity(m), None)
    } else {
        let (pi_odd, taus) = odd_block_from_even(n, r1, r2, r3)?;
        let s_inv = pi_odd.restrict(r1)?;
        (s_inv.inverse(), Some(taus))
    };
    let fs = f.compose(&s);
    debug_assert_eq!(fs.parity(), Parity::Even);
    let q_conj = q.conjugate_by(&s.inverse());
    let pat = q_conj.cycle_pattern();
    let (t1, t2) = if pat.nontrivial_cycles() >= 12 {
        synth_many_cycles_even(&pat, r3r, r4r, m)?
    } else {
        synth_long_cycle_even(&pat, r3r, r4r, m)?
    };
    let x = t1.compose(&t2);
    let h0 = even_conjugator(&q_conj, &x)?;
    let h = h0.inverse();
    let embed = |w: &Perm, d: Dim| -> Result<Block> {
        Ok(Block::new(d, Perm::embed_upper_half(w, r1).restrict(d)?))
    };
    let b1 = Block::new(r1, fs.compose(&h));
    let b2 = embed(&t1, r3)?;
    let b3 = embed(&t2, r4)?;
    let b4 = Block::new(r1, h.inverse());
    let trailer = embed(&g_tot.inverse(), r2)?;
    let (b5, b6, b7, b8) = match odd_taus {
        None => (
            Block::identity(r3, n),
            Block::identity(r2, n),
            Block::identity(r1, n),
            trailer,
        ),
        Some(taus) => {
            let [t_a, t_b, t_c, t_d] = taus;
            (
                Block::new(r3, t_a.restrict(r3)?),
                Block::new(r2, t_b.restrict(r2)?),
                Block::new(r1, t_c.restrict(r1)?),
                Block::new(r2, t_d.restrict(r2)?).merge(&trailer),
            )
        }
    };
    let blocks = [b1, b2, b3, b4, b5, b6, b7, b8];
    for b in &blocks {
        if b.inner_parity() == Parity::Odd {
            return Err(Error::Internal(format!(
                "block on dimension {} came out odd",
                b.dim
            )));
        }
    }
    let mut acc = Perm::identity(n);
    for b in blocks.iter().rev() {
        acc = b.lift().compose(&acc);
    }
    if &acc != sigma {
        return Err(Error::Internal("eight-block recovery does not recompose".into()));
    }
    Ok((blocks, rounds))
}

/// Eight concurrently even blocks on dimensions `(r1, r3, r4, r1, r3, r2,
/// r1, r2)` whose ordered product equals the controlled input.
pub fn controlled_to_identity_even(
    sigma: &Perm,
    r1: Dim,
    r2: Dim,
    r3: Dim,
    r4: Dim,
) -> Result<[Block; 8]> {
    Ok(controlled_to_identity_even_impl(sigma, r1, r2, r3, r4)?.0)
}

/// Decompose an even permutation of width at least 10 into at most ten
/// blocks, each with an even inner permutation.
pub fn decompose_even10(sigma: &Perm) -> Result<Decomposition> {
    let n = sigma.width();
    if n < 10 {
        return Err(Error::WidthTooSmall {
            op: "decompose_even10",
            n,
            min: 10,
        });
    }
    if sigma.parity() == Parity::Odd {
        return Err(Error::OddPermutation("only even permutations decompose into blocks"));
    }
    let source_digest = sigma.digest();
    if sigma.is_identity() {
        return Ok(Decomposition {
            n,
            mode: Mode::Even10,
            blocks: Vec::new(),
            source_digest,
            stats: DecompStats::default(),
        });
    }
    let r1 = 1;
    let ((a_blocks, ctl), labels) = to_controlled_impl(sigma, r1, true)?;
    let r2 = a_blocks[0].dim;
    let mut rest = (1..=n).filter(|&d| d != r1 && d != r2);
    let r3 = rest.next().unwrap();
    let r4 = rest.next().unwrap();
    let (c, rounds) = controlled_to_identity_even_impl(&ctl, r1, r2, r3, r4)?;
    let [c1, c2, c3, c4, c5, c6, c7, c8] = c;
    let [a1, a2, a3] = a_blocks;
    let merged = c8.merge(&a3.inverse());
    let blocks: Vec<Block> = [
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        c7,
        merged,
        a2.inverse(),
        a1.inverse(),
    ]
    .into_iter()
    .filter(|b| !b.is_identity())
    .collect();
    let d = Decomposition {
        n,
        mode: Mode::Even10,
        blocks,
        source_digest,
        stats: DecompStats {
            rounds_35: rounds,
            case_labels: labels,
        },
    };
    if &d.product() != sigma {
        return Err(Error::Internal("ten-block decomposition does not recompose".into()));
    }
    if d.blocks.len() > 10 {
        return Err(Error::Internal(format!("{} blocks exceed ten", d.blocks.len())));
    }
    for b in &d.blocks {
        if b.inner_parity() == Parity::Odd {
            return Err(Error::Internal("odd block in even-mode output".into()));
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_cycles;
    use rand::SeedableRng;

    #[test]
    fn odd_block_literal_tables() {
        let (pi, taus) = odd_block_from_even(3, 1, 2, 3).unwrap();
        assert_eq!(pi, parse_cycles(3, "(001,011)(101,111)").unwrap());
        assert_eq!(taus[0], parse_cycles(3, "(010,100,110)(011,101,111)").unwrap());
        assert_eq!(taus[1], parse_cycles(3, "(001,100,101)(011,110,111)").unwrap());
        assert_eq!(taus[2], parse_cycles(3, "(001,010,011)(101,110,111)").unwrap());
        assert_eq!(taus[3], parse_cycles(3, "(001,101,100)(011,111,110)").unwrap());
        assert_eq!(pi.concurrent_parity(1), Parity::Odd);
        assert_eq!(taus[0].concurrent_parity(3), Parity::Even);
        assert_eq!(taus[1].concurrent_parity(2), Parity::Even);
        assert_eq!(taus[2].concurrent_parity(1), Parity::Even);
        assert_eq!(taus[3].concurrent_parity(2), Parity::Even);
    }

    #[test]
    fn odd_block_zero_padding() {
        let (pi, _) = odd_block_from_even(4, 1, 2, 3).unwrap();
        assert_eq!(pi, parse_cycles(4, "(0010,0110)(1010,1110)").unwrap());
    }

    #[test]
    fn odd_block_exhaustive_small_widths() {
        for n in [3u32, 4, 5] {
            for r1 in 1..=n {
                for r2 in 1..=n {
                    for r3 in 1..=n {
                        if r1 == r2 || r1 == r3 || r2 == r3 {
                            continue;
                        }
                        let (pi, taus) = odd_block_from_even(n, r1, r2, r3).unwrap();
                        assert_eq!(pi.concurrent_parity(r1), Parity::Odd);
                        for (t, d) in taus.iter().zip([r3, r2, r1, r2]) {
                            assert_eq!(t.concurrent_parity(d), Parity::Even, "n={n} d={d}");
                        }
                        assert_eq!(
                            Perm::product(&[&taus[0], &taus[1], &taus[2], &taus[3]]),
                            pi
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn even_conjugator_examples() {
        // equal inputs with a 2-cycle: identity works
        let p = parse_cycles(4, "(0000,0001)(0010,0011)").unwrap();
        let h = even_conjugator(&p, &p).unwrap();
        assert_eq!(h.parity(), Parity::Even);
        assert_eq!(p.conjugate_by(&h), p);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut odd_repairs = 0;
        for _ in 0..40 {
            let p = Perm::random(5, &mut rng);
            if !p.cycle_pattern().counts().keys().any(|k| k % 2 == 0) {
                continue;
            }
            let relabel = Perm::random(5, &mut rng);
            let q = p.conjugate_by(&relabel);
            let plain = crate::synth::conjugator(&p, &q).unwrap();
            if plain.parity() == Parity::Odd {
                odd_repairs += 1;
            }
            let h = even_conjugator(&p, &q).unwrap();
            assert_eq!(h.parity(), Parity::Even);
            assert_eq!(p.conjugate_by(&h), q);
        }
        assert!(odd_repairs > 0, "no odd case was exercised");

        // no even cycle: rejected
        let odd_only = parse_cycles(4, "(0000,0001,0010,0011,0100,0101,0110)").unwrap();
        assert!(even_conjugator(&odd_only, &odd_only).is_err());
    }

    #[test]
    fn eliminate_even_keeps_existing_two_cycle() {
        // a 2-cycle and no 3/5-cycles: nothing to do
        let sigma = parse_cycles(8, "(00000000,00000001)(00000010,00000011)").unwrap();
        let (pi, _) = eliminate_short_cycles_even(&sigma, 1).unwrap();
        assert!(pi.is_identity());
    }

    #[test]
    fn eliminate_even_single_seven_cycle() {
        let sigma = parse_cycles(
            8,
            "(00000000,00000001,00000010,00000011,00000100,00000101,00000110)",
        )
        .unwrap();
        let (pi, _) = eliminate_short_cycles_even(&sigma, 1).unwrap();
        assert_eq!(pi.concurrent_parity(1), Parity::Even);
        let out = sigma.compose(&pi);
        let pat = out.cycle_pattern();
        assert!(pat.free_of(&[3, 5]));
        assert!(pat.counts().keys().any(|k| k % 2 == 0));
    }

    #[test]
    fn eliminate_even_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        for n in [8, 9] {
            for _ in 0..12 {
                let sigma = Perm::random_even(n, &mut rng);
                let (pi, _) = eliminate_short_cycles_even(&sigma, 1).unwrap();
                assert!(pi.is_concurrent(1));
                assert_eq!(pi.concurrent_parity(1), Parity::Even, "n={n}");
                let out = sigma.compose(&pi);
                let pat = out.cycle_pattern();
                assert!(pat.free_of(&[3, 5]), "n={n}");
                assert!(pat.counts().keys().any(|k| k % 2 == 0), "n={n}");
            }
        }
    }

    #[test]
    fn synth_even_twelve_two_cycles() {
        let pat = CyclePattern::from_pairs(&[(2, 12), (1, 256 - 24)]);
        let (pi, tau) = synth_many_cycles_even(&pat, 1, 2, 8).unwrap();
        assert_eq!(pi.concurrent_parity(1), Parity::Even);
        assert_eq!(tau.concurrent_parity(2), Parity::Even);
        assert_eq!(pi.compose(&tau).cycle_pattern(), pat);
    }

    #[test]
    fn synth_even_rejects_trivial_pattern() {
        let pat = CyclePattern::from_pairs(&[(1, 256)]);
        assert!(synth_many_cycles_even(&pat, 1, 2, 8).is_err());
    }

    #[test]
    fn synth_long_cycle_cases() {
        for pairs in [
            vec![(12u64, 1u64), (2, 1), (1, 256 - 14)],
            vec![(14, 1), (2, 1), (1, 256 - 16)],
            vec![(13, 2), (1, 256 - 26)],
            vec![(13, 1), (1, 256 - 13)],
        ] {
            let pat = CyclePattern::from_pairs(&pairs);
            let (pi, tau) = synth_long_cycle_even(&pat, 1, 2, 8).unwrap();
            assert_eq!(pi.concurrent_parity(1), Parity::Even, "{pairs:?}");
            assert_eq!(tau.concurrent_parity(2), Parity::Even, "{pairs:?}");
            assert_eq!(pi.compose(&tau).cycle_pattern(), pat, "{pairs:?}");
        }
    }

    #[test]
    fn consecutive_pair_swap_identity() {
        // multiplying two cycles by two aligned transpositions keeps the
        // pattern: (i1..ik)(j1..jl)(i1,j1)(i2,j2) has cycles of length l, k
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let n = 5;
            let p = Perm::random(n, &mut rng);
            let cycles = p.cycles();
            if cycles.len() < 2 || cycles[0].len() < 2 || cycles[1].len() < 2 {
                continue;
            }
            let (c1, c2) = (&cycles[0], &cycles[1]);
            let sw = Perm::from_cycles(
                n,
                &[vec![c1[0], c2[0]], vec![c1[1], c2[1]]],
            )
            .unwrap();
            let q = p.compose(&sw);
            assert_eq!(q.cycle_pattern(), p.cycle_pattern());
        }
    }

    #[test]
    fn to_controlled_even_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(34);
        for n in [6, 8] {
            for _ in 0..10 {
                let sigma = Perm::random_even(n, &mut rng);
                let ([b1, b2, b3], ctl) = to_controlled_even(&sigma, 1).unwrap();
                assert!(ctl.is_controlled(1));
                for b in [&b1, &b2, &b3] {
                    assert_eq!(b.inner_parity(), Parity::Even, "n={n}");
                }
                let product =
                    Perm::product(&[&sigma, &b1.lift(), &b2.lift(), &b3.lift()]);
                assert_eq!(product, ctl);
            }
        }
    }

    #[test]
    fn controlled_recovery_even_small() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(35);
        for _ in 0..3 {
            let f = Perm::random(9, &mut rng);
            let g = loop {
                let g = Perm::random(9, &mut rng);
                if g.parity() == f.parity() {
                    break g;
                }
            };
            let sigma = Perm::assemble_halves(&f, &g, 1);
            let blocks = controlled_to_identity_even(&sigma, 1, 2, 3, 4).unwrap();
            let dims: Vec<Dim> = blocks.iter().map(|b| b.dim).collect();
            assert_eq!(dims, vec![1, 3, 4, 1, 3, 2, 1, 2]);
            for b in &blocks {
                assert_eq!(b.inner_parity(), Parity::Even);
            }
            let mut acc = Perm::identity(10);
            for b in blocks.iter().rev() {
                acc = b.lift().compose(&acc);
            }
            assert_eq!(acc, sigma);
        }
    }

    #[test]
    fn decompose_even10_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(36);
        for _ in 0..3 {
            let sigma = Perm::random_even(10, &mut rng);
            let d = decompose_even10(&sigma).unwrap();
            assert!(d.blocks.len() <= 10);
            assert_eq!(d.product(), sigma);
            for b in &d.blocks {
                assert_eq!(b.inner_parity(), Parity::Even);
            }
        }
        assert!(decompose_even10(&Perm::random_even(
            8,
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(1)
        ))
        .is_err());
    }
}
