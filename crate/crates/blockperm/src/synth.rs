//! Cycle-pattern synthesis with two concurrent blocks, and the seven-block
//! decomposition pipeline.
//!
//! Two blocks concurrent at different dimensions can realize the cycle
//! pattern of any even permutation that has no 3- or 5-cycles. The
//! construction packs the requested cycle lengths pairwise into disjoint
//! column regions: each region hosts a small "tape" permutation applied on
//! both halves of one dimension and a column coupler applied on both halves
//! of the other; the product walks the tape on both faces, switching faces
//! at coupler columns, and the arc lengths between couplings dial in the
//! cycle lengths.

use std::collections::BTreeMap;

use crate::blocks::{Block, DecompStats, Decomposition, Mode};
use crate::cuboid::to_controlled_impl;
use crate::error::{Error, Result};
use crate::perm::{
    bit, flip, insert_bit, next_permutation, reduced_dim, CyclePattern, Dim, Node, Parity, Perm,
};

/// A rectangle-shaped node set `{0,1}^2 x base`: all four combinations of
/// the `r1` and `r2` bits over each compressed coordinate in `base`.
#[derive(Debug, Clone)]
pub struct Region {
    pub n: u32,
    pub r1: Dim,
    pub r2: Dim,
    /// Compressed `(n-2)`-bit coordinates, one per column.
    pub base: Vec<Node>,
}

impl Region {
    pub fn full(n: u32, r1: Dim, r2: Dim) -> Region {
        Region {
            n,
            r1,
            r2,
            base: (0..(1u32 << (n - 2))).collect(),
        }
    }

    pub fn node_count(&self) -> u64 {
        4 * self.base.len() as u64
    }

    /// The node with bit `r1` = `f`, bit `r2` = `s` and compressed
    /// coordinate `z`.
    pub fn node(&self, f: u32, s: u32, z: Node) -> Node {
        assemble_node(z, self.r1, f, self.r2, s, self.n)
    }

    pub fn nodes(&self) -> Vec<Node> {
        let mut out = Vec::with_capacity(self.base.len() * 4);
        for &z in &self.base {
            for f in 0..2 {
                for s in 0..2 {
                    out.push(self.node(f, s, z));
                }
            }
        }
        out
    }
}

fn assemble_node(z: Node, d_f: Dim, f: u32, d_s: Dim, s: u32, n: u32) -> Node {
    let (dlo, blo, dhi, bhi) = if d_f < d_s {
        (d_f, f, d_s, s)
    } else {
        (d_s, s, d_f, f)
    };
    let y = insert_bit(z, dhi - 1, bhi, n - 1);
    insert_bit(y, dlo, blo, n)
}

// ---------------------------------------------------------------------------
// Band constructions.
//
// Local coordinates within a band of m columns: cells are (side, col) with
// id `col*2 + side`; coupler slots are (face, col) with id `col*2 + face`;
// nodes are (face, side, col) with id `col*4 + face*2 + side`. The band
// carries `p` (a cell permutation, lifted along the face dimension) and
// `chi` (a slot permutation, lifted along the side dimension); the band
// product applies `chi` then `p`.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JobArity {
    Pair(u64, u64),
    Quad(u64, u64, u64, u64),
}

impl JobArity {
    fn total(self) -> u64 {
        match self {
            JobArity::Pair(a, b) => a + b,
            JobArity::Quad(a, b, c, d) => a + b + c + d,
        }
    }

    fn cols(self) -> u64 {
        self.total() / 4
    }

    fn lengths(self) -> Vec<u64> {
        match self {
            JobArity::Pair(a, b) => vec![a, b],
            JobArity::Quad(a, b, c, d) => vec![a, b, c, d],
        }
    }
}

#[derive(Debug, Clone)]
struct Band {
    job: JobArity,
    /// Global compressed coordinates of the band's columns.
    cols: Vec<Node>,
    p: Vec<u32>,
    chi: Vec<u32>,
    swapped: bool,
}

fn local_step(p: &[u32], chi: &[u32], node: u32) -> u32 {
    let col = node >> 2;
    let f = (node >> 1) & 1;
    let s = node & 1;
    let slot = chi[((col << 1) | f) as usize];
    let (col2, f2) = (slot >> 1, slot & 1);
    let cell = p[((col2 << 1) | s) as usize];
    let (col3, s3) = (cell >> 1, cell & 1);
    (col3 << 2) | (f2 << 1) | s3
}

fn local_pattern(p: &[u32], chi: &[u32], m: usize) -> BTreeMap<u64, u64> {
    let total = 4 * m as u32;
    let mut visited = vec![false; total as usize];
    let mut counts = BTreeMap::new();
    for start in 0..total {
        if visited[start as usize] {
            continue;
        }
        let mut x = start;
        let mut len = 0u64;
        while !visited[x as usize] {
            visited[x as usize] = true;
            x = local_step(p, chi, x);
            len += 1;
        }
        *counts.entry(len).or_insert(0) += 1;
    }
    counts
}

fn perm_parity_of(table: &[u32]) -> Parity {
    let mut visited = vec![false; table.len()];
    let mut t = 0u64;
    for s in 0..table.len() {
        if visited[s] {
            continue;
        }
        let mut x = s;
        while !visited[x] {
            visited[x] = true;
            x = table[x] as usize;
            t += 1;
        }
        t -= 1;
    }
    if t % 2 == 0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// Cells of a sub-construction, in column-major order, with the columns
/// that belong to it entirely.
struct SubCells {
    cells: Vec<u32>,
    full_cols: Vec<u32>,
}

fn cell_cycle(p: &mut [u32], tape: &[u32]) {
    for (k, &c) in tape.iter().enumerate() {
        p[c as usize] = tape[(k + 1) % tape.len()];
    }
}

/// Build one `(a, b)` cycle pair on the given cells. Returns an error only
/// for requests the calling validation should have rejected.
fn build_pair(a: u64, b: u64, sub: &SubCells, p: &mut [u32], chi: &mut [u32]) -> Result<()> {
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    if a == 1 && b == 1 {
        return Ok(()); // fix-points
    }
    debug_assert_eq!((a + b) as usize, 2 * sub.cells.len());
    let bad = |reason| Error::BadPackRequest { a, b, reason };
    if a % 2 == 0 {
        // even pair: two tapes through one face-coupled column
        if b % 2 != 0 {
            return Err(bad("lengths must have equal parity"));
        }
        let z0 = *sub.full_cols.first().ok_or_else(|| bad("no full column"))?;
        let c_top = (z0 << 1) | 1;
        let c_bot = z0 << 1;
        let rest: Vec<u32> = sub
            .cells
            .iter()
            .copied()
            .filter(|&c| c != c_top && c != c_bot)
            .collect();
        let half_a = (a / 2) as usize;
        let mut tape_a = vec![c_top];
        tape_a.extend(&rest[..half_a - 1]);
        let mut tape_b = vec![c_bot];
        tape_b.extend(&rest[half_a - 1..]);
        debug_assert_eq!(tape_b.len() as u64, b / 2);
        cell_cycle(p, &tape_a);
        cell_cycle(p, &tape_b);
        chi.swap((z0 << 1) as usize, ((z0 << 1) | 1) as usize);
        return Ok(());
    }
    // odd pair
    if b == 1 {
        // one long cycle plus a fix-point: a tape that parks one cell
        if sub.full_cols.len() < 2 {
            return Err(bad("need two full columns"));
        }
        let (z0, z1) = (sub.full_cols[0], sub.full_cols[1]);
        let parked = (z0 << 1) | 1;
        let alpha = z0 << 1;
        let beta0 = z1 << 1;
        let beta1 = (z1 << 1) | 1;
        let mut tape = vec![beta0, alpha, beta1];
        tape.extend(
            sub.cells
                .iter()
                .copied()
                .filter(|&c| c != parked && c != alpha && c != beta0 && c != beta1),
        );
        cell_cycle(p, &tape);
        // couple (face 1, z0) with (face 0, z1)
        chi.swap(((z0 << 1) | 1) as usize, (z1 << 1) as usize);
        return Ok(());
    }
    // two odd lengths >= 7: one long tape, stitched across two columns; the
    // arc lengths between the stitch cells select the two cycle lengths
    if sub.full_cols.len() < 2 {
        return Err(bad("need two full columns"));
    }
    let (u, v) = (sub.full_cols[0], sub.full_cols[1]);
    let l = sub.cells.len();
    let d = ((a - b) / 2 + 2) as usize;
    if d + 2 > l {
        return Err(bad("lengths too close to the region size"));
    }
    let mut tape: Vec<Option<u32>> = vec![None; l];
    tape[0] = Some(u << 1); // (side 0, u)
    tape[1] = Some((v << 1) | 1); // (side 1, v)
    tape[d] = Some((u << 1) | 1); // (side 1, u)
    tape[l - 1] = Some(v << 1); // (side 0, v)
    let mut spare = sub
        .cells
        .iter()
        .copied()
        .filter(|&c| c >> 1 != u && c >> 1 != v);
    let tape: Vec<u32> = tape
        .into_iter()
        .map(|slot| slot.unwrap_or_else(|| spare.next().expect("enough spare cells")))
        .collect();
    debug_assert!(spare.next().is_none());
    cell_cycle(p, &tape);
    chi.swap((u << 1) as usize, ((v << 1) | 1) as usize);
    Ok(())
}

/// Column-major split of a quad's cells into its two sub-constructions.
fn quad_subcells(m: usize, first_cells: usize) -> (SubCells, SubCells) {
    let order: Vec<u32> = (0..2 * m as u32)
        .map(|k| {
            let col = k / 2;
            let side = k % 2;
            (col << 1) | side
        })
        .collect();
    let (x, y) = order.split_at(first_cells);
    let full_of = |cells: &[u32]| -> Vec<u32> {
        let mut cols: BTreeMap<u32, u32> = BTreeMap::new();
        for &c in cells {
            *cols.entry(c >> 1).or_insert(0) += 1;
        }
        cols.into_iter().filter(|&(_, k)| k == 2).map(|(z, _)| z).collect()
    };
    (
        SubCells {
            cells: x.to_vec(),
            full_cols: full_of(x),
        },
        SubCells {
            cells: y.to_vec(),
            full_cols: full_of(y),
        },
    )
}

fn build_job(job: JobArity, m: usize) -> Result<(Vec<u32>, Vec<u32>)> {
    let mut p: Vec<u32> = (0..2 * m as u32).collect();
    let mut chi: Vec<u32> = (0..2 * m as u32).collect();
    match job {
        JobArity::Pair(a, b) => {
            let all = SubCells {
                cells: (0..2 * m as u32)
                    .map(|k| ((k / 2) << 1) | (k % 2))
                    .collect(),
                full_cols: (0..m as u32).collect(),
            };
            build_pair(a, b, &all, &mut p, &mut chi)?;
        }
        JobArity::Quad(a, b, c, d) => {
            let (x, y) = quad_subcells(m, ((a + b) / 2) as usize);
            build_pair(a, b, &x, &mut p, &mut chi)?;
            build_pair(c, d, &y, &mut p, &mut chi)?;
        }
    }
    let got = local_pattern(&p, &chi, m);
    let mut want: BTreeMap<u64, u64> = BTreeMap::new();
    for len in job.lengths() {
        *want.entry(len).or_insert(0) += 1;
    }
    let leftover = 4 * m as u64 - job.total();
    if leftover > 0 {
        *want.entry(1).or_insert(0) += leftover;
    }
    if got != want {
        return Err(Error::Internal(format!(
            "pack construction produced {got:?}, wanted {want:?} for {job:?}"
        )));
    }
    Ok((p, chi))
}

/// Exhaustive rebuild of a small band (at most three columns), targeting an
/// exact cycle pattern and, optionally, exact layer parities.
fn search_band(job: JobArity, m: usize, want: Option<(Parity, Parity)>) -> Option<(Vec<u32>, Vec<u32>)> {
    let mut want_pattern: BTreeMap<u64, u64> = BTreeMap::new();
    for len in job.lengths() {
        *want_pattern.entry(len).or_insert(0) += 1;
    }
    let leftover = 4 * m as u64 - job.total();
    if leftover > 0 {
        *want_pattern.entry(1).or_insert(0) += leftover;
    }
    let k = 2 * m as u32;
    let mut p: Vec<u32> = (0..k).collect();
    loop {
        let p_par = perm_parity_of(&p);
        if want.map_or(true, |(wp, _)| wp == p_par) {
            let mut chi: Vec<u32> = (0..k).collect();
            loop {
                let ok_parity = want.map_or(true, |(_, wq)| wq == perm_parity_of(&chi));
                if ok_parity && local_pattern(&p, &chi, m) == want_pattern {
                    return Some((p, chi));
                }
                if !next_permutation(&mut chi) {
                    break;
                }
            }
        }
        if !next_permutation(&mut p) {
            return None;
        }
    }
}

fn emit_side(
    table: &mut [Node],
    cells: &[u32],
    band_cols: &[Node],
    d_carrier: Dim,
    d_cells: Dim,
    n: u32,
) {
    for carrier in 0..2 {
        for (from_cell, &to_cell) in cells.iter().enumerate() {
            let (col_a, s_a) = (from_cell as u32 >> 1, from_cell as u32 & 1);
            let (col_b, s_b) = (to_cell >> 1, to_cell & 1);
            let from = assemble_node(band_cols[col_a as usize], d_carrier, carrier, d_cells, s_a, n);
            let to = assemble_node(band_cols[col_b as usize], d_carrier, carrier, d_cells, s_b, n);
            table[from as usize] = to;
        }
    }
}

fn assemble_bands(bands: &[Band], r1: Dim, r2: Dim, n: u32) -> (Perm, Perm) {
    let mut pi_table: Vec<Node> = (0..(1u32 << n)).collect();
    let mut tau_table: Vec<Node> = (0..(1u32 << n)).collect();
    for band in bands {
        if band.swapped {
            emit_side(&mut tau_table, &band.p, &band.cols, r2, r1, n);
            emit_side(&mut pi_table, &band.chi, &band.cols, r1, r2, n);
        } else {
            emit_side(&mut pi_table, &band.p, &band.cols, r1, r2, n);
            emit_side(&mut tau_table, &band.chi, &band.cols, r2, r1, n);
        }
    }
    let pi = Perm::from_images(n, pi_table).expect("band emission is a permutation");
    let tau = Perm::from_images(n, tau_table).expect("band emission is a permutation");
    (pi, tau)
}

/// Greedy pairing of a cycle pattern into even-sum pairs: odd lengths pair
/// among themselves in ascending order, then even lengths likewise.
pub fn pair_cycles(pattern: &CyclePattern) -> Result<Vec<(u64, u64)>> {
    if pattern.parity() == Parity::Odd {
        return Err(Error::BadPattern(
            "odd permutation patterns cannot be paired".into(),
        ));
    }
    let mut odd = Vec::new();
    let mut even = Vec::new();
    for (&len, &count) in pattern.counts() {
        let list = if len % 2 == 1 { &mut odd } else { &mut even };
        for _ in 0..count {
            list.push(len);
        }
    }
    if odd.len() % 2 != 0 {
        return Err(Error::BadPattern("odd number of odd-length cycles".into()));
    }
    let mut pairs = Vec::new();
    for chunk in odd.chunks(2).chain(even.chunks(2)) {
        pairs.push((chunk[0], chunk[1]));
    }
    Ok(pairs)
}

fn jobs_from_pairs(pairs: &[(u64, u64)]) -> Result<Vec<JobArity>> {
    let mut jobs = Vec::new();
    let mut pending: Option<(u64, u64)> = None;
    for &(a, b) in pairs {
        if (a + b) % 4 == 0 {
            jobs.push(JobArity::Pair(a, b));
        } else {
            match pending.take() {
                None => pending = Some((a, b)),
                Some((c, d)) => jobs.push(JobArity::Quad(c, d, a, b)),
            }
        }
    }
    if pending.is_some() {
        return Err(Error::BadPattern(
            "unmatched pair with node count 2 mod 4".into(),
        ));
    }
    Ok(jobs)
}

fn validate_pattern(pattern: &CyclePattern, n: u32) -> Result<()> {
    if pattern.total() != 1u64 << n {
        return Err(Error::BadPattern(format!(
            "pattern covers {} nodes, expected {}",
            pattern.total(),
            1u64 << n
        )));
    }
    if !pattern.free_of(&[3, 5]) {
        return Err(Error::BadPattern(
            "patterns with 3- or 5-cycles cannot be built from two blocks".into(),
        ));
    }
    if pattern.parity() == Parity::Odd {
        return Err(Error::BadPattern("pattern belongs to odd permutations".into()));
    }
    Ok(())
}

/// Candidate nodes for a pattern-preserving mirrored swap: nodes whose
/// `d`-mirror lies in the same cycle of `base`, grouped by the distance to
/// the mirror. Swapping two nodes of equal mirror distance (together with
/// their mirrors) merges and re-splits cycles back to the same lengths.
fn toggle_candidates(base: &Perm, d: Dim) -> Vec<Vec<Node>> {
    let n = base.width();
    let mut by_dist: BTreeMap<u64, Vec<Node>> = BTreeMap::new();
    for x in 0..(1u32 << n) {
        let m = flip(x, d, n);
        if let Some(k) = base.dist(x, m) {
            if k > 0 {
                by_dist.entry(k).or_default().push(x);
            }
        }
    }
    by_dist.into_values().filter(|v| v.len() >= 2).collect()
}

/// Append a mirrored transposition pair to `factor` (concurrent at `d`)
/// that flips its inner parity but leaves the pattern of the product alone.
/// `base` is the permutation whose mirror structure the swap must respect
/// and `product_of` recomputes the full product for a candidate factor.
fn parity_toggle(
    base: &Perm,
    want: &CyclePattern,
    d: Dim,
    factor: &Perm,
    product_of: impl Fn(&Perm) -> Perm,
) -> Option<(Perm, Perm)> {
    let n = base.width();
    let mut tried = 0;
    for bucket in toggle_candidates(base, d) {
        for (i, &x) in bucket.iter().enumerate() {
            for &y in bucket.iter().skip(i + 1) {
                if y == flip(x, d, n) {
                    continue;
                }
                tried += 1;
                if tried > 400 {
                    return None;
                }
                let mut table: Vec<Node> = (0..(1u32 << n)).collect();
                table.swap(x as usize, y as usize);
                table.swap(flip(x, d, n) as usize, flip(y, d, n) as usize);
                let sw = Perm::from_images(n, table).unwrap();
                let cand = factor.compose(&sw);
                let new_product = product_of(&cand);
                if &new_product.cycle_pattern() == want {
                    return Some((cand, new_product));
                }
            }
        }
    }
    None
}

pub(crate) fn synthesize_pattern_impl(
    pattern: &CyclePattern,
    r1: Dim,
    r2: Dim,
    n: u32,
    even_layers: bool,
) -> Result<(Perm, Perm)> {
    if n < 4 {
        return Err(Error::WidthTooSmall {
            op: "synthesize_pattern",
            n,
            min: 4,
        });
    }
    if r1 == r2 {
        return Err(Error::DimsNotDistinct(vec![r1, r2]));
    }
    validate_pattern(pattern, n)?;
    let pairs = pair_cycles(pattern)?;
    let jobs = jobs_from_pairs(&pairs)?;

    // allocate columns in ascending order
    let mut bands = Vec::new();
    let mut next_col: Node = 0;
    for job in jobs {
        let m = job.cols() as usize;
        let cols: Vec<Node> = (next_col..next_col + m as Node).collect();
        next_col += m as Node;
        let (p, chi) = build_job(job, m)?;
        bands.push(Band {
            job,
            cols,
            p,
            chi,
            swapped: false,
        });
    }
    debug_assert!(next_col as u64 <= 1u64 << (n - 2));

    let (pi, tau) = assemble_bands(&bands, r1, r2, n);
    let product = pi.compose(&tau);
    if &product.cycle_pattern() != pattern {
        return Err(Error::Internal(format!(
            "synthesis produced {}, wanted {}",
            product.cycle_pattern(),
            pattern
        )));
    }
    if !even_layers {
        return Ok((pi, tau));
    }
    even_layer_fixup(bands, pi, tau, product, r1, r2, n)
}

/// Adjust layer parities to (even, even) without changing the product's
/// pattern. Tries, in order: mirrored transposition toggles on either side,
/// structural rebuilds of single bands (tape-family switch, orientation
/// swap, exhaustive small-band search), then toggles again.
fn even_layer_fixup(
    mut bands: Vec<Band>,
    mut pi: Perm,
    mut tau: Perm,
    mut product: Perm,
    r1: Dim,
    r2: Dim,
    n: u32,
) -> Result<(Perm, Perm)> {
    let want = product.cycle_pattern();
    for _round in 0..40 {
        let p_pi = pi.restrict(r1)?.parity();
        let p_tau = tau.restrict(r2)?.parity();
        match (p_pi, p_tau) {
            (Parity::Even, Parity::Even) => return Ok((pi, tau)),
            (Parity::Even, Parity::Odd) => {
                if let Some((t2, prod2)) =
                    parity_toggle(&product, &want, r2, &tau, |cand| pi.compose(cand))
                {
                    tau = t2;
                    product = prod2;
                    continue;
                }
            }
            (Parity::Odd, _) => {
                // the mirror structure of the reversed product governs
                // swaps appended to the first layer
                let reversed = tau.compose(&pi);
                if let Some((p2, _)) =
                    parity_toggle(&reversed, &want, r1, &pi, |cand| cand.compose(&tau))
                {
                    pi = p2;
                    product = pi.compose(&tau);
                    continue;
                }
            }
        }
        // structural rebuild: find a band whose change flips what we need
        if let Some(rebuilt) = rebuild_one_band(&bands, (p_pi, p_tau), r1, r2, n) {
            bands = rebuilt;
            let out = assemble_bands(&bands, r1, r2, n);
            pi = out.0;
            tau = out.1;
            product = pi.compose(&tau);
            if product.cycle_pattern() != want {
                return Err(Error::Internal("rebuild changed the pattern".into()));
            }
            continue;
        }
        return Err(Error::Internal(format!(
            "no parity fix found: layer parities ({p_pi:?}, {p_tau:?})"
        )));
    }
    Err(Error::Internal("parity fixup did not converge".into()))
}

fn band_layer_parities(band: &Band) -> (Parity, Parity) {
    let pp = perm_parity_of(&band.p);
    let pq = perm_parity_of(&band.chi);
    if band.swapped {
        (pq, pp)
    } else {
        (pp, pq)
    }
}

fn rebuild_one_band(
    bands: &[Band],
    need: (Parity, Parity),
    _r1: Dim,
    _r2: Dim,
    _n: u32,
) -> Option<Vec<Band>> {
    let need_pi = need.0 == Parity::Odd;
    let need_tau = need.1 == Parity::Odd;
    for (idx, band) in bands.iter().enumerate() {
        let m = band.cols.len();
        let (cur_pi, cur_tau) = band_layer_parities(band);
        // orientation swap flips both contributions when they differ
        if need_pi && need_tau && cur_pi != cur_tau {
            let mut out = bands.to_vec();
            out[idx].swapped = !out[idx].swapped;
            return Some(out);
        }
        if m <= 3 {
            // exhaustive search for the exact parity complement
            let wp = if need_pi { other(cur_pi) } else { cur_pi };
            let wq = if need_tau { other(cur_tau) } else { cur_tau };
            if (wp, wq) != (cur_pi, cur_tau) {
                let target = if band.swapped { (wq, wp) } else { (wp, wq) };
                if let Some((p, chi)) = search_band(band.job, m, Some(target)) {
                    let mut out = bands.to_vec();
                    out[idx].p = p;
                    out[idx].chi = chi;
                    return Some(out);
                }
            }
        }
    }
    None
}

fn other(p: Parity) -> Parity {
    match p {
        Parity::Even => Parity::Odd,
        Parity::Odd => Parity::Even,
    }
}

/// Two blocks on distinct dimensions whose product has the requested cycle
/// pattern. The pattern must be even, free of 3- and 5-cycles, and cover
/// `2^n` nodes.
pub fn synthesize_pattern(
    pattern: &CyclePattern,
    r1: Dim,
    r2: Dim,
    n: u32,
) -> Result<(Perm, Perm)> {
    synthesize_pattern_impl(pattern, r1, r2, n, false)
}

fn validate_pack_lengths(a: u64, b: u64) -> Result<()> {
    for len in [a, b] {
        if len == 3 || len == 5 {
            return Err(Error::BadPackRequest {
                a,
                b,
                reason: "3- and 5-cycles cannot be packed",
            });
        }
    }
    Ok(())
}

/// Build one `a`-cycle and one `b`-cycle inside a rectangle region, using a
/// block concurrent at `region.r2` (returned first) and one concurrent at
/// `region.r1`. Every node outside the region is fixed by both outputs, and
/// `a + b` must be divisible by 4.
pub fn pack_pair(region: &Region, a: u64, b: u64) -> Result<(Perm, Perm)> {
    if a == 0 && b == 0 {
        let id = Perm::identity(region.n);
        return Ok((id.clone(), id));
    }
    validate_pack_lengths(a, b)?;
    if (a + b) % 4 != 0 {
        return Err(Error::BadPackRequest {
            a,
            b,
            reason: "node count must be divisible by 4",
        });
    }
    if a + b > region.node_count() {
        return Err(Error::RegionTooSmall {
            need: a + b,
            have: region.node_count(),
        });
    }
    let job = JobArity::Pair(a, b);
    let m = job.cols() as usize;
    let (p, chi) = build_job(job, m)?;
    let band = Band {
        job,
        cols: region.base[..m].to_vec(),
        p,
        chi,
        swapped: false,
    };
    let (pi, tau) = assemble_bands(&[band], region.r1, region.r2, region.n);
    Ok((tau, pi))
}

/// Build an `a,b,c,d`-cycle inside a rectangle region; the `(a, b)` and
/// `(c, d)` parts occupy disjoint cells and are produced simultaneously.
/// Both `a + b` and `c + d` must be 2 mod 4.
pub fn pack_quad(region: &Region, a: u64, b: u64, c: u64, d: u64) -> Result<(Perm, Perm)> {
    validate_pack_lengths(a, b)?;
    validate_pack_lengths(c, d)?;
    if (a + b) % 4 != 2 || (c + d) % 4 != 2 {
        return Err(Error::BadPackRequest {
            a,
            b,
            reason: "each half must have node count 2 mod 4",
        });
    }
    let total = a + b + c + d;
    if total > region.node_count() {
        return Err(Error::RegionTooSmall {
            need: total,
            have: region.node_count(),
        });
    }
    let job = JobArity::Quad(a, b, c, d);
    let m = job.cols() as usize;
    let (p, chi) = build_job(job, m)?;
    let band = Band {
        job,
        cols: region.base[..m].to_vec(),
        p,
        chi,
        swapped: false,
    };
    let (pi, tau) = assemble_bands(&[band], region.r1, region.r2, region.n);
    Ok((tau, pi))
}

/// Remove every 3- and 5-cycle by right-multiplying with a block concurrent
/// at `r1`. Each round merges one short cycle into a longer one with a
/// mirrored double swap; the number of cycles of length at most 5 strictly
/// decreases per round.
pub fn eliminate_short_cycles(sigma: &Perm, r1: Dim) -> Result<(Perm, u64)> {
    let n = sigma.width();
    if n < 5 {
        return Err(Error::WidthTooSmall {
            op: "eliminate_short_cycles",
            n,
            min: 5,
        });
    }
    if sigma.parity() == Parity::Odd {
        return Err(Error::OddPermutation("short-cycle removal expects even input"));
    }
    let mut cur = sigma.clone();
    let mut out = Perm::identity(n);
    let mut rounds = 0u64;
    loop {
        let cycles = cur.cycles();
        let short = cycles
            .iter()
            .find(|c| c.len() == 3 || c.len() == 5)
            .cloned();
        let Some(c1) = short else { break };
        let zeta_before = small_cycle_count(&cur);
        // an odd cycle always has a node whose mirror lies outside it
        let mut sorted = c1.clone();
        sorted.sort_unstable();
        let u = sorted
            .iter()
            .copied()
            .find(|&u| !c1.contains(&flip(u, r1, n)))
            .expect("odd cycles cannot be mirror-closed");
        let v = flip(u, r1, n);
        // the short cycle plus everything within five steps of v's cycle
        let mut window: Vec<Node> = c1.clone();
        let c2 = cycle_of(&cur, v);
        let l2 = c2.len();
        for (i, &w) in c2.iter().enumerate() {
            if i.min(l2 - i) <= 5 {
                window.push(w);
            }
        }
        let in_window = |x: Node| window.contains(&x);
        let t = (0..(1u32 << n))
            .find(|&t| {
                bit(t, r1, n) == bit(u, r1, n) && !in_window(t) && !in_window(flip(t, r1, n))
            })
            .ok_or_else(|| Error::Internal("no spare mirror pair".into()))?;
        let s = flip(t, r1, n);
        let mut table: Vec<Node> = (0..(1u32 << n)).collect();
        table.swap(u as usize, t as usize);
        table.swap(v as usize, s as usize);
        let step = Perm::from_images(n, table).unwrap();
        cur = cur.compose(&step);
        out = out.compose(&step);
        rounds += 1;
        let zeta_after = small_cycle_count(&cur);
        if zeta_after >= zeta_before {
            return Err(Error::Internal(format!(
                "short-cycle count did not decrease: {zeta_before} -> {zeta_after}"
            )));
        }
    }
    debug_assert!(out.is_concurrent(r1));
    Ok((out, rounds))
}

/// Number of cycles of length at most 5, fix-points included.
pub(crate) fn small_cycle_count(p: &Perm) -> u64 {
    let pat = p.cycle_pattern();
    (1..=5).map(|k| pat.count(k)).sum()
}

/// The cycle of `p` through `x`, starting at `x`.
fn cycle_of(p: &Perm, x: Node) -> Vec<Node> {
    let mut out = vec![x];
    let mut cur = p.apply(x);
    while cur != x {
        out.push(cur);
        cur = p.apply(cur);
    }
    out
}

/// A permutation `h` with `h * p * h^-1 = q`; requires equal cycle
/// patterns. Cycles of equal length are aligned in leader order and mapped
/// positionally.
pub fn conjugator(p: &Perm, q: &Perm) -> Result<Perm> {
    if p.cycle_pattern() != q.cycle_pattern() {
        return Err(Error::BadPattern("conjugator needs equal cycle patterns".into()));
    }
    let n = p.width();
    let group = |x: &Perm| -> BTreeMap<usize, Vec<Vec<Node>>> {
        let mut by_len: BTreeMap<usize, Vec<Vec<Node>>> = BTreeMap::new();
        for c in x.cycles() {
            by_len.entry(c.len()).or_default().push(c);
        }
        let mut fixed: Vec<Vec<Node>> = Vec::new();
        let support: std::collections::HashSet<Node> = x.support().into_iter().collect();
        for node in 0..(1u32 << x.width()) {
            if !support.contains(&node) {
                fixed.push(vec![node]);
            }
        }
        if !fixed.is_empty() {
            by_len.insert(1, fixed);
        }
        by_len
    };
    let pc = group(p);
    let qc = group(q);
    let mut image = vec![0; 1 << n];
    for (len, p_cycles) in &pc {
        let q_cycles = &qc[len];
        for (pcyc, qcyc) in p_cycles.iter().zip(q_cycles) {
            for (a, b) in pcyc.iter().zip(qcyc) {
                image[*a as usize] = *b;
            }
        }
    }
    let h = Perm::from_images(n, image)?;
    debug_assert_eq!(p.conjugate_by(&h), *q);
    Ok(h)
}

pub(crate) fn controlled_to_identity_impl(
    sigma: &Perm,
    r1: Dim,
    r2: Dim,
    r3: Dim,
    r4: Dim,
) -> Result<([Block; 5], u64)> {
    let n = sigma.width();
    if n < 6 {
        return Err(Error::WidthTooSmall {
            op: "controlled_to_identity",
            n,
            min: 6,
        });
    }
    if [r2, r3, r4].contains(&r1) || r3 == r4 {
        return Err(Error::DimsNotDistinct(vec![r1, r2, r3, r4]));
    }
    if !sigma.is_controlled(r1) {
        return Err(Error::NotControlled { dim: r1 });
    }
    if sigma.parity() == Parity::Odd {
        return Err(Error::OddPermutation("recovery expects an even permutation"));
    }
    let (f, g) = sigma.controlled_halves(r1)?;
    let q0 = f.inverse().compose(&g);
    let r2r = reduced_dim(r2, r1);
    let r3r = reduced_dim(r3, r1);
    let r4r = reduced_dim(r4, r1);
    let (g_prime, rounds) = eliminate_short_cycles(&q0, r2r)?;
    let q = q0.compose(&g_prime);
    let (rho1, rho2) = synthesize_pattern(&q.cycle_pattern(), r4r, r3r, n - 1)?;
    let target = rho1.compose(&rho2);
    let h = conjugator(&q, &target)?;
    let blocks = [
        Block::new(r2, Perm::embed_upper_half(&g_prime, r1).restrict(r2)?),
        Block::new(r1, h.inverse()),
        Block::new(r3, Perm::embed_upper_half(&rho2.inverse(), r1).restrict(r3)?),
        Block::new(r4, Perm::embed_upper_half(&rho1.inverse(), r1).restrict(r4)?),
        Block::new(r1, h.compose(&f.inverse())),
    ];
    Ok((blocks, rounds))
}

/// Five blocks on dimensions `(r2, r1, r3, r4, r1)` such that
/// `sigma * b1 * b2 * b3 * b4 * b5` is the identity.
pub fn controlled_to_identity(
    sigma: &Perm,
    r1: Dim,
    r2: Dim,
    r3: Dim,
    r4: Dim,
) -> Result<[Block; 5]> {
    Ok(controlled_to_identity_impl(sigma, r1, r2, r3, r4)?.0)
}

/// Decompose an even permutation into at most seven blocks (width >= 6);
/// widths 4 and 5 fall back to an unbounded greedy and are tagged as such.
pub fn decompose_block7(sigma: &Perm) -> Result<Decomposition> {
    let n = sigma.width();
    if n < 4 {
        return Err(Error::WidthTooSmall {
            op: "decompose_block7",
            n,
            min: 4,
        });
    }
    if sigma.parity() == Parity::Odd {
        return Err(Error::OddPermutation("only even permutations decompose into blocks"));
    }
    let source_digest = sigma.digest();
    if n < 6 {
        let (blocks, stats) = greedy_blocks(sigma)?;
        let d = Decomposition {
            n,
            mode: Mode::Greedy,
            blocks,
            source_digest,
            stats,
        };
        verify_product(sigma, &d)?;
        return Ok(d);
    }
    if sigma.is_identity() {
        return Ok(Decomposition {
            n,
            mode: Mode::Block7,
            blocks: Vec::new(),
            source_digest,
            stats: DecompStats::default(),
        });
    }
    let r1 = 1;
    let ((a_blocks, ctl), labels) = to_controlled_impl(sigma, r1, false)?;
    let r2 = a_blocks[0].dim;
    let mut rest = (1..=n).filter(|&d| d != r1 && d != r2);
    let r3 = rest.next().unwrap();
    let r4 = rest.next().unwrap();
    let ([p1, s1, t1, t2, s2], rounds) = controlled_to_identity_impl(&ctl, r1, r2, r3, r4)?;
    let [a1, a2, a3] = a_blocks;
    let merged = p1.inverse().merge(&a3.inverse());
    let blocks: Vec<Block> = [
        s2.inverse(),
        t2.inverse(),
        t1.inverse(),
        s1.inverse(),
        merged,
        a2.inverse(),
        a1.inverse(),
    ]
    .into_iter()
    .filter(|b| !b.is_identity())
    .collect();
    let d = Decomposition {
        n,
        mode: Mode::Block7,
        blocks,
        source_digest,
        stats: DecompStats {
            rounds_35: rounds,
            case_labels: labels,
        },
    };
    verify_product(sigma, &d)?;
    Ok(d)
}

fn verify_product(sigma: &Perm, d: &Decomposition) -> Result<()> {
    if &d.product() != sigma {
        return Err(Error::Internal("decomposition does not recompose".into()));
    }
    if let Some(bound) = d.mode.block_bound() {
        if d.blocks.len() > bound {
            return Err(Error::Internal(format!(
                "{} blocks exceed the {bound}-block bound",
                d.blocks.len()
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Greedy fallback for widths 4 and 5: peel one controlled step, then recurse
// on the half quotient; width 3 is finished by breadth-first search over the
// (tiny) group generated by lifted two-bit permutations.
// ---------------------------------------------------------------------------

fn greedy_blocks(sigma: &Perm) -> Result<(Vec<Block>, DecompStats)> {
    let mut stats = DecompStats::default();
    let blocks = greedy_rec(sigma, &mut stats)?;
    Ok((blocks, stats))
}

fn greedy_rec(sigma: &Perm, stats: &mut DecompStats) -> Result<Vec<Block>> {
    let n = sigma.width();
    if sigma.is_identity() {
        return Ok(Vec::new());
    }
    let r1 = 1;
    let ((a_blocks, ctl), labels) = to_controlled_impl(sigma, r1, false)?;
    stats.case_labels.extend(labels);
    let (f, g) = ctl.controlled_halves(r1)?;
    let q = f.inverse().compose(&g);
    // sigma = lift(f) * embed(q) * a3^-1 * a2^-1 * a1^-1, with embed(q)
    // expanded block by block
    let mut blocks = vec![Block::new(r1, f)];
    if n == 4 {
        blocks.extend(embed_by_double_swaps(&q, r1)?);
    } else {
        for b in greedy_rec(&q, stats)? {
            let lifted = Perm::lift(&b.inner, b.dim);
            let embedded = Perm::embed_upper_half(&lifted, r1);
            let dim = b.dim + 1; // inner space is bits 2..n
            blocks.push(Block::new(dim, embedded.restrict(dim)?));
        }
    }
    let [a1, a2, a3] = a_blocks;
    for b in [a3.inverse(), a2.inverse(), a1.inverse()] {
        blocks.push(b);
    }
    Ok(blocks.into_iter().filter(|b| !b.is_identity()).collect())
}

/// Express `embed(q)` (the n-bit permutation applying the even `(n-1)`-bit
/// permutation `q` on the upper half of `r1`) as a block word.
///
/// Lifted `(n-2)`-bit permutations inside the half generate only affine
/// maps, so plain recursion cannot finish here. Instead `q` is written as a
/// product of disjoint double transpositions; each is a conjugate of one
/// fixed lifted double swap, and the conjugating permutations enter as
/// mergeable blocks on `r1`.
fn embed_by_double_swaps(q: &Perm, r1: Dim) -> Result<Vec<Block>> {
    let m = q.width();
    let swaps = double_transpositions(q)?;
    // the template: swap two point pairs that differ in the last bit
    let template: [Node; 4] = [0b000, 0b001, 0b100, 0b101];
    let w0 = Perm::from_cycles(m, &[vec![template[0], template[1]], vec![template[2], template[3]]])?;
    debug_assert!((1..=m).any(|d| w0.is_concurrent(d)));
    let w_dim = (1..=m).find(|&d| w0.is_concurrent(d)).unwrap();
    let mut blocks = Vec::new();
    let mut prev_inv: Option<Perm> = None;
    for quad in &swaps {
        // carrier: any permutation mapping the template onto the quad
        let mut image: Vec<Node> = vec![u32::MAX; 1 << m];
        for (t, target) in template.iter().zip(quad) {
            image[*t as usize] = *target;
        }
        let used: std::collections::HashSet<Node> = quad.iter().copied().collect();
        let mut free = (0..(1u32 << m)).filter(|x| !used.contains(x));
        for (x, slot) in image.iter_mut().enumerate() {
            if *slot == u32::MAX {
                let _ = x;
                *slot = free.next().unwrap();
            }
        }
        let carrier = Perm::from_images(m, image)?;
        // [id; c w c^-1] = lift(c) emb(w) lift(c^-1); adjacent carriers merge
        let lead = match prev_inv.take() {
            None => carrier.clone(),
            Some(pi) => pi.compose(&carrier),
        };
        blocks.push(Block::new(r1, lead));
        let emb = Perm::embed_upper_half(&w0, r1);
        let bdim = w_dim + 1; // inner space occupies bits 2..n
        debug_assert!(emb.is_concurrent(bdim));
        blocks.push(Block::new(bdim, emb.restrict(bdim)?));
        prev_inv = Some(carrier.inverse());
    }
    if let Some(pi) = prev_inv {
        blocks.push(Block::new(r1, pi));
    }
    Ok(blocks)
}

/// Write an even permutation as disjoint double transpositions
/// `(a b)(c d)`, using a spare point when two consecutive transpositions
/// overlap.
fn double_transpositions(q: &Perm) -> Result<Vec<[Node; 4]>> {
    let n = q.width();
    let mut rem = q.clone();
    let mut transpositions: Vec<(Node, Node)> = Vec::new();
    while !rem.is_identity() {
        let a = (0..(1u32 << n)).find(|&x| rem.apply(x) != x).unwrap();
        let b = rem.apply(a);
        // peel (a b) off the left: (a b) * rem fixes a
        let swap = Perm::from_cycles(n, &[vec![a, b]])?;
        rem = swap.compose(&rem);
        transpositions.push((a, b));
    }
    // q = t1 * t2 * ... (in peel order), so pair them up left to right
    if transpositions.len() % 2 != 0 {
        return Err(Error::OddPermutation("double-swap expansion needs even input"));
    }
    let mut out = Vec::new();
    for pair in transpositions.chunks(2) {
        let (a, b) = pair[0];
        let (c, d) = pair[1];
        if a != c && a != d && b != c && b != d {
            out.push([a, b, c, d]);
            continue;
        }
        // overlapping: route through a fresh disjoint transposition
        let used = [a, b, c, d];
        let mut fresh = (0..(1u32 << n)).filter(|x| !used.contains(x));
        let (e, f) = (fresh.next().unwrap(), fresh.next().unwrap());
        out.push([a, b, e, f]);
        out.push([e, f, c, d]);
    }
    Ok(out)
}
