//! Self-avoiding walk counts on the square lattice.
//!
//! Walks start at the origin. The half-plane walks use every edge with both
//! endpoints in `y ≥ 0`, which includes the horizontal edges of layer 0 but no
//! vertical edge below it:
//!
//! ```text
//!   y=2  ·───·───·───·
//!        │   │   │   │
//!   y=1  ·───·───·───·
//!        │   │   │   │
//!   y=0  ·───o───·───·     (nothing below this row)
//! ```
//!
//! `a` counts half-plane walks ending on `y = 0`, `b` all half-plane walks,
//! `c` all walks in the plane, and `d` the largest count of plane walks that
//! end in a fixed layer and avoid a fixed neighbour of the origin.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prefix length used to split the enumeration into parallel jobs.
const PREFIX_DEPTH: usize = 6;
/// Nodes a worker visits between checks of the shared budget.
const FLUSH_EVERY: u64 = 1 << 16;
/// Growth rate used for the tail of the `a` estimate.
pub const GROWTH: f64 = 2.76;
/// Largest length accepted by the minimal-path oracle.
pub const ORACLE_MAX_LEN: usize = 7;
const ORACLE_MAX_FREE_EDGES: usize = 24;

/// The four lattice neighbours of the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Neighbor {
    Up,
    Down,
    Right,
    Left,
}

impl Neighbor {
    pub const ALL: [Neighbor; 4] = [Neighbor::Up, Neighbor::Down, Neighbor::Right, Neighbor::Left];

    pub fn offset(self) -> (i32, i32) {
        match self {
            Neighbor::Up => (0, 1),
            Neighbor::Down => (0, -1),
            Neighbor::Right => (1, 0),
            Neighbor::Left => (-1, 0),
        }
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }

    fn at(x: i32, y: i32) -> Option<Neighbor> {
        Neighbor::ALL.into_iter().find(|n| n.offset() == (x, y))
    }
}

const UP: u8 = 1;
const DOWN: u8 = 2;
const RIGHT: u8 = 4;
const LEFT: u8 = 8;

fn mirror_x(mask: u8) -> u8 {
    (mask & (UP | DOWN)) | (mask & RIGHT) << 1 | (mask & LEFT) >> 1
}

fn mirror_y(mask: u8) -> u8 {
    (mask & (RIGHT | LEFT)) | (mask & UP) << 1 | (mask & DOWN) >> 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Edges with both endpoints in `y ≥ 0`.
    HalfPlane,
    Plane,
}

/// Largest lengths requested for each table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusCaps {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

impl CensusCaps {
    pub const FULL: CensusCaps = CensusCaps { a: 22, b: 21, c: 21, d: 20 };
    pub const QUICK: CensusCaps = CensusCaps { a: 16, b: 16, c: 16, d: 16 };

    pub fn uniform(len: usize) -> CensusCaps {
        CensusCaps { a: len, b: len, c: len, d: len }
    }
}

impl Default for CensusCaps {
    fn default() -> CensusCaps {
        CensusCaps::FULL
    }
}

/// Counts of plane walks by length, endpoint layer and which neighbours of
/// the origin they visit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvoidanceTable {
    max_len: usize,
    counts: Vec<u64>,
}

impl AvoidanceTable {
    fn new(max_len: usize) -> AvoidanceTable {
        AvoidanceTable { max_len, counts: vec![0; (max_len + 1) * (2 * max_len + 1) * 16] }
    }

    fn slot(&self, len: usize, layer: i32, mask: u8) -> usize {
        let width = 2 * self.max_len + 1;
        (len * width + (layer + self.max_len as i32) as usize) * 16 + mask as usize
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Walks of length `len` ending in layer `layer` that never visit `v`.
    pub fn count(&self, len: usize, layer: i32, v: Neighbor) -> u64 {
        if len > self.max_len || layer.unsigned_abs() as usize > len {
            return 0;
        }
        (0..16u8).filter(|m| m & v.bit() == 0).map(|m| self.counts[self.slot(len, layer, m)]).sum()
    }

    /// `max` of [`Self::count`] over layers and neighbours.
    pub fn max_at(&self, len: usize) -> u64 {
        let l = len as i32;
        (-l..=l).flat_map(|layer| Neighbor::ALL.map(|v| self.count(len, layer, v))).max().unwrap_or(0)
    }

    fn add(&mut self, other: &AvoidanceTable) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Raw tallies of one enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCounts {
    pub region: Region,
    /// Walks by length.
    pub total: Vec<u64>,
    /// Walks by length ending on `y = 0`.
    pub on_axis: Vec<u64>,
    pub avoidance: AvoidanceTable,
    /// Set when the node budget ran out; every entry is then a lower bound.
    pub truncated: bool,
}

impl RegionCounts {
    fn new(region: Region, max_len: usize, avoid_len: usize) -> RegionCounts {
        RegionCounts {
            region,
            total: vec![0; max_len + 1],
            on_axis: vec![0; max_len + 1],
            avoidance: AvoidanceTable::new(avoid_len),
            truncated: false,
        }
    }

    fn merge(mut self, other: RegionCounts) -> RegionCounts {
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
        for (a, b) in self.on_axis.iter_mut().zip(&other.on_axis) {
            *a += b;
        }
        self.avoidance.add(&other.avoidance);
        self.truncated |= other.truncated;
        self
    }
}

struct Budget {
    limit: Option<u64>,
    used: AtomicU64,
    exceeded: AtomicBool,
}

impl Budget {
    fn charge(&self, nodes: u64) -> bool {
        let used = self.used.fetch_add(nodes, Ordering::Relaxed) + nodes;
        if self.limit.is_some_and(|limit| used > limit) {
            self.exceeded.store(true, Ordering::Relaxed);
        }
        !self.exceeded.load(Ordering::Relaxed)
    }
}

/// Partial walk. Only one representative per symmetry class is enumerated:
/// the first horizontal step goes right, and in the plane the first vertical
/// step goes up.
#[derive(Clone, Debug)]
struct Walk {
    path: Vec<(i32, i32)>,
    turned_h: bool,
    turned_v: bool,
    visited: u8,
}

struct Walker<'a> {
    region: Region,
    max_len: usize,
    side: i32,
    occupied: Vec<bool>,
    counts: RegionCounts,
    pending: u64,
    budget: &'a Budget,
}

impl<'a> Walker<'a> {
    fn new(region: Region, max_len: usize, avoid_len: usize, budget: &'a Budget) -> Walker<'a> {
        let side = 2 * max_len as i32 + 3;
        Walker {
            region,
            max_len,
            side,
            occupied: vec![false; (side * side) as usize],
            counts: RegionCounts::new(region, max_len, avoid_len),
            pending: 0,
            budget,
        }
    }

    fn cell(&self, (x, y): (i32, i32)) -> usize {
        let off = self.side / 2;
        ((y + off) * self.side + x + off) as usize
    }

    fn tally(&mut self, walk: &Walk) {
        let len = walk.path.len() - 1;
        let (_, y) = *walk.path.last().expect("walks are nonempty");
        let images_h = if walk.turned_h { 2 } else { 1 };
        match self.region {
            Region::HalfPlane => {
                self.counts.total[len] += images_h;
                if y == 0 {
                    self.counts.on_axis[len] += images_h;
                }
            }
            Region::Plane => {
                let images_v = if walk.turned_v { 2 } else { 1 };
                self.counts.total[len] += images_h * images_v;
                if y == 0 {
                    self.counts.on_axis[len] += images_h * images_v;
                }
                if len <= self.counts.avoidance.max_len {
                    let table = &mut self.counts.avoidance;
                    let mut bump = |layer: i32, mask: u8| {
                        let slot = table.slot(len, layer, mask);
                        table.counts[slot] += 1;
                    };
                    bump(y, walk.visited);
                    if walk.turned_h {
                        bump(y, mirror_x(walk.visited));
                    }
                    if walk.turned_v {
                        bump(-y, mirror_y(walk.visited));
                        if walk.turned_h {
                            bump(-y, mirror_x(mirror_y(walk.visited)));
                        }
                    }
                }
            }
        }
    }

    fn moves(&self, walk: &Walk) -> impl Iterator<Item = (Neighbor, (i32, i32))> + '_ {
        let (x, y) = *walk.path.last().expect("walks are nonempty");
        let (turned_h, turned_v) = (walk.turned_h, walk.turned_v);
        let region = self.region;
        Neighbor::ALL.into_iter().filter_map(move |dir| {
            if dir == Neighbor::Left && !turned_h {
                return None;
            }
            if dir == Neighbor::Down {
                match region {
                    Region::HalfPlane if y == 0 => return None,
                    Region::Plane if !turned_v => return None,
                    _ => {}
                }
            }
            let (dx, dy) = dir.offset();
            let next = (x + dx, y + dy);
            (!self.occupied[self.cell(next)]).then_some((dir, next))
        })
    }

    fn push(&mut self, walk: &mut Walk, dir: Neighbor, next: (i32, i32)) -> (bool, bool, u8) {
        let saved = (walk.turned_h, walk.turned_v, walk.visited);
        match dir {
            Neighbor::Right | Neighbor::Left => walk.turned_h = true,
            Neighbor::Up | Neighbor::Down => walk.turned_v = true,
        }
        if let Some(n) = Neighbor::at(next.0, next.1) {
            walk.visited |= n.bit();
        }
        let cell = self.cell(next);
        self.occupied[cell] = true;
        walk.path.push(next);
        saved
    }

    fn pop(&mut self, walk: &mut Walk, saved: (bool, bool, u8)) {
        let last = walk.path.pop().expect("pushed before");
        let cell = self.cell(last);
        self.occupied[cell] = false;
        (walk.turned_h, walk.turned_v, walk.visited) = saved;
    }

    /// Tallies `walk` and everything extending it.
    fn explore(&mut self, walk: &mut Walk) -> bool {
        self.tally(walk);
        self.pending += 1;
        if self.pending == FLUSH_EVERY {
            self.pending = 0;
            if !self.budget.charge(FLUSH_EVERY) {
                return false;
            }
        }
        if walk.path.len() > self.max_len {
            return true;
        }
        let mut moves = [(Neighbor::Up, (0, 0)); 4];
        let mut count = 0;
        for m in self.moves(walk) {
            moves[count] = m;
            count += 1;
        }
        for &(dir, next) in &moves[..count] {
            let saved = self.push(walk, dir, next);
            let alive = self.explore(walk);
            self.pop(walk, saved);
            if !alive {
                return false;
            }
        }
        true
    }

    /// Tallies walks shorter than `depth` and collects those of length `depth`.
    fn prefixes(&mut self, walk: &mut Walk, depth: usize, out: &mut Vec<Walk>) {
        if walk.path.len() - 1 == depth {
            out.push(walk.clone());
            return;
        }
        self.tally(walk);
        let mut moves = [(Neighbor::Up, (0, 0)); 4];
        let mut count = 0;
        for m in self.moves(walk) {
            moves[count] = m;
            count += 1;
        }
        for &(dir, next) in &moves[..count] {
            let saved = self.push(walk, dir, next);
            self.prefixes(walk, depth, out);
            self.pop(walk, saved);
        }
    }

    fn finish(self) -> RegionCounts {
        self.budget.charge(self.pending);
        self.counts
    }
}

/// Counts all walks of length `≤ max_len` in `region`. Avoidance counts are
/// kept for plane walks of length `≤ avoid_len`. A `node_limit` stops the
/// enumeration early and marks the result as truncated.
pub fn enumerate(region: Region, max_len: usize, avoid_len: usize, node_limit: Option<u64>) -> RegionCounts {
    let avoid_len = if region == Region::Plane { avoid_len.min(max_len) } else { 0 };
    let budget = Budget { limit: node_limit, used: AtomicU64::new(0), exceeded: AtomicBool::new(false) };
    let origin = Walk { path: vec![(0, 0)], turned_h: false, turned_v: false, visited: 0 };

    let depth = PREFIX_DEPTH.min(max_len);
    let mut head = Walker::new(region, max_len, avoid_len, &budget);
    let mut starts = Vec::new();
    let mut root = origin.clone();
    let cell = head.cell((0, 0));
    head.occupied[cell] = true;
    head.prefixes(&mut root, depth, &mut starts);
    let base = head.finish();

    let mut counts = starts
        .into_par_iter()
        .map(|mut walk| {
            let mut worker = Walker::new(region, max_len, avoid_len, &budget);
            for &v in &walk.path {
                let cell = worker.cell(v);
                worker.occupied[cell] = true;
            }
            worker.explore(&mut walk);
            worker.finish()
        })
        .reduce(|| RegionCounts::new(region, max_len, avoid_len), RegionCounts::merge)
        .merge(base);
    counts.truncated = budget.exceeded.load(Ordering::Relaxed);
    counts
}

/// Every table of the census.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCensus {
    pub caps: CensusCaps,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub c: Vec<u64>,
    pub d: Vec<u64>,
    #[serde(skip)]
    pub avk: Option<AvoidanceTable>,
    pub n_counts: Vec<u64>,
    pub k_counts: Vec<u64>,
    /// The node budget ran out; table entries are lower bounds.
    pub truncated: bool,
}

/// How far the `n_l` table is enumerated.
pub const SMALL_COUNT_LEN: usize = 15;

pub fn census(caps: CensusCaps, node_limit: Option<u64>) -> WalkCensus {
    let half_len = caps.a.max(caps.b);
    let half = enumerate(Region::HalfPlane, half_len, 0, node_limit);
    let plane = enumerate(Region::Plane, caps.c.max(caps.d), caps.d, node_limit);
    let d = (0..=caps.d).map(|l| plane.avoidance.max_at(l)).collect();
    let (n_counts, k_counts) = small_counts();
    WalkCensus {
        caps,
        a: half.on_axis[..=caps.a].to_vec(),
        b: half.total[..=caps.b].to_vec(),
        c: plane.total[..=caps.c].to_vec(),
        d,
        avk: Some(plane.avoidance),
        n_counts,
        k_counts,
        truncated: half.truncated || plane.truncated,
    }
}

const REFERENCE_A: [u64; 23] = [
    1, 2, 2, 4, 8, 20, 40, 100, 216, 548, 1224, 3112, 7148, 18228, 42696, 109148, 259520, 664868, 1599448, 4105276,
    9969396, 25630164, 62724196,
];
const REFERENCE_B: [u64; 22] = [
    1, 3, 7, 19, 49, 131, 339, 899, 2345, 6199, 16225, 42811, 112285, 296051, 777411, 2049025, 5384855, 14190509,
    37313977, 98324565, 258654441, 681552747,
];
const REFERENCE_C: [u64; 22] = [
    1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932, 881500, 2374444, 6416596, 17245332,
    46466676, 124658732, 335116620, 897697164, 2408806028,
];
const REFERENCE_D: [u64; 21] = [
    1, 2, 4, 8, 18, 40, 90, 218, 516, 1250, 3090, 7750, 19506, 49184, 124280, 314822, 802458, 2054136, 5262230,
    13494874, 34647816,
];

impl WalkCensus {
    /// The full-depth tables as produced by `census(CensusCaps::FULL, None)`,
    /// for callers that need them without a multi-minute enumeration.
    pub fn reference() -> WalkCensus {
        let (n_counts, k_counts) = small_counts();
        WalkCensus {
            caps: CensusCaps::FULL,
            a: REFERENCE_A.to_vec(),
            b: REFERENCE_B.to_vec(),
            c: REFERENCE_C.to_vec(),
            d: REFERENCE_D.to_vec(),
            avk: None,
            n_counts,
            k_counts,
            truncated: false,
        }
    }

    pub fn a(&self, l: usize) -> Option<u64> {
        self.a.get(l).copied()
    }

    pub fn b(&self, l: usize) -> Option<u64> {
        self.b.get(l).copied()
    }

    pub fn c(&self, l: usize) -> Option<u64> {
        self.c.get(l).copied()
    }

    pub fn d(&self, l: usize) -> Option<u64> {
        self.d.get(l).copied()
    }

    /// `l,a,b,c,d` rows, with blank cells past each table's cap.
    pub fn to_csv(&self) -> String {
        let rows = self.a.len().max(self.b.len()).max(self.c.len()).max(self.d.len());
        let cell = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("l,a,b,c,d\n");
        for l in 0..rows {
            out += &format!("{l},{},{},{},{}\n", cell(self.a(l)), cell(self.b(l)), cell(self.c(l)), cell(self.d(l)));
        }
        out
    }
}

/// `(n_l for l ≤ 15, k_i for i ≤ 4)`; both start at index 0.
///
/// `n_l` counts walks from the origin that stay in `y ≤ 0`, avoid `(0,−1)`,
/// and finish with a step up into `y = 1`. `k_i` counts walks of length 3
/// from `(0,−i)` inside `y ≤ 0` that end on `y = 0`.
pub fn small_counts() -> (Vec<u64>, Vec<u64>) {
    (escape_counts(SMALL_COUNT_LEN), (0..=4).map(|i| return_counts(i, 3)).collect())
}

fn escape_counts(max_len: usize) -> Vec<u64> {
    fn walk(path: &mut Vec<(i32, i32)>, max_len: usize, out: &mut [u64]) {
        let len = path.len() - 1;
        if len == max_len {
            return;
        }
        let (x, y) = *path.last().expect("nonempty");
        if y == 0 {
            out[len + 1] += 1;
        }
        for dir in Neighbor::ALL {
            let (dx, dy) = dir.offset();
            let next = (x + dx, y + dy);
            if next.1 > 0 || next == (0, -1) || path.contains(&next) {
                continue;
            }
            path.push(next);
            walk(path, max_len, out);
            path.pop();
        }
    }
    let mut out = vec![0; max_len + 1];
    walk(&mut vec![(0, 0)], max_len, &mut out);
    out
}

fn return_counts(depth: i32, len: usize) -> u64 {
    fn walk(path: &mut Vec<(i32, i32)>, left: usize) -> u64 {
        let (x, y) = *path.last().expect("nonempty");
        if left == 0 {
            return u64::from(y == 0);
        }
        let mut total = 0;
        for dir in Neighbor::ALL {
            let (dx, dy) = dir.offset();
            let next = (x + dx, y + dy);
            if next.1 > 0 || path.contains(&next) {
                continue;
            }
            path.push(next);
            total += walk(path, left - 1);
            path.pop();
        }
        total
    }
    walk(&mut vec![(0, -depth)], len)
}

/// `64·3^{l−7}`, the count bound used for `l ≥ 7`.
pub fn escape_bound(l: usize) -> u64 {
    assert!(l >= 7);
    64 * 3u64.pow((l - 7) as u32)
}

/// Estimate `a′_l` for `23 ≤ l ≤ 41`, built from even-length `b` and `d₁₉`/`d₂₀`.
pub fn a_prime(l: usize, census: &WalkCensus) -> Option<u128> {
    if !(23..=41).contains(&l) {
        return None;
    }
    let (q, r) = (l / 4, l % 4);
    let b = |i: usize| census.b(i).map(u128::from);
    let d = |i: usize| census.d(i).map(u128::from);
    let (lo, hi) = (2 * q.checked_sub(5)?, 2 * q.checked_sub(4)?);
    match r {
        0 => Some(b(lo)? * b(lo)? * d(20)?),
        1 => Some(b(lo)? * b(hi)? * d(19)?),
        2 => Some(b(lo)? * b(hi)? * d(20)?),
        _ => Some(b(hi)? * b(hi)? * d(19)?),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APrimeRow {
    pub l: usize,
    pub a_prime: u128,
    /// Exact `a_l` when the census reaches this far.
    pub a: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionReport {
    /// Splits `(l₁, l₂, l₃)` of `a_{l₁+l₂+l₃} ≤ b_{l₁} d_{l₂} b_{l₃}` checked.
    pub three_way_checked: usize,
    pub three_way_violations: Vec<(usize, usize, usize)>,
    /// Splits `(l₁, l₂)` of `d_{l₁+l₂} ≤ ¾ c_{l₁} d_{l₂}` checked.
    pub two_way_checked: usize,
    pub two_way_violations: Vec<(usize, usize)>,
    pub a_prime: Vec<APrimeRow>,
    /// Largest `b_{n+1}/b_n` for `2 ≤ n < len(b)`.
    pub max_growth_ratio: f64,
    pub growth_ok: bool,
    /// `¾ c₂₁ ≤ 2.76²¹`, if `c₂₁` is available.
    pub c21_ok: Option<bool>,
}

impl RecursionReport {
    pub fn passed(&self) -> bool {
        self.three_way_violations.is_empty()
            && self.two_way_violations.is_empty()
            && self.a_prime.iter().all(|r| r.a.is_none_or(|a| u128::from(a) <= r.a_prime))
            && self.growth_ok
            && self.c21_ok != Some(false)
    }
}

/// Checks the splitting inequalities over every index split the tables cover.
pub fn verify_recursions(census: &WalkCensus) -> RecursionReport {
    let (max_a, max_b, max_c, max_d) = (census.a.len() - 1, census.b.len() - 1, census.c.len() - 1, census.d.len() - 1);
    let mut three_way_checked = 0;
    let mut three_way_violations = Vec::new();
    for total in 1..=max_a {
        for l1 in 1..=total.min(max_b) {
            for l2 in 0..=(total - l1).min(max_d) {
                let l3 = total - l1 - l2;
                if l3 > max_b {
                    continue;
                }
                three_way_checked += 1;
                let rhs = u128::from(census.b[l1]) * u128::from(census.d[l2]) * u128::from(census.b[l3]);
                if u128::from(census.a[total]) > rhs {
                    three_way_violations.push((l1, l2, l3));
                }
            }
        }
    }
    let mut two_way_checked = 0;
    let mut two_way_violations = Vec::new();
    for total in 1..=max_d {
        for l1 in 1..=total.min(max_c) {
            let l2 = total - l1;
            two_way_checked += 1;
            // d ≤ ¾ c d  ⇔  4d ≤ 3 c d
            if 4 * u128::from(census.d[total]) > 3 * u128::from(census.c[l1]) * u128::from(census.d[l2]) {
                two_way_violations.push((l1, l2));
            }
        }
    }
    let a_prime =
        (23..=41).filter_map(|l| a_prime(l, census).map(|a_prime| APrimeRow { l, a_prime, a: census.a(l) })).collect();
    let max_growth_ratio = (2..max_b).map(|n| census.b[n + 1] as f64 / census.b[n] as f64).fold(0.0, f64::max);
    let c21_ok = census.c(21).map(|c| 0.75 * c as f64 <= GROWTH.powi(21));
    RecursionReport {
        three_way_checked,
        three_way_violations,
        two_way_checked,
        two_way_violations,
        a_prime,
        max_growth_ratio,
        growth_ok: max_growth_ratio <= GROWTH,
        c21_ok,
    }
}

/// Closed forms for the probability that some path of length `l` off the
/// axis is the smallest open connection of its endpoints, `l ∈ {3, 4, 5}`.
pub fn p_prime(l: usize, p: f64) -> Option<f64> {
    let q = 1.0 - p;
    let two_of_three = q.powi(3) + 3.0 * p * q * q;
    match l {
        3 => Some(2.0 * p.powi(3) * q),
        4 => Some(4.0 * p.powi(4) * q + 2.0 * p.powi(4) * two_of_three),
        5 => Some(
            6.0 * p.powi(5) * q * q
                + 6.0 * p.powi(5) * q
                + 4.0 * p.powi(5) * two_of_three
                + 2.0 * p.powi(5) * (q.powi(5) + 5.0 * p * q.powi(4) + 8.0 * p * p * q.powi(3)),
        ),
        _ => None,
    }
}

type Point = (i32, i32);
type Edge = (Point, Point);

fn edge(u: Point, v: Point) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Unit squares (by lower-left corner) enclosed by `path` closed up along
/// `y = 0`.
fn enclosed_squares(path: &[Point]) -> Vec<Point> {
    let xs = path.iter().map(|p| p.0);
    let (x_min, x_max) = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0));
    let y_max = path.iter().map(|p| p.1).max().unwrap_or(0);
    let verticals: Vec<(i32, i32, i32)> = path
        .windows(2)
        .filter(|w| w[0].0 == w[1].0)
        .map(|w| (w[0].0, w[0].1.min(w[1].1), if w[1].1 > w[0].1 { 1 } else { -1 }))
        .collect();
    let mut out = Vec::new();
    for sy in 0..y_max {
        for sx in x_min..x_max {
            let winding: i32 = verticals.iter().filter(|&&(x, y, _)| x > sx && y == sy).map(|&(_, _, s)| s).sum();
            if winding != 0 {
                out.push((sx, sy));
            }
        }
    }
    out
}

/// Number of squares between `path` and the axis segment joining its ends.
pub fn path_size(path: &[Point]) -> usize {
    enclosed_squares(path).len()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub l: usize,
    pub p: f64,
    pub value: f64,
    pub paths: usize,
    /// Configurations with two distinct smallest open paths.
    pub ties: u64,
}

/// Sums, over half-plane paths of length `l` that end on the axis without
/// staying on it, the probability that the path is open and strictly the
/// smallest open connection of its endpoints. Each path's probability is
/// found by trying every state of the edges inside the region it encloses.
pub fn p_prime_oracle(l: usize, p: f64) -> Result<OracleReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p, "[0, 1]"));
    }
    if l > ORACLE_MAX_LEN {
        return Err(Error::Budget(format!("oracle length {l} exceeds {ORACLE_MAX_LEN}")));
    }
    let paths = axis_paths(l);
    let mut value = 0.0;
    let mut ties = 0;
    for path in &paths {
        let (prob, path_ties) = smallest_path_probability(path, p)?;
        value += prob;
        ties += path_ties;
    }
    Ok(OracleReport { l, p, value, paths: paths.len(), ties })
}

fn axis_paths(l: usize) -> Vec<Vec<Point>> {
    fn walk(path: &mut Vec<Point>, l: usize, out: &mut Vec<Vec<Point>>) {
        let &(x, y) = path.last().expect("nonempty");
        if path.len() - 1 == l {
            if y == 0 && path.iter().any(|q| q.1 > 0) {
                out.push(path.clone());
            }
            return;
        }
        for dir in Neighbor::ALL {
            let (dx, dy) = dir.offset();
            let next = (x + dx, y + dy);
            if next.1 < 0 || path.contains(&next) {
                continue;
            }
            path.push(next);
            walk(path, l, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(&mut vec![(0, 0)], l, &mut out);
    out
}

fn smallest_path_probability(path: &[Point], p: f64) -> Result<(f64, u64)> {
    let start = path[0];
    let end = *path.last().expect("nonempty");
    let own: BTreeSet<Edge> = path.windows(2).map(|w| edge(w[0], w[1])).collect();
    let mut region: BTreeSet<Edge> = own.clone();
    for (x, y) in enclosed_squares(path) {
        region.insert(edge((x, y), (x + 1, y)));
        region.insert(edge((x, y + 1), (x + 1, y + 1)));
        region.insert(edge((x, y), (x, y + 1)));
        region.insert(edge((x + 1, y), (x + 1, y + 1)));
    }
    for x in start.0.min(end.0)..start.0.max(end.0) {
        region.insert(edge((x, 0), (x + 1, 0)));
    }
    let free: Vec<Edge> = region.difference(&own).copied().collect();
    if free.len() > ORACLE_MAX_FREE_EDGES {
        return Err(Error::Budget(format!("{} free edges under a path", free.len())));
    }
    let mut prob = 0.0;
    let mut ties = 0;
    for assignment in 0u32..1 << free.len() {
        let mut adjacency: HashMap<Point, Vec<Point>> = HashMap::new();
        let open = own.iter().chain(free.iter().enumerate().filter(|(i, _)| assignment >> i & 1 == 1).map(|(_, e)| e));
        for &(u, v) in open {
            adjacency.entry(u).or_default().push(v);
            adjacency.entry(v).or_default().push(u);
        }
        let mut best: Option<(usize, Vec<Point>)> = None;
        let mut tied = false;
        for candidate in open_paths(&adjacency, start, end) {
            let size = path_size(&candidate);
            match &best {
                Some((s, _)) if size > *s => {}
                Some((s, _)) if size == *s => tied = true,
                _ => {
                    best = Some((size, candidate));
                    tied = false;
                }
            }
        }
        if tied {
            ties += 1;
            continue;
        }
        if best.is_some_and(|(_, b)| b == path) {
            let opened = assignment.count_ones() as i32;
            prob += p.powi(path.len() as i32 - 1 + opened) * (1.0 - p).powi(free.len() as i32 - opened);
        }
    }
    Ok((prob, ties))
}

fn open_paths(adjacency: &HashMap<Point, Vec<Point>>, start: Point, end: Point) -> Vec<Vec<Point>> {
    fn walk(adj: &HashMap<Point, Vec<Point>>, path: &mut Vec<Point>, end: Point, out: &mut Vec<Vec<Point>>) {
        let here = *path.last().expect("nonempty");
        if here == end {
            out.push(path.clone());
            return;
        }
        for &next in adj.get(&here).into_iter().flatten() {
            if !path.contains(&next) {
                path.push(next);
                walk(adj, path, end, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(adjacency, &mut vec![start], end, &mut out);
    out
}

/// Pieces of the upper bound on the expected number of axis vertices joined
/// to the origin inside the half-plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct W0Bound {
    pub p: f64,
    /// `1 + Σ_{l≥1} 2p^l`: the origin and the two straight axis paths.
    pub axis: f64,
    /// `Σ_{3≤l≤5} p′_l`.
    pub short: f64,
    /// `Σ_{6≤l≤22} (a_l − 2) p^l (1−p²)²`.
    pub counted: f64,
    /// `Σ_{23≤l≤41} a′_l p^l (1−p²)²`.
    pub estimated: f64,
    /// `Σ_{l≥42} b₁₀ b₁₂ d₂₀ 2.76^{l−42} p^l (1−p²)²`.
    pub tail: f64,
    pub total: f64,
}

pub fn w0_bound(p: f64, census: &WalkCensus) -> Result<f64> {
    w0_bound_terms(p, census).map(|b| b.total)
}

pub fn w0_bound_terms(p: f64, census: &WalkCensus) -> Result<W0Bound> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p, "(0, 1)"));
    }
    if p >= 1.0 / GROWTH {
        return Err(Error::Divergent(format!("tail diverges for p = {p} ≥ 1/{GROWTH}")));
    }
    let short_of = |what: &str| Error::Structure(format!("census does not reach {what}"));
    let factor = (1.0 - p * p).powi(2);
    let axis = 1.0 + 2.0 * p / (1.0 - p);
    let short: f64 = (3..=5).filter_map(|l| p_prime(l, p)).sum();
    let mut counted = 0.0;
    for l in 6..=22 {
        let a = census.a(l).ok_or_else(|| short_of("a₂₂"))?;
        counted += (a - 2) as f64 * p.powi(l as i32) * factor;
    }
    let mut estimated = 0.0;
    for l in 23..=41 {
        let a = a_prime(l, census).ok_or_else(|| short_of("b₁₂ and d₂₀"))?;
        estimated += a as f64 * p.powi(l as i32) * factor;
    }
    let lead = census.b(10).zip(census.b(12)).zip(census.d(20)).ok_or_else(|| short_of("d₂₀"))?;
    let lead = lead.0 .0 as f64 * lead.0 .1 as f64 * lead.1 as f64;
    let tail = lead * p.powi(42) * factor / (1.0 - GROWTH * p);
    Ok(W0Bound { p, axis, short, counted, estimated, tail, total: axis + short + counted + estimated + tail })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub p: f64,
    /// Measured `n₁..n₆`.
    pub measured: Vec<u64>,
    pub expected: Vec<u64>,
    pub coefficients_match: bool,
    /// `Σ_{l≤6} n_l p^l + 64 p⁷/(1−3p)`.
    pub series: f64,
    pub c2: f64,
    /// `n_l ≤ 64·3^{l−7}` for `7 ≤ l ≤ 15`.
    pub tail_counts_bounded: bool,
}

impl SeriesCheck {
    pub fn passed(&self) -> bool {
        self.coefficients_match && self.tail_counts_bounded && (self.series - self.c2).abs() <= 1e-12
    }
}

/// Rebuilds the series for `c₂(p)` from measured path counts.
pub fn c2_consistency(p: f64) -> Result<SeriesCheck> {
    if !(p > 0.0 && p < 1.0 / 3.0) {
        return Err(Error::ProbabilityOutOfRange(p, "(0, 1/3)"));
    }
    let (n, _) = small_counts();
    let measured = n[1..=6].to_vec();
    let expected = vec![1, 2, 2, 2, 4, 8];
    let series =
        measured.iter().zip(1..).map(|(&c, l)| c as f64 * p.powi(l)).sum::<f64>() + 64.0 * p.powi(7) / (1.0 - 3.0 * p);
    Ok(SeriesCheck {
        p,
        coefficients_match: measured == expected,
        measured,
        expected,
        series,
        c2: crate::bounds::c2(p),
        tail_counts_bounded: (7..=SMALL_COUNT_LEN).all(|l| n[l] <= escape_bound(l)),
    })
}
