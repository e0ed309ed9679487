//! Frozen walk tables and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use percmono::pattern::Pattern;
use percmono::qsd::AbsorbingChain;
use percmono::saw::{CensusCaps, WalkCensus};

/// Walks in the upper half-plane from the origin back to the axis, by length.
pub const A: [u64; 23] = [
    1, 2, 2, 4, 8, 20, 40, 100, 216, 548, 1224, 3112, 7148, 18228, 42696, 109148, 259520, 664868, 1599448, 4105276,
    9969396, 25630164, 62724196,
];

/// Half-plane walks with the first horizontal step to the right.
pub const B: [u64; 22] = [
    1, 3, 7, 19, 49, 131, 339, 899, 2345, 6199, 16225, 42811, 112285, 296051, 777411, 2049025, 5384855, 14190509,
    37313977, 98324565, 258654441, 681552747,
];

/// Plane walks (OEIS A001411).
pub const C: [u64; 22] = [
    1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932, 881500, 2374444, 6416596, 17245332,
    46466676, 124658732, 335116620, 897697164, 2408806028,
];

/// Plane walks avoiding a pair of the origin's neighbours, maximized.
pub const D: [u64; 21] = [
    1, 2, 4, 8, 18, 40, 90, 218, 516, 1250, 3090, 7750, 19506, 49184, 124280, 314822, 802458, 2054136, 5262230,
    13494874, 34647816,
];

/// Minimal escape paths `n_l`, `l = 0..=15`.
pub const N_COUNTS: [u64; 16] = [0, 1, 2, 2, 2, 4, 8, 18, 38, 88, 208, 488, 1204, 2852, 7172, 17142];

pub const K_COUNTS: [u64; 5] = [4, 8, 6, 1, 0];

pub const A_PRIME_23: u128 = 661_248_826;

pub fn golden_census() -> WalkCensus {
    WalkCensus {
        caps: CensusCaps::FULL,
        a: A.to_vec(),
        b: B.to_vec(),
        c: C.to_vec(),
        d: D.to_vec(),
        avk: None,
        n_counts: N_COUNTS.to_vec(),
        k_counts: K_COUNTS.to_vec(),
        truncated: false,
    }
}

/// One layer step written from scratch: `labels[u]` is the block of bottom
/// vertex `u`, `star` the block holding the marker (if any vertex is in it).
pub fn brute_step(k: usize, labels: &[usize], star: Option<usize>, mask: u32) -> (Vec<usize>, Option<usize>) {
    let mut parent: Vec<usize> = (0..2 * k + 1).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            a = p[a];
        }
        a
    }
    let join = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        p[ra] = rb;
    };
    let marker = 2 * k;
    for u in 0..k {
        for w in 0..k {
            if labels[u] == labels[w] {
                join(&mut parent, u, w);
            }
        }
        if star == Some(labels[u]) {
            join(&mut parent, u, marker);
        }
    }
    for u in 0..k {
        if mask >> u & 1 == 1 {
            join(&mut parent, u, k + u);
        }
        if mask >> (k + u) & 1 == 1 {
            join(&mut parent, k + u, k + (u + 1) % k);
        }
    }
    let roots: Vec<usize> = (0..k).map(|u| find(&mut parent, k + u)).collect();
    let star_root = find(&mut parent, marker);
    let top_star = roots.iter().position(|&r| r == star_root).map(|u| roots[u]);
    (roots, top_star)
}

fn to_pattern(roots: &[usize], star: Option<usize>) -> Pattern {
    let mut labels: Vec<usize> = roots.to_vec();
    labels.push(star.unwrap_or(usize::MAX));
    Pattern::from_labels(&labels)
}

fn from_pattern(x: &Pattern) -> (Vec<usize>, Option<usize>) {
    let labels: Vec<usize> = x.labels().iter().map(|&l| l as usize).collect();
    let k = x.k();
    let star = x.is_infected().then_some(labels[k]);
    (labels[..k].to_vec(), star)
}

pub fn weight(p: f64, mask: u64, edges: u32) -> f64 {
    let open = mask.count_ones() as i32;
    p.powi(open) * (1.0 - p).powi(edges as i32 - open)
}

/// `P(𝒳ₙ^y = ·)` by enumerating every bond configuration of `n` layers.
pub fn brute_marginals(k: usize, y: &Pattern, n: usize, p: f64) -> Vec<(Pattern, f64)> {
    let per_layer = 2 * k as u32;
    let mut out: std::collections::HashMap<Pattern, f64> = Default::default();
    for mask in 0u64..1 << (per_layer as usize * n) {
        let (mut labels, mut star) = from_pattern(y);
        for layer in 0..n {
            let m = (mask >> (layer * per_layer as usize)) as u32 & ((1 << per_layer) - 1);
            (labels, star) = brute_step(k, &labels, star, m);
        }
        *out.entry(to_pattern(&labels, star)).or_default() += weight(p, mask, per_layer * n as u32);
    }
    out.into_iter().collect()
}

/// Dominant eigenvalue of `Q` and its normalized left eigenvector, from a
/// dense eigensolve and an SVD null vector.
pub fn dense_qsd(chain: &AbsorbingChain) -> (f64, Vec<f64>) {
    let q = chain.q();
    let n = q.dim();
    let dense = DMatrix::from_fn(n, n, |i, j| q[(i, j)]);
    let lambda = dense.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let shifted = dense.transpose() - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let (idx, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let v = svd.v_t.unwrap().row(idx).transpose();
    let total: f64 = v.iter().sum();
    (lambda, v.iter().map(|x| x / total).collect())
}
