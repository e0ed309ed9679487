//! One-layer transition kernel of the pattern chain.
//!
//! Every configuration of the edges between layer `n-1` and layer `n` is
//! enumerated once per source pattern; the kernel stores, for each target,
//! how many configurations with `j` open edges lead there. Evaluating at a
//! given `p` is then a polynomial sum, in floating point or exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, ExactMatrix};
use crate::pattern::{Graph, Pattern, PatternSpace, MAX_K};

/// Open/closed state of the edges of one layer.
///
/// Bits `0..k` are the vertical edges `{(i,0),(i,1)}`; bit `k + e` is the
/// copy of graph edge `e` in the upper layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LayerConfig(u64);

impl LayerConfig {
    pub fn new(mask: u64) -> LayerConfig {
        LayerConfig(mask)
    }

    /// Builds a configuration from open vertical positions and open horizontal
    /// edges given by their endpoints.
    pub fn from_open(graph: &Graph, vertical: &[usize], horizontal: &[(usize, usize)]) -> Result<LayerConfig> {
        let k = graph.k();
        let mut mask = 0u64;
        for &v in vertical {
            if v >= k {
                return Err(Error::InvalidPartition(format!("vertical edge {v} out of range")));
            }
            mask |= 1 << v;
        }
        for &(a, b) in horizontal {
            let e = graph
                .edges()
                .iter()
                .position(|&(u, w)| (u, w) == (a, b) || (u, w) == (b, a))
                .ok_or_else(|| Error::InvalidPartition(format!("no edge {{{a},{b}}} in graph")))?;
            mask |= 1 << (k + e);
        }
        Ok(LayerConfig(mask))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn open_edges(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_open(self, bit: usize) -> bool {
        self.0 >> bit & 1 == 1
    }
}

/// Tiny union-find over at most `2 * MAX_K + 1` nodes.
#[derive(Clone)]
struct UnionFind {
    parent: [u8; 2 * MAX_K + 2],
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        let mut parent = [0u8; 2 * MAX_K + 2];
        for (i, p) in parent.iter_mut().enumerate().take(n) {
            *p = i as u8;
        }
        UnionFind { parent }
    }

    fn find(&mut self, mut x: u8) -> u8 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u8, b: u8) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}

/// Precomputed per-source data for repeated successor evaluation.
struct Stepper<'g> {
    graph: &'g Graph,
    /// Node of the lower block each vertex hangs from.
    block_node: Vec<u8>,
    star_node: u8,
    nodes: usize,
}

impl<'g> Stepper<'g> {
    // Nodes: upper vertices 0..k, then one node per block of the source.
    fn new(graph: &'g Graph, y: &Pattern) -> Stepper<'g> {
        let k = graph.k();
        let block_node = y.labels()[..k].iter().map(|&l| (k + l as usize) as u8).collect();
        Stepper { graph, block_node, star_node: (k + y.star_label() as usize) as u8, nodes: k + y.block_count() }
    }

    fn step_labels(&self, config: LayerConfig, out: &mut [u8]) {
        let k = self.graph.k();
        let mut uf = UnionFind::new(self.nodes);
        for v in 0..k {
            if config.is_open(v) {
                uf.union(v as u8, self.block_node[v]);
            }
        }
        for (e, &(a, b)) in self.graph.edges().iter().enumerate() {
            if config.is_open(k + e) {
                uf.union(a as u8, b as u8);
            }
        }
        for (v, o) in out.iter_mut().enumerate().take(k) {
            *o = uf.find(v as u8);
        }
        out[k] = uf.find(self.star_node);
    }

    fn step_key(&self, config: LayerConfig) -> u64 {
        let mut roots = [0u8; MAX_K + 1];
        let k = self.graph.k();
        self.step_labels(config, &mut roots[..=k]);
        canonical_key(&roots[..=k])
    }
}

fn canonical_key(raw: &[u8]) -> u64 {
    let mut map = [u8::MAX; 2 * MAX_K + 2];
    let mut next = 0u8;
    let mut key = 0u64;
    for &r in raw {
        let slot = &mut map[r as usize];
        if *slot == u8::MAX {
            *slot = next;
            next += 1;
        }
        key = (key << 4) | u64::from(*slot);
    }
    key
}

/// Pattern of layer `n` given pattern `y` of layer `n-1` and the open edges.
pub fn successor(graph: &Graph, y: &Pattern, config: LayerConfig) -> Result<Pattern> {
    if y.k() != graph.k() {
        return Err(Error::InvalidPartition(format!("pattern has {} vertices, graph has {}", y.k(), graph.k())));
    }
    let stepper = Stepper::new(graph, y);
    let mut raw = vec![0u8; graph.k() + 1];
    stepper.step_labels(config, &mut raw);
    Ok(Pattern::from_labels(&raw))
}

/// Counts for one `(y, x)` pair: `counts[j]` configurations with `j` open edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelEntry {
    pub target: usize,
    pub counts: Vec<u64>,
}

/// Integer transition counts, one row per built source pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionKernel {
    k: usize,
    edges: usize,
    rows: Vec<Option<Vec<KernelEntry>>>,
}

impl TransitionKernel {
    /// Rows for every pattern of the space.
    pub fn build(space: &PatternSpace) -> Result<TransitionKernel> {
        let all: Vec<usize> = (0..space.len()).collect();
        let mut kernel = TransitionKernel::empty(space);
        kernel.add_rows(space, &all)?;
        Ok(kernel)
    }

    /// Rows for the closure of `seeds` under positive transitions.
    pub fn build_closure(space: &PatternSpace, seeds: &[usize]) -> Result<TransitionKernel> {
        let mut kernel = TransitionKernel::empty(space);
        kernel.extend_closure(space, seeds)?;
        Ok(kernel)
    }

    pub fn empty(space: &PatternSpace) -> TransitionKernel {
        TransitionKernel { k: space.k(), edges: space.graph().layer_edges(), rows: vec![None; space.len()] }
    }

    /// Builds any missing rows reachable from `seeds`, one BFS level at a time.
    pub fn extend_closure(&mut self, space: &PatternSpace, seeds: &[usize]) -> Result<()> {
        let mut frontier: Vec<usize> = seeds.to_vec();
        frontier.sort_unstable();
        frontier.dedup();
        let mut queued = vec![false; self.rows.len()];
        for &s in &frontier {
            queued[s] = true;
        }
        while !frontier.is_empty() {
            let todo: Vec<usize> = frontier.iter().copied().filter(|&i| self.rows[i].is_none()).collect();
            self.add_rows(space, &todo)?;
            let mut next = Vec::new();
            for &y in &frontier {
                for e in self.rows[y].as_ref().unwrap() {
                    if !queued[e.target] {
                        queued[e.target] = true;
                        next.push(e.target);
                    }
                }
            }
            next.sort_unstable();
            frontier = next;
        }
        Ok(())
    }

    /// Builds the rows for `sources` (rows already present are rebuilt).
    pub fn add_rows(&mut self, space: &PatternSpace, sources: &[usize]) -> Result<()> {
        if space.k() != self.k || space.len() != self.rows.len() {
            return Err(Error::Structure("kernel and pattern space disagree".into()));
        }
        if self.edges > 30 {
            return Err(Error::Capacity { k: self.k, cap: 15, states: space.len() as u64 });
        }
        let graph = space.graph();
        let edges = self.edges;
        let built: Vec<(usize, Vec<KernelEntry>)> =
            sources.par_iter().map(|&y| (y, build_row(graph, space, space.pattern(y), edges))).collect();
        for (y, row) in built {
            self.rows[y] = Some(row);
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Edges per layer (`2k` on a cycle).
    pub fn edges(&self) -> usize {
        self.edges
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, y: usize) -> Option<&[KernelEntry]> {
        self.rows[y].as_deref()
    }

    pub fn built_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows.len()).filter(|&i| self.rows[i].is_some())
    }

    /// Count vector for `(y, x)`; all zeros if unreachable.
    pub fn counts(&self, y: usize, x: usize) -> Option<Vec<u64>> {
        let row = self.row(y)?;
        Some(row.iter().find(|e| e.target == x).map_or_else(|| vec![0; self.edges + 1], |e| e.counts.clone()))
    }

    fn weights(&self, p: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p, "[0, 1]"));
        }
        let m = self.edges as i32;
        Ok((0..=m).map(|j| p.powi(j) * (1.0 - p).powi(m - j)).collect())
    }

    /// `π_p(y, x)` for a single pair.
    pub fn probability(&self, y: usize, x: usize, p: f64) -> Result<f64> {
        let w = self.weights(p)?;
        let counts = self.counts(y, x).ok_or_else(|| Error::Structure(format!("kernel row {y} was not built")))?;
        Ok(counts.iter().zip(&w).map(|(&c, &w)| c as f64 * w).sum())
    }

    /// Sparse stochastic matrix at `p` over the built rows.
    pub fn evaluate(&self, p: f64) -> Result<KernelMatrix> {
        let w = self.weights(p)?;
        let rows = self
            .rows
            .iter()
            .map(|r| {
                r.as_ref().map(|entries| {
                    entries
                        .iter()
                        .map(|e| (e.target, e.counts.iter().zip(&w).map(|(&c, &w)| c as f64 * w).sum()))
                        .filter(|&(_, v): &(usize, f64)| v > 0.0)
                        .collect()
                })
            })
            .collect();
        Ok(KernelMatrix { rows })
    }

    /// Exact evaluation at a rational `p`.
    pub fn evaluate_exact(&self, p: &BigRational) -> Result<ExactKernelMatrix> {
        if p < &BigRational::zero() || p > &BigRational::one() {
            use num_traits::ToPrimitive;
            return Err(Error::ProbabilityOutOfRange(p.to_f64().unwrap_or(f64::NAN), "[0, 1]"));
        }
        let q = BigRational::one() - p;
        let m = self.edges;
        let w: Vec<BigRational> =
            (0..=m).map(|j| num_traits::pow(p.clone(), j) * num_traits::pow(q.clone(), m - j)).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                r.as_ref().map(|entries| {
                    entries
                        .iter()
                        .filter_map(|e| {
                            let mut v = BigRational::zero();
                            for (&c, w) in e.counts.iter().zip(&w) {
                                if c != 0 {
                                    v += w * BigRational::from_integer(BigInt::from(c));
                                }
                            }
                            (!v.is_zero()).then_some((e.target, v))
                        })
                        .collect()
                })
            })
            .collect();
        Ok(ExactKernelMatrix { rows })
    }

    /// CSV dump: `y_index,x_index,j,count`, nonzero counts only, ascending.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y_index,x_index,j,count\n");
        for (y, row) in self.rows.iter().enumerate() {
            let Some(row) = row else { continue };
            let mut sorted: Vec<&KernelEntry> = row.iter().collect();
            sorted.sort_by_key(|e| e.target);
            for e in sorted {
                for (j, &c) in e.counts.iter().enumerate() {
                    if c != 0 {
                        writeln!(out, "{y},{},{j},{c}", e.target).unwrap();
                    }
                }
            }
        }
        out
    }

    /// Parses a CSV dump against `space` and checks that every row present
    /// is a complete count table.
    pub fn from_csv(text: &str, space: &PatternSpace) -> Result<TransitionKernel> {
        let records = parse_kernel_csv(text)?;
        let mut kernel = TransitionKernel::empty(space);
        let m = kernel.edges;
        let mut rows: HashMap<usize, HashMap<usize, Vec<u64>>> = HashMap::new();
        for r in records {
            if r.y >= space.len() || r.x >= space.len() {
                return Err(Error::Structure(format!("state index out of range in row {r:?}")));
            }
            if r.j > m {
                return Err(Error::Structure(format!("open-edge count {} exceeds {m}", r.j)));
            }
            let slot = &mut rows.entry(r.y).or_default().entry(r.x).or_insert_with(|| vec![0; m + 1])[r.j];
            if *slot != 0 {
                return Err(Error::Structure(format!("duplicate entry {r:?}")));
            }
            *slot = r.count;
        }
        for (y, targets) in rows {
            let mut entries: Vec<KernelEntry> =
                targets.into_iter().map(|(target, counts)| KernelEntry { target, counts }).collect();
            entries.sort_by_key(|e| e.target);
            for j in 0..=m {
                let total: u128 = entries.iter().map(|e| u128::from(e.counts[j])).sum();
                if total != binomial(m, j) {
                    return Err(Error::Structure(format!(
                        "row {y}: {total} configurations with {j} open edges, expected {}",
                        binomial(m, j)
                    )));
                }
            }
            kernel.rows[y] = Some(entries);
        }
        Ok(kernel)
    }

    /// JSON dump keyed by pattern strings.
    pub fn to_json(&self, space: &PatternSpace) -> Value {
        let entries: Vec<Value> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(y, r)| r.as_ref().map(|r| (y, r)))
            .flat_map(|(y, row)| {
                let mut sorted: Vec<&KernelEntry> = row.iter().collect();
                sorted.sort_by_key(|e| e.target);
                sorted.into_iter().map(move |e| {
                    json!({
                        "y": space.pattern(y).to_string(),
                        "x": space.pattern(e.target).to_string(),
                        "counts": e.counts,
                    })
                })
            })
            .collect();
        json!({ "k": self.k, "edges": self.edges, "entries": entries })
    }
}

fn build_row(graph: &Graph, space: &PatternSpace, y: &Pattern, edges: usize) -> Vec<KernelEntry> {
    let stepper = Stepper::new(graph, y);
    let mut by_key: HashMap<u64, Vec<u64>> = HashMap::new();
    for mask in 0..1u64 << edges {
        let key = stepper.step_key(LayerConfig(mask));
        by_key.entry(key).or_insert_with(|| vec![0; edges + 1])[mask.count_ones() as usize] += 1;
    }
    let mut row: Vec<KernelEntry> =
        by_key.into_iter().map(|(key, counts)| KernelEntry { target: space.index_of_key(key), counts }).collect();
    row.sort_by_key(|e| e.target);
    row
}

/// `C(n, k)` as a `u128`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// One record of a kernel CSV dump.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelCsvRecord {
    pub y: usize,
    pub x: usize,
    pub j: usize,
    pub count: u64,
}

/// Parses the CSV dump format without interpreting indices.
pub fn parse_kernel_csv(text: &str) -> Result<Vec<KernelCsvRecord>> {
    let mut lines = text.lines().enumerate();
    let header_ok = matches!(lines.next(), Some((_, h)) if h.trim() == "y_index,x_index,j,count");
    if !header_ok {
        return Err(Error::Parse { pos: 0, msg: "missing header y_index,x_index,j,count".into() });
    }
    let mut out = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse { pos: ln, msg: format!("expected 4 fields, got {}", fields.len()) });
        }
        let num = |s: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|e| Error::Parse { pos: ln, msg: format!("bad number {s:?}: {e}") })
        };
        out.push(KernelCsvRecord {
            y: num(fields[0])? as usize,
            x: num(fields[1])? as usize,
            j: num(fields[2])? as usize,
            count: num(fields[3])?,
        });
    }
    Ok(out)
}

/// Sparse transition probabilities at a fixed `p`.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    rows: Vec<Option<Vec<(usize, f64)>>>,
}

impl KernelMatrix {
    pub fn row(&self, y: usize) -> Option<&[(usize, f64)]> {
        self.rows[y].as_deref()
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.row(y).and_then(|r| r.iter().find(|e| e.0 == x)).map_or(0.0, |e| e.1)
    }

    /// Dense restriction to `states` (rows and columns in the given order).
    pub fn restrict(&self, states: &[usize]) -> Result<DenseMatrix> {
        let pos: HashMap<usize, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut q = DenseMatrix::zeros(states.len());
        for (i, &y) in states.iter().enumerate() {
            let row = self.row(y).ok_or_else(|| Error::Structure(format!("kernel row {y} was not built")))?;
            for &(x, v) in row {
                if let Some(&j) = pos.get(&x) {
                    q[(i, j)] = v;
                }
            }
        }
        Ok(q)
    }
}

/// Exact transition probabilities at a rational `p`.
#[derive(Clone, Debug)]
pub struct ExactKernelMatrix {
    rows: Vec<Option<Vec<(usize, BigRational)>>>,
}

impl ExactKernelMatrix {
    pub fn row(&self, y: usize) -> Option<&[(usize, BigRational)]> {
        self.rows[y].as_deref()
    }

    pub fn restrict(&self, states: &[usize]) -> Result<ExactMatrix> {
        let pos: HashMap<usize, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut q = ExactMatrix::zeros(states.len());
        for (i, &y) in states.iter().enumerate() {
            let row = self.row(y).ok_or_else(|| Error::Structure(format!("kernel row {y} was not built")))?;
            for (x, v) in row {
                if let Some(&j) = pos.get(x) {
                    q[(i, j)] = v.clone();
                }
            }
        }
        Ok(q)
    }
}

/// Kernel rows for every uninfected pattern: the chain of layer connectivity
/// with the marker ignored.
pub fn connectivity_kernel(space: &PatternSpace) -> Result<TransitionKernel> {
    let mut kernel = TransitionKernel::empty(space);
    kernel.add_rows(space, space.dagger_indices())?;
    Ok(kernel)
}

/// Rational approximation of `p` with denominator `10^9`.
pub fn rational_from_f64(p: f64) -> BigRational {
    let num = (p * 1e9).round() as i64;
    BigRational::new(BigInt::from(num), BigInt::from(1_000_000_000i64))
}
