//! Infection patterns: partitions of `V ∪ {*}` for a layer graph `G`.
//!
//! A pattern is stored as a restricted-growth string over the element order
//! `0, 1, …, k-1, *`, so two descriptions of the same partition always yield
//! identical values and the packed form doubles as a hash key.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;

/// Largest vertex count a [`Pattern`] can represent.
pub const MAX_K: usize = 15;

/// Default cap on `k` for state-space enumeration (Bell(11) = 678570 patterns).
pub const DEFAULT_CAP: usize = 10;

/// An element of `V ∪ {*}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Vertex(usize),
    Star,
}

/// A partition of `{0..k-1} ∪ {*}` in canonical restricted-growth form.
///
/// `labels[v]` is the block of vertex `v` for `v < k`, `labels[k]` the block
/// of the marker.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    labels: Vec<u8>,
}

impl Pattern {
    /// Canonicalizes an arbitrary labelling (`labels.len() == k + 1`, marker last).
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> Pattern {
        let mut map: HashMap<T, u8> = HashMap::with_capacity(labels.len());
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = map.len() as u8;
            out.push(*map.entry(l).or_insert(next));
        }
        Pattern { labels: out }
    }

    /// Builds the canonical pattern from explicit blocks over `{0..k-1} ∪ {*}`.
    pub fn canonicalize(k: usize, blocks: &[Vec<Element>]) -> Result<Pattern> {
        if k == 0 || k > MAX_K {
            return Err(Error::InvalidPartition(format!("vertex count {k} outside 1..={MAX_K}")));
        }
        let mut owner: Vec<Option<usize>> = vec![None; k + 1];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &e in block {
                let slot = match e {
                    Element::Vertex(v) if v < k => v,
                    Element::Vertex(v) => {
                        return Err(Error::InvalidPartition(format!("vertex {v} out of range for k = {k}")))
                    }
                    Element::Star => k,
                };
                if owner[slot].replace(b).is_some() {
                    return Err(Error::InvalidPartition(format!("element {} appears twice", element_str(e))));
                }
            }
        }
        let labels: Vec<usize> = owner
            .iter()
            .enumerate()
            .map(|(i, o)| {
                o.ok_or_else(|| {
                    let e = if i == k { Element::Star } else { Element::Vertex(i) };
                    Error::InvalidPartition(format!("element {} is missing", element_str(e)))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Pattern::from_labels(&labels))
    }

    /// `x_†`: the marker and every vertex in its own block.
    pub fn dagger(k: usize) -> Pattern {
        let labels: Vec<usize> = (0..=k).collect();
        Pattern::from_labels(&labels)
    }

    /// `x_*`: a single block holding everything.
    pub fn all_infected(k: usize) -> Pattern {
        Pattern { labels: vec![0; k + 1] }
    }

    pub fn k(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn star_label(&self) -> u8 {
        self.labels[self.k()]
    }

    /// True iff some vertex shares the marker's block (`x ∈ M*`).
    pub fn is_infected(&self) -> bool {
        let s = self.star_label();
        self.labels[..self.k()].contains(&s)
    }

    pub fn infected(&self, v: usize) -> bool {
        self.labels[v] == self.star_label()
    }

    pub fn infected_count(&self) -> usize {
        let s = self.star_label();
        self.labels[..self.k()].iter().filter(|&&l| l == s).count()
    }

    pub fn same_block(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }

    pub fn block_count(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m as usize + 1)
    }

    /// Packs the labels four bits apiece; unique among patterns of one `k`.
    pub fn key(&self) -> u64 {
        self.labels.iter().fold(0u64, |acc, &l| (acc << 4) | u64::from(l))
    }

    /// Blocks in display order: the marker first inside its block, blocks
    /// ordered by smallest vertex with a bare `{*}` leading.
    pub fn blocks(&self) -> Vec<Vec<Element>> {
        let k = self.k();
        let mut blocks: Vec<Vec<Element>> = vec![Vec::new(); self.block_count()];
        blocks[self.star_label() as usize].push(Element::Star);
        for v in 0..k {
            blocks[self.labels[v] as usize].push(Element::Vertex(v));
        }
        blocks.sort_by_key(|b| match b.iter().find_map(vertex_of) {
            Some(v) => v as isize,
            None => -1,
        });
        blocks
    }

    /// Vertices in the marker's block.
    pub fn infected_vertices(&self) -> Vec<usize> {
        (0..self.k()).filter(|&v| self.infected(v)).collect()
    }

    /// No `v1 < v2 < v3 < v4` with `v1 ∼ v3`, `v2 ∼ v4` and `v1 ≁ v2`; the
    /// marker is ignored.
    pub fn is_noncrossing(&self) -> bool {
        let l = &self.labels;
        let k = self.k();
        for v1 in 0..k {
            for v2 in v1 + 1..k {
                if l[v1] == l[v2] {
                    continue;
                }
                for v3 in v2 + 1..k {
                    if l[v3] != l[v1] {
                        continue;
                    }
                    if (v3 + 1..k).any(|v4| l[v4] == l[v2]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Relabels `v ↦ (v + r) mod k`.
    pub fn rotate(&self, r: isize) -> Pattern {
        let k = self.k();
        let shift = r.rem_euclid(k as isize) as usize;
        let mut raw = vec![0u8; k + 1];
        for v in 0..k {
            raw[(v + shift) % k] = self.labels[v];
        }
        raw[k] = self.star_label();
        Pattern::from_labels(&raw)
    }

    /// The same vertex partition with the marker isolated (an element of `M†`).
    pub fn without_infection(&self) -> Pattern {
        let k = self.k();
        let mut raw: Vec<usize> = self.labels.iter().map(|&l| l as usize).collect();
        raw[k] = usize::MAX;
        Pattern::from_labels(&raw)
    }

    /// The same vertex partition with the marker joined to the block of `v`.
    pub fn infect_block_of(&self, v: usize) -> Pattern {
        let k = self.k();
        let mut raw = self.labels.clone();
        raw[k] = raw[v];
        Pattern::from_labels(&raw)
    }

    /// Parses the brace text format, requiring exactly `k` vertices.
    pub fn parse_with_k(s: &str, k: usize) -> Result<Pattern> {
        let blocks = parse_blocks(s)?;
        Pattern::canonicalize(k, &blocks)
    }

    /// JSON form: an array of arrays of vertex numbers and the string `"*"`.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.blocks()
                .into_iter()
                .map(|b| {
                    Value::Array(
                        b.into_iter()
                            .map(|e| match e {
                                Element::Star => Value::String("*".into()),
                                Element::Vertex(v) => Value::from(v),
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn from_json(value: &Value) -> Result<Pattern> {
        let outer = value.as_array().ok_or_else(|| Error::InvalidPartition("expected an array of blocks".into()))?;
        let mut blocks = Vec::with_capacity(outer.len());
        for b in outer {
            let inner = b.as_array().ok_or_else(|| Error::InvalidPartition("block is not an array".into()))?;
            let mut block = Vec::with_capacity(inner.len());
            for e in inner {
                match e {
                    Value::String(s) if s == "*" => block.push(Element::Star),
                    Value::Number(n) => {
                        let v = n
                            .as_u64()
                            .filter(|&v| (v as usize) < MAX_K)
                            .ok_or_else(|| Error::InvalidPartition(format!("bad vertex {n}")))?;
                        block.push(Element::Vertex(v as usize));
                    }
                    other => return Err(Error::InvalidPartition(format!("bad element {other}"))),
                }
            }
            blocks.push(block);
        }
        let k = infer_k(&blocks)?;
        Pattern::canonicalize(k, &blocks)
    }

    pub fn from_json_str(s: &str) -> Result<Pattern> {
        let v: Value = serde_json::from_str(s)?;
        Pattern::from_json(&v)
    }
}

fn vertex_of(e: &Element) -> Option<usize> {
    match *e {
        Element::Vertex(v) => Some(v),
        Element::Star => None,
    }
}

fn element_str(e: Element) -> String {
    match e {
        Element::Vertex(v) => v.to_string(),
        Element::Star => "*".into(),
    }
}

fn infer_k(blocks: &[Vec<Element>]) -> Result<usize> {
    blocks
        .iter()
        .flatten()
        .filter_map(vertex_of)
        .max()
        .map(|m| m + 1)
        .ok_or_else(|| Error::InvalidPartition("pattern has no vertices".into()))
}

fn parse_blocks(s: &str) -> Result<Vec<Vec<Element>>> {
    let bytes = s.as_bytes();
    let mut pos = 0usize;
    let err = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.to_string() };
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    let expect = |pos: &mut usize, c: u8| -> Result<()> {
        skip_ws(pos);
        if *pos < bytes.len() && bytes[*pos] == c {
            *pos += 1;
            Ok(())
        } else {
            Err(err(*pos, &format!("expected '{}'", c as char)))
        }
    };

    expect(&mut pos, b'{')?;
    let mut blocks = Vec::new();
    loop {
        expect(&mut pos, b'{')?;
        let mut block = Vec::new();
        loop {
            skip_ws(&mut pos);
            match bytes.get(pos) {
                Some(b'*') => {
                    pos += 1;
                    block.push(Element::Star);
                }
                Some(c) if c.is_ascii_digit() => {
                    let start = pos;
                    let mut v = 0usize;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        v = v * 10 + usize::from(bytes[pos] - b'0');
                        if v >= MAX_K {
                            return Err(err(start, "vertex out of range"));
                        }
                        pos += 1;
                    }
                    block.push(Element::Vertex(v));
                }
                _ => return Err(err(pos, "expected vertex or '*'")),
            }
            skip_ws(&mut pos);
            match bytes.get(pos) {
                Some(b',') => pos += 1,
                Some(b'}') => {
                    pos += 1;
                    break;
                }
                _ => return Err(err(pos, "expected ',' or '}'")),
            }
        }
        blocks.push(block);
        skip_ws(&mut pos);
        match bytes.get(pos) {
            Some(b',') => pos += 1,
            Some(b'}') => {
                pos += 1;
                break;
            }
            _ => return Err(err(pos, "expected ',' or '}'")),
        }
    }
    skip_ws(&mut pos);
    if pos != bytes.len() {
        return Err(err(pos, "trailing input"));
    }
    Ok(blocks)
}

impl FromStr for Pattern {
    type Err = Error;

    /// Infers `k` as one more than the largest vertex mentioned.
    fn from_str(s: &str) -> Result<Pattern> {
        let blocks = parse_blocks(s)?;
        let k = infer_k(&blocks)?;
        Pattern::canonicalize(k, &blocks)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, block) in self.blocks().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("{")?;
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                match e {
                    Element::Star => f.write_str("*")?,
                    Element::Vertex(v) => write!(f, "{v}")?,
                }
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}

/// Serialized in the JSON block form, e.g. `[["*",0,1],[2]]`.
impl serde::Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Pattern, D::Error> {
        let value = Value::deserialize(deserializer)?;
        Pattern::from_json(&value).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern({self})")
    }
}

/// A finite layer graph `G`; the layered graph is `G × ℤ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    k: usize,
    edges: Vec<(usize, usize)>,
    cycle: bool,
}

impl Graph {
    /// The cycle `C_k` with edges `{i, i+1 mod k}` listed by `i`.
    pub fn cycle(k: usize) -> Result<Graph> {
        if !(3..=MAX_K).contains(&k) {
            return Err(Error::InvalidPartition(format!("cycle length {k} outside 3..={MAX_K}")));
        }
        let edges = (0..k).map(|i| (i, (i + 1) % k)).collect();
        Ok(Graph { k, edges, cycle: true })
    }

    /// The path `L_k` on vertices `0..k-1`.
    pub fn line(k: usize) -> Result<Graph> {
        Graph::new(k, (1..k).map(|i| (i - 1, i)).collect())
    }

    pub fn new(k: usize, edges: Vec<(usize, usize)>) -> Result<Graph> {
        if k == 0 || k > MAX_K {
            return Err(Error::InvalidPartition(format!("vertex count {k} outside 1..={MAX_K}")));
        }
        if edges.iter().any(|&(a, b)| a >= k || b >= k || a == b) {
            return Err(Error::InvalidPartition("edge endpoint out of range".into()));
        }
        if k + edges.len() > 63 {
            return Err(Error::InvalidPartition("too many edges for one layer mask".into()));
        }
        Ok(Graph { k, edges, cycle: false })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_cycle(&self) -> bool {
        self.cycle
    }

    /// Edges of one layer `E_n`: `k` vertical plus the horizontal copies.
    pub fn layer_edges(&self) -> usize {
        self.k + self.edges.len()
    }
}

/// Bell numbers by the triangle recurrence.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &r in &row {
            let last = *next.last().unwrap();
            next.push(last + r);
        }
        row = next;
    }
    row[0]
}

/// `n_k = ⌊(k+2)/2⌋`, the step count after which every attainable pattern
/// reaches every other with positive probability.
pub fn n_k(k: usize) -> usize {
    (k + 2) / 2
}

/// All patterns on a graph, indexed, with the infected/uninfected split.
#[derive(Clone, Debug)]
pub struct PatternSpace {
    graph: Graph,
    patterns: Vec<Pattern>,
    index: HashMap<u64, usize>,
    star: Vec<usize>,
    dagger: Vec<usize>,
}

impl PatternSpace {
    pub fn cycle(k: usize) -> Result<PatternSpace> {
        PatternSpace::enumerate(Graph::cycle(k)?)
    }

    pub fn enumerate(graph: Graph) -> Result<PatternSpace> {
        PatternSpace::enumerate_with_cap(graph, DEFAULT_CAP)
    }

    pub fn enumerate_with_cap(graph: Graph, cap: usize) -> Result<PatternSpace> {
        let k = graph.k();
        if k > cap || k > MAX_K {
            return Err(Error::Capacity { k, cap: cap.min(MAX_K), states: bell(k + 1) });
        }
        let mut patterns = Vec::with_capacity(bell(k + 1) as usize);
        let mut rgs = vec![0u8; k + 1];
        restricted_growth(&mut rgs, 1, 0, &mut |r| patterns.push(Pattern { labels: r.to_vec() }));
        let index = patterns.iter().enumerate().map(|(i, p)| (p.key(), i)).collect();
        let (star, dagger): (Vec<usize>, Vec<usize>) = (0..patterns.len()).partition(|&i| patterns[i].is_infected());
        Ok(PatternSpace { graph, patterns, index, star, dagger })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn k(&self) -> usize {
        self.graph.k()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn pattern(&self, i: usize) -> &Pattern {
        &self.patterns[i]
    }

    pub fn index_of(&self, x: &Pattern) -> Option<usize> {
        if x.k() != self.k() {
            return None;
        }
        self.index.get(&x.key()).copied()
    }

    pub(crate) fn index_of_key(&self, key: u64) -> usize {
        self.index[&key]
    }

    /// Indices of `M*`.
    pub fn star_indices(&self) -> &[usize] {
        &self.star
    }

    /// Indices of `M†`.
    pub fn dagger_indices(&self) -> &[usize] {
        &self.dagger
    }

    pub fn dagger_index(&self) -> usize {
        self.index_of(&Pattern::dagger(self.k())).unwrap()
    }

    pub fn all_infected_index(&self) -> usize {
        self.index_of(&Pattern::all_infected(self.k())).unwrap()
    }

    /// Noncrossing elements of `M*`; only meaningful on a cycle.
    pub fn noncrossing_star(&self) -> Result<Vec<usize>> {
        if !self.graph.is_cycle() {
            return Err(Error::NotACycle);
        }
        Ok(self.star.iter().copied().filter(|&i| self.patterns[i].is_noncrossing()).collect())
    }
}

fn restricted_growth(rgs: &mut [u8], pos: usize, max: u8, emit: &mut impl FnMut(&[u8])) {
    if pos == rgs.len() {
        emit(rgs);
        return;
    }
    for l in 0..=max + 1 {
        rgs[pos] = l;
        restricted_growth(rgs, pos + 1, max.max(l), emit);
    }
}

/// Patterns of the stationary connectivity chain's recurrent class: the
/// closure of `x_†` under positive one-layer transitions.
pub fn connectivity_support(space: &PatternSpace, kernel: &TransitionKernel) -> Result<Vec<usize>> {
    bfs_closure(kernel, &[space.dagger_index()], |_| true)
}

/// `M̃*`: infected patterns reachable from the support of the law of `𝒳₀`
/// (uninfected layer-0 connectivity in its recurrent class, with the marker
/// attached to the block of `origin`).
pub fn attainable_states(space: &PatternSpace, kernel: &TransitionKernel, origin: usize) -> Result<Vec<usize>> {
    let seeds = initial_support(space, kernel, origin)?;
    bfs_closure(kernel, &seeds, |i| space.pattern(i).is_infected())
}

/// Support of the law of `𝒳₀`.
pub fn initial_support(space: &PatternSpace, kernel: &TransitionKernel, origin: usize) -> Result<Vec<usize>> {
    if origin >= space.k() {
        return Err(Error::InvalidPartition(format!("origin {origin} out of range")));
    }
    let mut seeds: Vec<usize> = connectivity_support(space, kernel)?
        .into_iter()
        .map(|z| space.index_of(&space.pattern(z).infect_block_of(origin)).unwrap())
        .collect();
    seeds.sort_unstable();
    seeds.dedup();
    Ok(seeds)
}

fn bfs_closure(kernel: &TransitionKernel, seeds: &[usize], keep: impl Fn(usize) -> bool) -> Result<Vec<usize>> {
    let mut seen = vec![false; kernel.states()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in seeds {
        if keep(s) && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(y) = queue.pop_front() {
        let row = kernel.row(y).ok_or_else(|| Error::Structure(format!("kernel row {y} was not built")))?;
        for e in row {
            if keep(e.target) && !seen[e.target] {
                seen[e.target] = true;
                queue.push_back(e.target);
            }
        }
    }
    Ok((0..seen.len()).filter(|&i| seen[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> Pattern {
        s.parse().unwrap()
    }

    #[test]
    fn figure_pattern_round_trips_through_text() {
        let x = Pattern::parse_with_k("{{*,0,1},{2,4},{3}}", 5).unwrap();
        assert_eq!(x.to_string(), "{{*,0,1},{2,4},{3}}");
        let y = Pattern::parse_with_k("{{2,4},{*,1,0},{3}}", 5).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn fully_disconnected_is_dagger() {
        assert_eq!(pat("{{*},{0},{1},{2}}"), Pattern::dagger(3));
        assert_eq!(Pattern::dagger(3).to_string(), "{{*},{0},{1},{2}}");
        assert!(!Pattern::dagger(3).is_infected());
        assert_eq!(Pattern::all_infected(4).to_string(), "{{*,0,1,2,3}}");
    }

    #[test]
    fn bare_marker_block_prints_first() {
        assert_eq!(pat("{{0,4},{1,2},{3},{*}}").to_string(), "{{*},{0,4},{1,2},{3}}");
        assert_eq!(pat("{{0},{1,*}}").to_string(), "{{0},{*,1}}");
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        assert!(matches!(Pattern::parse_with_k("{{*,0,1},{1,2}}", 3), Err(Error::InvalidPartition(_))));
        assert!(matches!(Pattern::parse_with_k("{{*,0},{2}}", 3), Err(Error::InvalidPartition(_))));
        assert!(matches!(Pattern::parse_with_k("{{0,1,2}}", 3), Err(Error::InvalidPartition(_))));
        assert!(matches!("{{*,0}".parse::<Pattern>(), Err(Error::Parse { .. })));
        assert!(matches!("{{*,0}} x".parse::<Pattern>(), Err(Error::Parse { .. })));
        assert!(matches!("{{*,99}}".parse::<Pattern>(), Err(Error::Parse { .. })));
    }

    #[test]
    fn json_form() {
        let x = pat("{{*,0,1},{2,4},{3}}");
        assert_eq!(x.to_json().to_string(), r#"[["*",0,1],[2,4],[3]]"#);
        assert_eq!(Pattern::from_json_str(r#"[[3],[2,4],[1,"*",0]]"#).unwrap(), x);
        assert!(Pattern::from_json_str(r#"[["*",0],["x"]]"#).is_err());
    }

    #[test]
    fn enumeration_counts() {
        let s3 = PatternSpace::cycle(3).unwrap();
        assert_eq!(s3.len(), 15);
        assert_eq!(s3.star_indices().len(), 10);
        assert_eq!(s3.dagger_indices().len(), 5);
        assert_eq!(PatternSpace::cycle(4).unwrap().len(), 52);
        for k in 3..=7 {
            let s = PatternSpace::cycle(k).unwrap();
            assert_eq!(s.len() as u64, bell(k + 1));
            assert_eq!(s.star_indices().len() as u64, bell(k + 1) - bell(k));
        }
    }

    #[test]
    fn enumeration_respects_cap() {
        let err = PatternSpace::enumerate_with_cap(Graph::cycle(6).unwrap(), 5).unwrap_err();
        match err {
            Error::Capacity { k, states, .. } => {
                assert_eq!(k, 6);
                assert_eq!(states, 877);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn noncrossing_examples() {
        assert!(Pattern::parse_with_k("{{*,0,2},{1},{3}}", 4).unwrap().is_noncrossing());
        assert!(!Pattern::parse_with_k("{{*,0,2},{1,3}}", 4).unwrap().is_noncrossing());
        assert!(Pattern::all_infected(5).is_noncrossing());
    }

    #[test]
    fn noncrossing_requires_cycle() {
        let s = PatternSpace::enumerate(Graph::line(3).unwrap()).unwrap();
        assert!(matches!(s.noncrossing_star(), Err(Error::NotACycle)));
    }

    #[test]
    fn rotation_examples() {
        let x = Pattern::parse_with_k("{{*,0},{1},{2}}", 3).unwrap();
        assert_eq!(x.rotate(0), x);
        assert_eq!(x.rotate(1).to_string(), "{{0},{*,1},{2}}");
        assert_eq!(x.rotate(1).rotate(2), x);
        assert_eq!(x.rotate(-1), x.rotate(2));
    }

    #[test]
    fn infection_helpers() {
        let x = pat("{{*,0,1},{2,4},{3}}");
        assert_eq!(x.infected_vertices(), vec![0, 1]);
        assert_eq!(x.without_infection().to_string(), "{{*},{0,1},{2,4},{3}}");
        assert_eq!(x.without_infection().infect_block_of(4).to_string(), "{{0,1},{*,2,4},{3}}");
        assert_eq!(x.block_count(), 3);
    }

    #[test]
    fn bell_numbers() {
        let b: Vec<u64> = (0..12).map(bell).collect();
        assert_eq!(b, [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570]);
        assert_eq!(n_k(3), 2);
        assert_eq!(n_k(4), 3);
        assert_eq!(n_k(5), 3);
    }
}
