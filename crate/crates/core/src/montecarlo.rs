//! Direct simulation of bond percolation on finite windows.
//!
//! Cylinder samples cover layers `−depth..=horizon` of `C_k × ℤ`; everything
//! below the window is treated as closed. Strip samples explore clusters of
//! `ℤ × ℤ` lazily, drawing each edge the first time a search reaches it.
//!
//! Sample `i` draws from ChaCha8 stream `i` under the configured seed, so a
//! run is reproducible regardless of how samples are spread across threads.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{successor, LayerConfig};
use crate::pattern::{Graph, Pattern};

pub const DEFAULT_DEPTH: usize = 200;
pub const DEFAULT_STRIP_WIDTH: usize = 2001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Cycle length, or the strip width for strip functionals.
    pub k: usize,
    pub p: f64,
    /// Layers below 0 on the cylinder; layers above 0 for the half-plane count.
    pub depth: usize,
    /// Highest cylinder layer sampled.
    pub horizon: usize,
    pub samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub origin: usize,
}

impl SimConfig {
    pub fn new(k: usize, p: f64) -> SimConfig {
        SimConfig { k, p, depth: DEFAULT_DEPTH, horizon: 10, samples: 10_000, seed: 0, origin: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::ProbabilityOutOfRange(self.p, "[0, 1]"));
        }
        if self.samples == 0 || self.depth == 0 {
            return Err(Error::Structure("samples and depth must be positive".into()));
        }
        if self.origin >= self.k {
            return Err(Error::Structure(format!("origin {} outside 0..{}", self.origin, self.k)));
        }
        Ok(())
    }

    fn rng(&self, sample: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample);
        rng
    }
}

/// Integer-valued observable of one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// `1{𝒳ₙ = x}`.
    Marginal { pattern: Pattern, n: usize },
    /// `1{(o,0) ↔ (v,n)}` through layers `≤ n`.
    Connection { v: usize, n: usize },
    /// `1{(o,0) ↔ (v,n)}` anywhere in the window.
    ConnectionFull { v: usize, n: usize },
    /// Infected vertices of `𝒳ₙ`.
    Infected { n: usize },
    /// Vertices of layer `n` joined to the origin anywhere in the window.
    InfectedFull { n: usize },
    /// Strip: axis vertices joined to the origin inside `y ≥ 0`, up to `depth`.
    HalfPlaneAxis,
    /// Strip: layer-`n` vertices reached from the origin through its vertical
    /// edge, the layers strictly between, and the vertical edges into `n`.
    Escape { n: usize },
}

impl Functional {
    fn on_cylinder(&self) -> bool {
        !matches!(self, Functional::HalfPlaneAxis | Functional::Escape { .. })
    }

    fn layer(&self) -> Option<usize> {
        match self {
            Functional::Marginal { n, .. }
            | Functional::Connection { n, .. }
            | Functional::ConnectionFull { n, .. }
            | Functional::Infected { n }
            | Functional::InfectedFull { n } => Some(*n),
            _ => None,
        }
    }
}

/// Open edges of every layer of a cylinder window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BondWindow {
    depth: usize,
    layers: Vec<LayerConfig>,
}

impl BondWindow {
    /// `layers[i]` holds the edges of layer `i − depth`.
    pub fn from_layers(depth: usize, layers: Vec<LayerConfig>) -> BondWindow {
        BondWindow { depth, layers }
    }

    pub fn sample(graph: &Graph, depth: usize, horizon: usize, p: f64, rng: &mut impl Rng) -> BondWindow {
        let bits = graph.layer_edges();
        let layers = (0..=depth + horizon)
            .map(|_| {
                let mask = (0..bits).fold(0u64, |m, b| m | u64::from(rng.random_bool(p)) << b);
                LayerConfig::new(mask)
            })
            .collect();
        BondWindow { depth, layers }
    }

    pub fn horizon(&self) -> usize {
        self.layers.len() - 1 - self.depth
    }

    /// `𝒳₀ … 𝒳_horizon`.
    pub fn patterns(&self, graph: &Graph, origin: usize) -> Result<Vec<Pattern>> {
        let mut current = Pattern::dagger(graph.k());
        let mut out = Vec::with_capacity(self.horizon() + 1);
        for (i, &config) in self.layers.iter().enumerate() {
            current = successor(graph, &current, config)?;
            if i == self.depth {
                current = current.infect_block_of(origin);
            }
            if i >= self.depth {
                out.push(current.clone());
            }
        }
        Ok(out)
    }

    /// For each layer `0..=horizon`, which vertices are joined to the origin
    /// by open paths anywhere in the window.
    pub fn full_connections(&self, graph: &Graph, origin: usize) -> Vec<Vec<bool>> {
        let k = graph.k();
        let mut parent: Vec<usize> = (0..k * self.layers.len()).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        let mut union = |a: usize, b: usize| {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        };
        for (i, config) in self.layers.iter().enumerate() {
            for u in 0..k {
                if i > 0 && config.is_open(u) {
                    union((i - 1) * k + u, i * k + u);
                }
            }
            for (e, &(a, b)) in graph.edges().iter().enumerate() {
                if config.is_open(k + e) {
                    union(i * k + a, i * k + b);
                }
            }
        }
        let root = find(&mut parent, self.depth * k + origin);
        (self.depth..self.layers.len())
            .map(|i| (0..k).map(|u| find(&mut parent, i * k + u) == root).collect())
            .collect()
    }
}

/// The pattern sequence of sample `sample`.
pub fn sample_chain_path(config: &SimConfig, sample: u64) -> Result<Vec<Pattern>> {
    config.validate()?;
    let graph = Graph::cycle(config.k)?;
    let mut rng = config.rng(sample);
    BondWindow::sample(&graph, config.depth, config.horizon, config.p, &mut rng).patterns(&graph, config.origin)
}

type Site = (i64, i64);

/// Lazily drawn edges of `ℤ × ℤ`, restricted to `|x| ≤ half_width`.
struct LazyLattice<'a, R: Rng> {
    p: f64,
    half_width: i64,
    edges: HashMap<(Site, Site), bool>,
    rng: &'a mut R,
}

impl<R: Rng> LazyLattice<'_, R> {
    fn open(&mut self, a: Site, b: Site) -> bool {
        if a.0.abs() > self.half_width || b.0.abs() > self.half_width {
            return false;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        let (p, rng) = (self.p, &mut *self.rng);
        *self.edges.entry(key).or_insert_with(|| rng.random_bool(p))
    }

    /// Breadth-first cluster of `start` using edges accepted by `allowed`.
    fn cluster(&mut self, start: Site, allowed: impl Fn(Site, Site) -> bool) -> Vec<Site> {
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        let mut out = vec![start];
        while let Some(here) = queue.pop_front() {
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let next = (here.0 + dx, here.1 + dy);
                if seen.contains(&next) || !allowed(here, next) || !self.open(here, next) {
                    continue;
                }
                seen.insert(next);
                queue.push_back(next);
                out.push(next);
            }
        }
        out
    }
}

fn half_plane_axis(lattice: &mut LazyLattice<'_, impl Rng>, depth: i64) -> u64 {
    let cluster = lattice.cluster((0, 0), |_, b| (0..=depth).contains(&b.1));
    cluster.iter().filter(|s| s.1 == 0).count() as u64
}

fn escape(lattice: &mut LazyLattice<'_, impl Rng>, n: i64) -> u64 {
    if n == 0 {
        return 1;
    }
    let cluster = lattice.cluster((0, 0), |a, b| {
        let (lo, hi) = (a.1.min(b.1), a.1.max(b.1));
        if a.1 == b.1 {
            (1..n).contains(&lo)
        } else {
            lo >= 0 && hi <= n
        }
    });
    cluster.iter().filter(|s| s.1 == n).count() as u64
}

/// Sample mean of one functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub functional: Functional,
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// JSON record of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub config: SimConfig,
    pub functional: Functional,
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McResult {
    pub fn new(config: &SimConfig, estimate: Estimate) -> McResult {
        McResult {
            config: config.clone(),
            functional: estimate.functional,
            mean: estimate.mean,
            std_error: estimate.std_error,
            samples: estimate.samples,
            seed: config.seed,
        }
    }
}

pub fn estimate(config: &SimConfig, functional: Functional) -> Result<Estimate> {
    Ok(estimate_many(config, &[functional])?.remove(0))
}

/// Estimates several functionals from the same samples.
pub fn estimate_many(config: &SimConfig, functionals: &[Functional]) -> Result<Vec<Estimate>> {
    config.validate()?;
    let cylinder = functionals.iter().any(Functional::on_cylinder);
    let graph = if cylinder { Some(Graph::cycle(config.k)?) } else { None };
    for f in functionals {
        if f.layer().is_some_and(|n| n > config.horizon) {
            return Err(Error::Structure(format!("layer beyond horizon {}", config.horizon)));
        }
        if let Functional::Marginal { pattern, .. } = f {
            if pattern.k() != config.k {
                return Err(Error::Structure(format!("pattern has {} vertices", pattern.k())));
            }
        }
        if let Functional::Connection { v, .. } | Functional::ConnectionFull { v, .. } = f {
            if *v >= config.k {
                return Err(Error::Structure(format!("vertex {v} outside 0..{}", config.k)));
            }
        }
    }
    let width = functionals.len();
    let observe = |sample: u64| -> Result<Vec<u64>> {
        let mut rng = config.rng(sample);
        let mut values = vec![0u64; width];
        if let Some(graph) = &graph {
            let window = BondWindow::sample(graph, config.depth, config.horizon, config.p, &mut rng);
            let chain = window.patterns(graph, config.origin)?;
            let full = functionals
                .iter()
                .any(|f| matches!(f, Functional::ConnectionFull { .. } | Functional::InfectedFull { .. }))
                .then(|| window.full_connections(graph, config.origin));
            for (slot, f) in values.iter_mut().zip(functionals) {
                *slot = match f {
                    Functional::Marginal { pattern, n } => u64::from(&chain[*n] == pattern),
                    Functional::Connection { v, n } => u64::from(chain[*n].infected(*v)),
                    Functional::Infected { n } => chain[*n].infected_count() as u64,
                    Functional::ConnectionFull { v, n } => u64::from(full.as_ref().is_some_and(|f| f[*n][*v])),
                    Functional::InfectedFull { n } => {
                        full.as_ref().map_or(0, |f| f[*n].iter().filter(|&&c| c).count() as u64)
                    }
                    _ => *slot,
                };
            }
        }
        let half_width = (config.k / 2) as i64;
        for (slot, f) in values.iter_mut().zip(functionals) {
            let mut lattice = LazyLattice { p: config.p, half_width, edges: HashMap::new(), rng: &mut rng };
            match f {
                Functional::HalfPlaneAxis => *slot = half_plane_axis(&mut lattice, config.depth as i64),
                Functional::Escape { n } => *slot = escape(&mut lattice, *n as i64),
                _ => {}
            }
        }
        Ok(values)
    };
    let zero = || (vec![0u128; width], vec![0u128; width]);
    let (sums, squares) = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let values = observe(i)?;
            let sums = values.iter().map(|&v| u128::from(v)).collect();
            let squares = values.iter().map(|&v| u128::from(v) * u128::from(v)).collect();
            Ok((sums, squares))
        })
        .try_reduce(zero, |(mut s1, mut q1), (s2, q2)| {
            for (a, b) in s1.iter_mut().zip(s2) {
                *a += b;
            }
            for (a, b) in q1.iter_mut().zip(q2) {
                *a += b;
            }
            Ok::<_, Error>((s1, q1))
        })?;
    let n = config.samples as f64;
    Ok(functionals
        .iter()
        .zip(sums.iter().zip(&squares))
        .map(|(f, (&s, &q))| {
            let mean = s as f64 / n;
            let variance = if config.samples > 1 { ((q as f64 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
            Estimate { functional: f.clone(), mean, std_error: (variance / n).sqrt(), samples: config.samples }
        })
        .collect())
}
