//! Exact marginals of the pattern chain and monotonicity in the layer index.
//!
//! A [`PercolationModel`] holds the pattern space and kernel for a layer graph
//! with a distinguished origin vertex; [`ModelAtP`] evaluates it at one `p`.
//! Comparisons between steps `n` and `n + 1` are made in floating point with
//! a relative tie tolerance and settled in exact rational arithmetic when a
//! tie shows up at small `n`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{rational_from_f64, KernelMatrix, TransitionKernel};
use crate::linalg::{exact_stationary, DenseMatrix, ExactMatrix};
use crate::pattern::{attainable_states, connectivity_support, Graph, Pattern, PatternSpace};
use crate::qsd::{
    alpha_floor, compute_qsd, minorization_constant, survival_comparison_constant, AbsorbingChain,
    ConditionedEvolution, MinorizationParams, QsdResult, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};

/// Relative tolerance under which two probabilities count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Largest `n` for which ties are settled exactly.
pub const EXACT_TIE_LIMIT: usize = 16;

pub const DEFAULT_ONSET_SEARCH: usize = 64;

/// Pattern space, kernel and attainable set for a graph with origin `o`.
#[derive(Clone, Debug)]
pub struct PercolationModel {
    space: PatternSpace,
    kernel: TransitionKernel,
    origin: usize,
    attainable: Vec<usize>,
    connectivity: Vec<usize>,
}

impl PercolationModel {
    /// The cylinder `C_k × ℤ` with origin vertex 0.
    pub fn cycle(k: usize) -> Result<PercolationModel> {
        PercolationModel::new(Graph::cycle(k)?, 0)
    }

    pub fn new(graph: Graph, origin: usize) -> Result<PercolationModel> {
        let space = PatternSpace::enumerate(graph)?;
        PercolationModel::from_space(space, origin)
    }

    pub fn from_space(space: PatternSpace, origin: usize) -> Result<PercolationModel> {
        if origin >= space.k() {
            return Err(Error::InvalidPartition(format!("origin {origin} out of range")));
        }
        let mut kernel = TransitionKernel::build_closure(&space, &[space.dagger_index()])?;
        let connectivity = connectivity_support(&space, &kernel)?;
        let seeds: Vec<usize> =
            connectivity.iter().map(|&z| space.index_of(&space.pattern(z).infect_block_of(origin)).unwrap()).collect();
        kernel.extend_closure(&space, &seeds)?;
        let attainable = attainable_states(&space, &kernel, origin)?;
        Ok(PercolationModel { space, kernel, origin, attainable, connectivity })
    }

    pub fn k(&self) -> usize {
        self.space.k()
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn space(&self) -> &PatternSpace {
        &self.space
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    /// Space indices of `M̃*`, ascending.
    pub fn attainable(&self) -> &[usize] {
        &self.attainable
    }

    /// Space indices of the recurrent uninfected connectivity patterns.
    pub fn connectivity_states(&self) -> &[usize] {
        &self.connectivity
    }

    /// Position of a pattern within [`Self::attainable`].
    pub fn attainable_position(&self, x: &Pattern) -> Result<Option<usize>> {
        let i = self.space.index_of(x).ok_or_else(|| Error::UnknownState(x.to_string()))?;
        Ok(self.attainable.binary_search(&i).ok())
    }

    pub fn at(&self, p: f64) -> Result<ModelAtP<'_>> {
        ModelAtP::new(self, p)
    }

    pub fn exact_at(&self, p: &BigRational) -> Result<ExactModel> {
        ExactModel::new(self, p)
    }
}

/// Where the chain starts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Start {
    /// A fixed pattern `y ∈ M̃*` in layer 0.
    Pattern(Pattern),
    /// The law of `𝒳₀` under percolation on the lower half-cylinder.
    StationaryInitial,
}

impl Start {
    pub fn tag(&self) -> String {
        match self {
            Start::Pattern(y) => y.to_string(),
            Start::StationaryInitial => "stationary-initial".into(),
        }
    }
}

/// The model evaluated at a fixed `p ∈ (0, 1)`.
#[derive(Clone, Debug)]
pub struct ModelAtP<'a> {
    model: &'a PercolationModel,
    p: f64,
    matrix: KernelMatrix,
    chain: AbsorbingChain,
    rho: Vec<f64>,
    initial: Vec<f64>,
    /// `full_weights[v][x]`: probability that `v` joins the marker once the
    /// connections through layers above `n` are added to pattern `x`.
    full_weights: Vec<Vec<f64>>,
}

impl<'a> ModelAtP<'a> {
    fn new(model: &'a PercolationModel, p: f64) -> Result<ModelAtP<'a>> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p, "(0, 1)"));
        }
        let matrix = model.kernel.evaluate(p)?;
        let q = matrix.restrict(&model.attainable)?;
        let labels = model.attainable.iter().map(|&i| model.space.pattern(i).to_string()).collect();
        let chain = AbsorbingChain::new(q, labels)?;
        let rho = stationary(&matrix.restrict(&model.connectivity)?)?;
        let mut initial = vec![0.0; model.attainable.len()];
        for (&z, &r) in model.connectivity.iter().zip(&rho) {
            let x = model.space.pattern(z).infect_block_of(model.origin);
            let pos = model
                .attainable_position(&x)?
                .ok_or_else(|| Error::Structure(format!("initial pattern {x} is not attainable")))?;
            initial[pos] += r;
        }
        let full_weights = full_connection_weights(model, p, &rho);
        Ok(ModelAtP { model, p, matrix, chain, rho, initial, full_weights })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn model(&self) -> &PercolationModel {
        self.model
    }

    pub fn matrix(&self) -> &KernelMatrix {
        &self.matrix
    }

    /// `Q_p` on `M̃*` as an absorbing chain.
    pub fn chain(&self) -> &AbsorbingChain {
        &self.chain
    }

    /// Stationary law of the uninfected connectivity chain, indexed like
    /// [`PercolationModel::connectivity_states`].
    pub fn connectivity_stationary(&self) -> &[f64] {
        &self.rho
    }

    /// Law of `𝒳₀` on `M̃*` (indexed like [`PercolationModel::attainable`]).
    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    fn start_vector(&self, start: &Start) -> Result<Vec<f64>> {
        match start {
            Start::StationaryInitial => Ok(self.initial.clone()),
            Start::Pattern(y) => {
                let pos = self
                    .model
                    .attainable_position(y)?
                    .ok_or_else(|| Error::UnknownState(format!("{y} is not attainable")))?;
                let mut v = vec![0.0; self.initial.len()];
                v[pos] = 1.0;
                Ok(v)
            }
        }
    }

    /// Conditional laws and log-survival for `n = 0..=horizon`.
    pub fn curve(&self, start: &Start, horizon: usize) -> Result<MarginalCurve> {
        let mu = self.start_vector(start)?;
        let mut evolution = ConditionedEvolution::new(&self.chain, &mu)?;
        let mut conditional = Vec::with_capacity(horizon + 1);
        let mut log_survival = Vec::with_capacity(horizon + 1);
        for n in 0..=horizon {
            if n > 0 {
                evolution.step()?;
            }
            conditional.push(evolution.distribution().to_vec());
            log_survival.push(evolution.log_survival());
        }
        Ok(MarginalCurve { k: self.model.k(), p: self.p, start: start.tag(), horizon, conditional, log_survival })
    }

    /// `P(𝒳ₙ^y = x)` or `P(𝒳ₙ = x)`.
    pub fn marginal(&self, start: &Start, x: &Pattern, n: usize) -> Result<f64> {
        let Some(pos) = self.model.attainable_position(x)? else {
            return Ok(0.0);
        };
        let mu = self.start_vector(start)?;
        let mut evolution = ConditionedEvolution::new(&self.chain, &mu)?;
        for _ in 0..n {
            evolution.step()?;
        }
        Ok(evolution.distribution()[pos] * evolution.log_survival().exp())
    }

    /// `P((o,0) ↔ (v,n))` through paths that stay in layers `≤ n`.
    pub fn connection_probability(&self, v: usize, n: usize) -> Result<f64> {
        let curve = self.curve(&Start::StationaryInitial, n)?;
        Ok(self.connection_from(&curve, v, n))
    }

    /// Expected number of vertices of layer `n` joined to the origin through
    /// layers `≤ n`.
    pub fn expected_infected(&self, n: usize) -> Result<f64> {
        let curve = self.curve(&Start::StationaryInitial, n)?;
        Ok(self.expected_from(&curve, n))
    }

    /// `P((o,0) ↔ (v,n))` with paths anywhere in the cylinder.
    pub fn connection_probability_full(&self, v: usize, n: usize) -> Result<f64> {
        let curve = self.curve(&Start::StationaryInitial, n)?;
        Ok(dot(&curve.unconditional(n), &self.full_weights[v]))
    }

    /// `E(𝒲ₙ)` with paths anywhere in the cylinder.
    pub fn expected_infected_full(&self, n: usize) -> Result<f64> {
        let curve = self.curve(&Start::StationaryInitial, n)?;
        Ok(self.expected_full_from(&curve, n))
    }

    pub fn connection_from(&self, curve: &MarginalCurve, v: usize, n: usize) -> f64 {
        let weights = self.infection_indicator(v);
        curve.unconditional(n).iter().zip(&weights).map(|(a, b)| a * b).sum()
    }

    pub fn expected_from(&self, curve: &MarginalCurve, n: usize) -> f64 {
        let weights = self.infected_counts();
        curve.unconditional(n).iter().zip(&weights).map(|(a, b)| a * b).sum()
    }

    pub fn expected_full_from(&self, curve: &MarginalCurve, n: usize) -> f64 {
        let now = curve.unconditional(n);
        self.full_weights.iter().map(|w| dot(&now, w)).sum()
    }

    fn infection_indicator(&self, v: usize) -> Vec<f64> {
        self.model.attainable.iter().map(|&i| f64::from(u8::from(self.model.space.pattern(i).infected(v)))).collect()
    }

    fn infected_counts(&self) -> Vec<f64> {
        self.model.attainable.iter().map(|&i| self.model.space.pattern(i).infected_count() as f64).collect()
    }

    /// QSD and constants measured on the chain for `ν = δ_{x_*}`: `c_ν` and
    /// `c_ν′` from the chain itself (the latter through `horizon` and in the
    /// limit), `c_α` and `c_†` from their closed-form floors, `n_† = 0`.
    pub fn measured_certificate(&self, n_nu: usize, horizon: usize) -> Result<(QsdResult, MinorizationParams)> {
        let k = self.model.k();
        let star = self
            .model
            .attainable_position(&Pattern::all_infected(k))?
            .ok_or_else(|| Error::UnknownState(Pattern::all_infected(k).to_string()))?;
        let qsd = compute_qsd(&self.chain, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;
        let mut nu = vec![0.0; self.chain.len()];
        nu[star] = 1.0;
        let c_nu = minorization_constant(&self.chain, &nu, n_nu)?;
        let c_nu_prime = survival_comparison_constant(&self.chain, &nu, horizon, &qsd).certified.min(1.0);
        let c_dagger = (1.0 - self.p).powi(k as i32);
        let params = MinorizationParams::new(n_nu, c_nu, c_nu_prime, alpha_floor(k, self.p), c_dagger, 0)?;
        Ok((qsd, params))
    }

    /// Rotation-invariant `ν_p` on `M̃*` (see [`crate::bounds::nu_p_distribution`]).
    pub fn rotation_invariant_nu(&self) -> Result<Vec<f64>> {
        if !self.model.space.graph().is_cycle() {
            return Err(Error::NotACycle);
        }
        let mut nu = vec![0.0; self.model.attainable.len()];
        for (x, w) in crate::bounds::nu_p_distribution(self.model.k(), self.p)? {
            let pos = self
                .model
                .attainable_position(&x)?
                .ok_or_else(|| Error::Structure(format!("pattern {x} is not attainable")))?;
            nu[pos] += w;
        }
        Ok(nu)
    }

    /// Whether `P(𝒳_{n+1}^y = x) ≤ P(𝒳ₙ^y = x)` for all `y` in `starts`
    /// (default all of `M̃*`) and all `x ∈ M̃*`.
    pub fn check_monotone_at(&self, n: usize, starts: Option<&[usize]>) -> Result<MonotoneCheck> {
        let q = self.chain.q();
        let (now, _) = scaled_power(q, n);
        self.check_with_power(n, &now, starts)
    }

    fn check_with_power(&self, n: usize, now: &DenseMatrix, starts: Option<&[usize]>) -> Result<MonotoneCheck> {
        let size = q_dim(&self.chain);
        let all: Vec<usize> = (0..size).collect();
        let starts = starts.unwrap_or(&all);
        let next = now.matmul(self.chain.q());
        let mut verdict = Tally::default();
        let mut worst: Option<(f64, usize, usize)> = None;
        let mut tied = Vec::new();
        for &y in starts {
            for x in 0..size {
                let (a, b) = (now[(y, x)], next[(y, x)]);
                match compare(a, b) {
                    Cmp::Decrease => {}
                    Cmp::Tie => tied.push((y, x)),
                    Cmp::Increase => {
                        verdict.fails = true;
                        let excess = if a > 0.0 { b / a } else { f64::INFINITY };
                        if worst.is_none_or(|w| excess > w.0) {
                            worst = Some((excess, y, x));
                        }
                    }
                }
            }
        }
        let mut exact_used = false;
        if !verdict.fails && !tied.is_empty() {
            if n <= EXACT_TIE_LIMIT {
                exact_used = true;
                let exact = self.model.exact_at(&rational_from_f64(self.p))?;
                let mut by_start: HashMap<usize, Vec<usize>> = HashMap::new();
                for &(y, x) in &tied {
                    by_start.entry(y).or_default().push(x);
                }
                for (y, xs) in by_start {
                    let (a, b) = exact.delta_pair(y, n);
                    for x in xs {
                        if b[x] > a[x] {
                            verdict.fails = true;
                            worst = Some((a[x].to_f64().map_or(f64::INFINITY, |a| b[x].to_f64().unwrap() / a), y, x));
                        }
                    }
                }
            } else {
                verdict.inconclusive = true;
            }
        }
        let label = |i: usize| self.chain.labels()[i].clone();
        Ok(MonotoneCheck {
            n,
            verdict: verdict.verdict(),
            exact_tie_break: exact_used,
            ties: tied.len(),
            worst_violation: worst.map(|(ratio, y, x)| Violation { start: label(y), target: label(x), ratio }),
        })
    }

    /// Smallest `n ≤ n_max` at which [`Self::check_monotone_at`] holds.
    pub fn empirical_onset(&self, n_max: usize) -> Result<OnsetReport> {
        let q = self.chain.q();
        let size = q.dim();
        let mut now = DenseMatrix::identity(size);
        let mut onset = None;
        for n in 0..=n_max {
            if self.check_with_power(n, &now, None)?.verdict == Verdict::Holds {
                onset = Some(n);
                break;
            }
            now = now.matmul(q);
            let scale = now.max_entry();
            now.scale(1.0 / scale);
        }
        Ok(OnsetReport { k: self.model.k(), p: self.p, onset, n_max, certified_by_mono_n: true })
    }

    /// Smallest `N` such that the layer marginals from the stationary start
    /// are monotone for every `N ≤ n ≤ n_max`.
    pub fn marginal_onset(&self, n_max: usize) -> Result<OnsetReport> {
        let mut onset = None;
        for n in 0..=n_max {
            match self.verify_implication_chain(n)?.marginals {
                Verdict::Holds => {
                    onset.get_or_insert(n);
                }
                _ => onset = None,
            }
        }
        Ok(OnsetReport { k: self.model.k(), p: self.p, onset, n_max, certified_by_mono_n: false })
    }

    /// Evaluates the four monotonicity statements between `n` and `n + 1`:
    /// (i) every fixed-start marginal, (ii) marginals of `𝒳`, (iii) connection
    /// probabilities, (iv) the expected number of infected vertices.
    pub fn verify_implication_chain(&self, n: usize) -> Result<ImplicationReport> {
        let fixed = self.check_monotone_at(n, None)?.verdict;
        let curve = self.curve(&Start::StationaryInitial, n + 1)?;
        let now = curve.unconditional(n);
        let next = curve.unconditional(n + 1);
        let k = self.model.k();
        let indicators: Vec<Vec<f64>> = (0..k).map(|v| self.infection_indicator(v)).collect();
        let counts = self.infected_counts();

        let mut tallies = [Tally::default(), Tally::default(), Tally::default()];
        for (a, b) in now.iter().zip(&next) {
            tallies[0].record(compare(*a, *b));
        }
        for w in &indicators {
            tallies[1].record(compare(dot(&now, w), dot(&next, w)));
        }
        tallies[2].record(compare(dot(&now, &counts), dot(&next, &counts)));

        let mut exact_used = false;
        if tallies.iter().any(|t| t.tied && !t.fails) {
            if n <= EXACT_TIE_LIMIT {
                exact_used = true;
                let exact = self.model.exact_at(&rational_from_f64(self.p))?;
                let (a, b) = exact.initial_pair(n);
                let exact_dot = |v: &[BigRational], w: &[f64]| {
                    v.iter()
                        .zip(w)
                        .filter(|(_, &w)| w != 0.0)
                        .map(|(x, &w)| x * rational_from_f64(w))
                        .fold(BigRational::zero(), |s, t| s + t)
                };
                tallies[0] = Tally::exact(a.iter().zip(&b).map(|(x, y)| y <= x));
                tallies[1] = Tally::exact(indicators.iter().map(|w| exact_dot(&b, w) <= exact_dot(&a, w)));
                tallies[2] = Tally::exact(std::iter::once(exact_dot(&b, &counts) <= exact_dot(&a, &counts)));
            } else {
                for t in tallies.iter_mut() {
                    t.inconclusive |= t.tied && !t.fails;
                }
            }
        }
        let [ii, iii, iv] = tallies.map(|t| t.verdict());

        // Unrestricted connections: no exact counterpart, so ties stay open.
        let mut full = [Tally::default(), Tally::default()];
        for w in &self.full_weights {
            full[0].record(compare(dot(&now, w), dot(&next, w)));
        }
        let total = |v: &[f64]| self.full_weights.iter().map(|w| dot(v, w)).sum::<f64>();
        full[1].record(compare(total(&now), total(&next)));
        for t in full.iter_mut() {
            t.inconclusive |= t.tied && !t.fails;
        }
        let [iii_full, iv_full] = full.map(|t| t.verdict());

        let implies = |a: Verdict, b: Verdict| a != Verdict::Holds || b != Verdict::Fails;
        Ok(ImplicationReport {
            n,
            fixed_start: fixed,
            marginals: ii,
            connections: iii,
            expectation: iv,
            connections_full: iii_full,
            expectation_full: iv_full,
            exact_tie_break: exact_used,
            ordering_respected: implies(fixed, ii)
                && implies(ii, iii)
                && implies(iii, iv)
                && implies(ii, iii_full)
                && implies(iii_full, iv_full),
        })
    }
}

fn dot(a: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(w).map(|(x, y)| x * y).sum()
}

/// Layer `n` is joined from above by the vertical edges into layer `n + 1`
/// and everything beyond. By reflection, the connectivity of layer `n + 1`
/// through those upper layers has the same law `ρ` as layer 0 through the
/// lower half; each vertex of layer `n` then hooks onto its block if its
/// vertical edge is open. The result is independent of `𝒳ₙ`.
fn full_connection_weights(model: &PercolationModel, p: f64, rho: &[f64]) -> Vec<Vec<f64>> {
    let k = model.k();
    let mut upper: HashMap<Vec<usize>, f64> = HashMap::new();
    for (&w, &r) in model.connectivity.iter().zip(rho) {
        let blocks = model.space.pattern(w).labels();
        for mask in 0u32..1 << k {
            let open = mask.count_ones() as i32;
            let weight = r * p.powi(open) * (1.0 - p).powi(k as i32 - open);
            let labels: Vec<usize> =
                (0..k).map(|u| if mask >> u & 1 == 1 { blocks[u] as usize } else { k + 1 + u }).collect();
            *upper.entry(labels).or_insert(0.0) += weight;
        }
    }
    let mut weights = vec![vec![0.0; model.attainable.len()]; k];
    for (pos, &i) in model.attainable.iter().enumerate() {
        let x = model.space.pattern(i).labels();
        for (z, &w) in &upper {
            // Join x and z: merge every block of x touched by a block of z.
            let mut root: Vec<usize> = x.iter().map(|&l| l as usize).collect();
            let mut changed = true;
            while changed {
                changed = false;
                for a in 0..k {
                    for b in a + 1..k {
                        if z[a] == z[b] && root[a] != root[b] {
                            let (lo, hi) = (root[a].min(root[b]), root[a].max(root[b]));
                            root.iter_mut().filter(|r| **r == hi).for_each(|r| *r = lo);
                            changed = true;
                        }
                    }
                }
            }
            for (v, wv) in weights.iter_mut().enumerate() {
                if root[v] == root[k] {
                    wv[pos] += w;
                }
            }
        }
    }
    weights
}

fn q_dim(chain: &AbsorbingChain) -> usize {
    chain.q().dim()
}

/// `Q^n` rescaled to unit maximum entry, with the log of the discarded scale.
pub fn scaled_power(q: &DenseMatrix, n: usize) -> (DenseMatrix, f64) {
    let mut result = DenseMatrix::identity(q.dim());
    let mut log_scale = 0.0;
    let mut base = q.clone();
    let mut base_log = 0.0;
    let mut e = n;
    let normalize = |m: &mut DenseMatrix| {
        let s = m.max_entry();
        m.scale(1.0 / s);
        s.ln()
    };
    while e > 0 {
        if e & 1 == 1 {
            result = result.matmul(&base);
            log_scale += base_log + normalize(&mut result);
        }
        e >>= 1;
        if e > 0 {
            base = base.matmul(&base);
            base_log = 2.0 * base_log + normalize(&mut base);
        }
    }
    (result, log_scale)
}

fn stationary(p: &DenseMatrix) -> Result<Vec<f64>> {
    let n = p.dim();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let next = p.left_mul(&v);
        let total: f64 = next.iter().sum();
        let next: Vec<f64> = next.into_iter().map(|x| x / total).collect();
        let change: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if change <= 1e-16 {
            return Ok(v);
        }
    }
    let residual = p.left_mul(&v).iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
    if residual <= 1e-14 {
        Ok(v)
    } else {
        Err(Error::NoConvergence { iterations: 1_000_000, residual })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cmp {
    Decrease,
    Tie,
    Increase,
}

/// Compares the value at `n` with the value at `n + 1`.
fn compare(now: f64, next: f64) -> Cmp {
    if now == next {
        return if now == 0.0 { Cmp::Decrease } else { Cmp::Tie };
    }
    let tol = TIE_TOLERANCE * now.abs().max(next.abs());
    if next - now > tol {
        Cmp::Increase
    } else if now - next > tol {
        Cmp::Decrease
    } else {
        Cmp::Tie
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    fails: bool,
    tied: bool,
    inconclusive: bool,
}

impl Tally {
    fn record(&mut self, c: Cmp) {
        match c {
            Cmp::Decrease => {}
            Cmp::Tie => self.tied = true,
            Cmp::Increase => self.fails = true,
        }
    }

    fn exact(mut holds: impl Iterator<Item = bool>) -> Tally {
        Tally { fails: !holds.all(|h| h), ..Tally::default() }
    }

    fn verdict(self) -> Verdict {
        if self.fails {
            Verdict::Fails
        } else if self.inconclusive {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        }
    }
}

/// Outcome of a monotonicity comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// A floating-point tie beyond the exact-arithmetic range.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub start: String,
    pub target: String,
    /// `P(𝒳_{n+1}^y = x) / P(𝒳ₙ^y = x)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneCheck {
    pub n: usize,
    pub verdict: Verdict,
    pub exact_tie_break: bool,
    pub ties: usize,
    pub worst_violation: Option<Violation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OnsetReport {
    pub k: usize,
    pub p: f64,
    pub onset: Option<usize>,
    pub n_max: usize,
    /// Monotonicity at one step propagates to all later steps.
    #[serde(rename = "certified_by_monoN")]
    pub certified_by_mono_n: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImplicationReport {
    pub n: usize,
    pub fixed_start: Verdict,
    pub marginals: Verdict,
    pub connections: Verdict,
    pub expectation: Verdict,
    /// (iii) with connections through all layers.
    pub connections_full: Verdict,
    /// (iv) with `𝒲ₙ` counting connections through all layers.
    pub expectation_full: Verdict,
    pub exact_tie_break: bool,
    pub ordering_respected: bool,
}

/// Conditional laws on `M̃*` and log-survival along `n = 0..=horizon`.
#[derive(Clone, Debug, Serialize)]
pub struct MarginalCurve {
    pub k: usize,
    pub p: f64,
    pub start: String,
    pub horizon: usize,
    pub conditional: Vec<Vec<f64>>,
    pub log_survival: Vec<f64>,
}

impl MarginalCurve {
    /// `P(𝒳ₙ = x)` for every attainable `x`.
    pub fn unconditional(&self, n: usize) -> Vec<f64> {
        let s = self.log_survival[n].exp();
        self.conditional[n].iter().map(|c| c * s).collect()
    }

    /// CSV: `n,x_pattern,probability,log_survival`.
    pub fn to_csv(&self, labels: &[String]) -> String {
        let mut out = String::from("n,x_pattern,probability,log_survival\n");
        for n in 0..=self.horizon {
            for (x, prob) in self.unconditional(n).into_iter().enumerate() {
                writeln!(out, "{n},\"{}\",{prob:e},{:e}", labels[x], self.log_survival[n]).unwrap();
            }
        }
        out
    }
}

/// The model at a rational `p`, in exact arithmetic.
#[derive(Clone, Debug)]
pub struct ExactModel {
    q: ExactMatrix,
    initial: Vec<BigRational>,
}

impl ExactModel {
    fn new(model: &PercolationModel, p: &BigRational) -> Result<ExactModel> {
        let matrix = model.kernel.evaluate_exact(p)?;
        let q = matrix.restrict(&model.attainable)?;
        let rho = exact_stationary(&matrix.restrict(&model.connectivity)?)
            .ok_or_else(|| Error::Structure("connectivity chain is not irreducible".into()))?;
        let mut initial = vec![BigRational::zero(); model.attainable.len()];
        for (&z, r) in model.connectivity.iter().zip(rho) {
            let x = model.space.pattern(z).infect_block_of(model.origin);
            let pos = model
                .attainable_position(&x)?
                .ok_or_else(|| Error::Structure(format!("initial pattern {x} is not attainable")))?;
            initial[pos] += r;
        }
        Ok(ExactModel { q, initial })
    }

    pub fn q(&self) -> &ExactMatrix {
        &self.q
    }

    pub fn initial_distribution(&self) -> &[BigRational] {
        &self.initial
    }

    /// Law of `𝒳ₙ` (unconditioned) from `μ` after `n` steps.
    pub fn evolve(&self, mu: &[BigRational], n: usize) -> Vec<BigRational> {
        let mut v = mu.to_vec();
        for _ in 0..n {
            v = self.q.left_mul(&v);
        }
        v
    }

    /// Laws at `n` and `n + 1` from the attainable state at position `y`.
    pub fn delta_pair(&self, y: usize, n: usize) -> (Vec<BigRational>, Vec<BigRational>) {
        use num_traits::One;
        let mut mu = vec![BigRational::zero(); self.q.dim()];
        mu[y] = BigRational::one();
        let a = self.evolve(&mu, n);
        let b = self.q.left_mul(&a);
        (a, b)
    }

    /// Laws of `𝒳ₙ` and `𝒳_{n+1}`.
    pub fn initial_pair(&self, n: usize) -> (Vec<BigRational>, Vec<BigRational>) {
        let a = self.evolve(&self.initial, n);
        let b = self.q.left_mul(&a);
        (a, b)
    }
}
