//! Quasi-stationary distributions of finite absorbing chains.
//!
//! The chain is given by its substochastic block `Q` on the transient states;
//! the missing row mass is absorption. Everything here is power iteration on
//! `Q` with renormalization, so nothing underflows however long the horizon.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const DEFAULT_TOLERANCE: f64 = 1e-14;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Conditional probabilities below this count as zero in minorization checks.
const NEGLIGIBLE: f64 = 1e-300;

/// Substochastic transitions among the transient states of an absorbing chain.
#[derive(Clone, Debug)]
pub struct AbsorbingChain {
    q: DenseMatrix,
    labels: Vec<String>,
}

impl AbsorbingChain {
    /// Validates nonnegativity, row sums, some absorption, and that the
    /// transient states communicate.
    pub fn new(q: DenseMatrix, labels: Vec<String>) -> Result<AbsorbingChain> {
        let n = q.dim();
        if n < 2 {
            return Err(Error::Structure("need at least two transient states".into()));
        }
        if labels.len() != n {
            return Err(Error::Structure("one label per state required".into()));
        }
        if q.as_slice().iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::Structure("negative or NaN transition".into()));
        }
        let sums = q.row_sums();
        if sums.iter().any(|&s| s > 1.0 + 1e-12) {
            return Err(Error::Structure("row sum exceeds 1".into()));
        }
        if sums.iter().all(|&s| s >= 1.0) {
            return Err(Error::Structure("no state leaks into the absorbing set".into()));
        }
        if !strongly_connected(&q) {
            return Err(Error::Structure("transient states do not communicate".into()));
        }
        Ok(AbsorbingChain { q, labels })
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.q.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.q.dim() == 0
    }
}

fn strongly_connected(q: &DenseMatrix) -> bool {
    let n = q.dim();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { q[(i, j)] } else { q[(j, i)] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Dominant left/right eigenpair of `Q`.
#[derive(Clone, Debug, Serialize)]
pub struct QsdResult {
    pub alpha: Vec<f64>,
    pub lambda: f64,
    /// Normalized so that `Σ α(x) η(x) = 1`.
    pub eta: Vec<f64>,
    pub residual_l1: f64,
    pub residual_eta: f64,
    pub iterations: usize,
}

/// Left and right power iteration from uniform starts.
pub fn compute_qsd(chain: &AbsorbingChain, tolerance: f64, max_iterations: usize) -> Result<QsdResult> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::Structure("tolerance must be positive".into()));
    }
    let q = chain.q();
    let n = q.dim();

    let mut alpha = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iterations {
        let next = q.left_mul(&alpha);
        lambda = next.iter().sum::<f64>();
        if lambda <= 0.0 {
            return Err(Error::Extinction(iterations + 1));
        }
        residual = next.iter().zip(&alpha).map(|(a, b)| (a - lambda * b).abs()).sum();
        iterations += 1;
        if residual <= tolerance {
            break;
        }
        alpha = next.into_iter().map(|v| v / lambda).collect();
    }
    if residual > tolerance {
        return Err(Error::NoConvergence { iterations, residual });
    }

    let mut eta = vec![1.0; n];
    let mut residual_eta = f64::INFINITY;
    let mut right_iters = 0;
    while right_iters < max_iterations {
        let next = q.right_mul(&eta);
        let scale = next.iter().copied().fold(0.0, f64::max);
        if scale <= 0.0 {
            return Err(Error::Extinction(right_iters + 1));
        }
        residual_eta = next.iter().zip(&eta).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        right_iters += 1;
        eta = next.into_iter().map(|v| v / scale).collect();
        if residual_eta <= tolerance {
            break;
        }
    }
    if residual_eta > tolerance {
        return Err(Error::NoConvergence { iterations: right_iters, residual: residual_eta });
    }
    let pairing: f64 = alpha.iter().zip(&eta).map(|(a, e)| a * e).sum();
    let eta: Vec<f64> = eta.into_iter().map(|e| e / pairing).collect();
    residual_eta = q.right_mul(&eta).iter().zip(&eta).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);

    Ok(QsdResult { alpha, lambda, eta, residual_l1: residual, residual_eta, iterations })
}

/// Conditioned law after `n` steps, and `ln P^μ(alive at n)`.
pub fn conditioned_distribution(chain: &AbsorbingChain, mu: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let mut evolution = ConditionedEvolution::new(chain, mu)?;
    for _ in 0..n {
        evolution.step()?;
    }
    Ok((evolution.distribution().to_vec(), evolution.log_survival()))
}

/// Step-by-step conditioned evolution with accumulated log-survival.
#[derive(Clone, Debug)]
pub struct ConditionedEvolution<'a> {
    chain: &'a AbsorbingChain,
    dist: Vec<f64>,
    log_survival: f64,
    step: usize,
}

impl<'a> ConditionedEvolution<'a> {
    pub fn new(chain: &'a AbsorbingChain, mu: &[f64]) -> Result<ConditionedEvolution<'a>> {
        if mu.len() != chain.len() {
            return Err(Error::Structure("start distribution has the wrong length".into()));
        }
        let total: f64 = mu.iter().sum();
        if total.is_nan() || total <= 0.0 || mu.iter().any(|&v| v < 0.0) {
            return Err(Error::Structure("start distribution must be nonnegative with positive mass".into()));
        }
        Ok(ConditionedEvolution { chain, dist: mu.iter().map(|v| v / total).collect(), log_survival: 0.0, step: 0 })
    }

    pub fn step(&mut self) -> Result<()> {
        let next = self.chain.q().left_mul(&self.dist);
        let mass: f64 = next.iter().sum();
        self.step += 1;
        if mass <= 0.0 {
            return Err(Error::Extinction(self.step));
        }
        self.log_survival += mass.ln();
        self.dist = next.into_iter().map(|v| v / mass).collect();
        Ok(())
    }

    pub fn distribution(&self) -> &[f64] {
        &self.dist
    }

    pub fn log_survival(&self) -> f64 {
        self.log_survival
    }

    pub fn steps(&self) -> usize {
        self.step
    }
}

/// `Σ |a − b|`.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Largest `c` with `P^y(X_n = x | alive) ≥ c ν(x)` for every start `y`.
/// Zero means `(ν, n_ν)` cannot certify anything.
pub fn minorization_constant(chain: &AbsorbingChain, nu: &[f64], n_nu: usize) -> Result<f64> {
    let n = chain.len();
    let mut best = f64::INFINITY;
    for y in 0..n {
        let mut delta = vec![0.0; n];
        delta[y] = 1.0;
        let dist = match conditioned_distribution(chain, &delta, n_nu) {
            Ok((d, _)) => d,
            Err(Error::Extinction(_)) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        for (x, &v) in nu.iter().enumerate() {
            if v > 0.0 {
                let got = if dist[x] < NEGLIGIBLE { 0.0 } else { dist[x] };
                best = best.min(got / v);
            }
        }
    }
    Ok(if best.is_finite() { best } else { 0.0 })
}

/// Survival comparison `P^ν(alive n) ≥ c P^y(alive n)`, checked up to a
/// horizon and in the `n → ∞` limit.
#[derive(Clone, Debug, Serialize)]
pub struct SurvivalComparison {
    pub finite_horizon: f64,
    pub asymptotic: f64,
    pub certified: f64,
    pub horizon: usize,
    /// The condition ranges over all `n`; it is checked only through the
    /// horizon and in the limit.
    pub horizon_caveat: bool,
}

pub fn survival_comparison_constant(
    chain: &AbsorbingChain,
    nu: &[f64],
    horizon: usize,
    qsd: &QsdResult,
) -> SurvivalComparison {
    let q = chain.q();
    let n = chain.len();
    // Survival vector s_t(y) = P^y(alive at t), rescaled each step; ratios
    // between entries are unaffected.
    let mut s = vec![1.0; n];
    let mut finite = f64::INFINITY;
    for t in 0..=horizon {
        if t > 0 {
            s = q.right_mul(&s);
            let scale = s.iter().copied().fold(0.0, f64::max);
            if scale <= 0.0 {
                break;
            }
            s.iter_mut().for_each(|v| *v /= scale);
        }
        let from_nu: f64 = nu.iter().zip(&s).map(|(a, b)| a * b).sum();
        for &sy in &s {
            if sy > 0.0 {
                finite = finite.min(from_nu / sy);
            }
        }
    }
    let nu_eta: f64 = nu.iter().zip(&qsd.eta).map(|(a, b)| a * b).sum();
    let asymptotic = qsd.eta.iter().filter(|&&e| e > 0.0).map(|&e| nu_eta / e).fold(f64::INFINITY, f64::min);
    SurvivalComparison {
        finite_horizon: finite,
        asymptotic,
        certified: finite.min(asymptotic),
        horizon,
        horizon_caveat: true,
    }
}

/// Constants of the quasi-stationary convergence statement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinorizationParams {
    pub n_nu: usize,
    pub c_nu: f64,
    pub c_nu_prime: f64,
    pub c_alpha: f64,
    pub c_dagger: f64,
    pub n_dagger: usize,
}

impl MinorizationParams {
    pub fn new(
        n_nu: usize,
        c_nu: f64,
        c_nu_prime: f64,
        c_alpha: f64,
        c_dagger: f64,
        n_dagger: usize,
    ) -> Result<MinorizationParams> {
        let unit = |v: f64, name: &'static str| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::ProbabilityOutOfRange(v, name))
            }
        };
        if n_nu == 0 {
            return Err(Error::Structure("n_nu must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&c_nu) {
            return Err(Error::ProbabilityOutOfRange(c_nu, "c_nu in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&c_nu_prime) {
            return Err(Error::ProbabilityOutOfRange(c_nu_prime, "c_nu' in [0, 1]"));
        }
        unit(c_alpha, "c_alpha in (0, 1]")?;
        unit(c_dagger, "c_dagger in (0, 1]")?;
        Ok(MinorizationParams { n_nu, c_nu, c_nu_prime, c_alpha, c_dagger, n_dagger })
    }

    pub fn contraction(&self) -> f64 {
        self.c_nu * self.c_nu_prime
    }
}

/// Outcome of checking the geometric convergence bound along a trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub holds: bool,
    /// Smallest `bound − distance` seen, with the factor 2 in the bound.
    pub worst_margin: f64,
    pub worst_step: usize,
    /// The same check with the factor 2 dropped.
    pub holds_factor_one: bool,
    pub worst_margin_factor_one: f64,
    pub horizon: usize,
}

/// Checks `‖P^μ(X_n ∈ · | alive) − α‖₁ ≤ 2 (1 − c_ν c_ν′)^{⌊n/n_ν⌋}` for
/// `n ≤ horizon`.
pub fn verify_convergence_bound(
    chain: &AbsorbingChain,
    params: &MinorizationParams,
    mu: &[f64],
    alpha: &[f64],
    horizon: usize,
) -> Result<ConvergenceReport> {
    let rate = 1.0 - params.contraction();
    let mut evolution = ConditionedEvolution::new(chain, mu)?;
    let mut worst = (f64::INFINITY, 0usize);
    let mut worst_one = f64::INFINITY;
    for n in 0..=horizon {
        if n > 0 {
            evolution.step()?;
        }
        let dist = l1_distance(evolution.distribution(), alpha);
        let decay = rate.powi((n / params.n_nu) as i32);
        let margin = 2.0 * decay - dist;
        if margin < worst.0 {
            worst = (margin, n);
        }
        worst_one = worst_one.min(decay - dist);
    }
    Ok(ConvergenceReport {
        holds: worst.0 >= -1e-12,
        worst_margin: worst.0,
        worst_step: worst.1,
        holds_factor_one: worst_one >= -1e-12,
        worst_margin_factor_one: worst_one,
        horizon,
    })
}

/// Step after which conditioned marginals decrease:
/// `max{n_†, n_ν ⌈ln((2 − c_†)/(c_† c_α)) / −ln(1 − c_ν c_ν′)⌉}`.
pub fn onset_bound(params: &MinorizationParams) -> Result<u64> {
    let c = params.contraction();
    if c <= 0.0 {
        return Err(Error::Unbounded);
    }
    let numerator = (2.0 - params.c_dagger).ln() - params.c_dagger.ln() - params.c_alpha.ln();
    let blocks = if c >= 1.0 { 0.0 } else { (numerator / -(-c).ln_1p()).ceil().max(0.0) };
    let steps = params.n_nu as f64 * blocks;
    if !steps.is_finite() || steps > u64::MAX as f64 {
        return Err(Error::Unbounded);
    }
    Ok((params.n_dagger as u64).max(steps as u64))
}

/// `p^{(k²+2)/2} (1−p)^{(k²+k)/2}`, the uniform lower bound on `n_k`-step
/// transition probabilities within the attainable patterns.
pub fn alpha_floor(k: usize, p: f64) -> f64 {
    let k = k as f64;
    p.powf((k * k + 2.0) / 2.0) * (1.0 - p).powf((k * k + k) / 2.0)
}

/// Every QSD entry is at least [`alpha_floor`].
pub fn qsd_floor_check(result: &QsdResult, k: usize, p: f64) -> bool {
    let floor = alpha_floor(k, p);
    result.alpha.iter().all(|&a| a >= floor - 1e-12)
}

/// Certificate block of the QSD JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub n_nu: usize,
    pub c_nu: f64,
    pub c_nu_prime: f64,
    pub c_alpha: f64,
    pub c_dagger: f64,
    pub n_dagger: usize,
    #[serde(rename = "N")]
    pub onset: u64,
}

impl Certificate {
    pub fn new(params: &MinorizationParams) -> Result<Certificate> {
        Ok(Certificate {
            n_nu: params.n_nu,
            c_nu: params.c_nu,
            c_nu_prime: params.c_nu_prime,
            c_alpha: params.c_alpha,
            c_dagger: params.c_dagger,
            n_dagger: params.n_dagger,
            onset: onset_bound(params)?,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QsdReport {
    pub lambda: f64,
    pub alpha: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub certificate: Certificate,
}

impl QsdReport {
    pub fn new(result: &QsdResult, params: &MinorizationParams) -> Result<QsdReport> {
        Ok(QsdReport {
            lambda: result.lambda,
            alpha: result.alpha.clone(),
            residual: result.residual_l1,
            iterations: result.iterations,
            certificate: Certificate::new(params)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(a: f64, b: f64) -> AbsorbingChain {
        AbsorbingChain::new(DenseMatrix::from_rows(&[vec![a, b], vec![b, a]]), vec!["0".into(), "1".into()]).unwrap()
    }

    fn params(
        n_nu: usize,
        c_nu: f64,
        c_nu_prime: f64,
        c_alpha: f64,
        c_dagger: f64,
        n_dagger: usize,
    ) -> MinorizationParams {
        MinorizationParams::new(n_nu, c_nu, c_nu_prime, c_alpha, c_dagger, n_dagger).unwrap()
    }

    #[test]
    fn symmetric_chain_has_uniform_qsd() {
        let chain = two_state(0.3, 0.2);
        let r = compute_qsd(&chain, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!((r.alpha[0] - 0.5).abs() < 1e-14);
        assert!((r.lambda - 0.5).abs() < 1e-14);
        assert!((r.eta[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_chains_are_rejected() {
        let bad = |rows: &[Vec<f64>]| AbsorbingChain::new(DenseMatrix::from_rows(rows), vec!["a".into(), "b".into()]);
        assert!(bad(&[vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
        assert!(bad(&[vec![0.5, 0.0], vec![0.0, 0.5]]).is_err());
        assert!(bad(&[vec![0.7, 0.5], vec![0.1, 0.5]]).is_err());
        assert!(bad(&[vec![-0.1, 0.5], vec![0.1, 0.5]]).is_err());
    }

    #[test]
    fn zero_steps_is_identity() {
        let chain = two_state(0.3, 0.2);
        let (d, ls) = conditioned_distribution(&chain, &[0.25, 0.75], 0).unwrap();
        assert_eq!(d, vec![0.25, 0.75]);
        assert_eq!(ls, 0.0);
    }

    #[test]
    fn rank_one_chain_minorizes_with_constant_one() {
        let chain = AbsorbingChain::new(
            DenseMatrix::from_rows(&[vec![0.2, 0.6], vec![0.2, 0.6]]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let c = minorization_constant(&chain, &[0.25, 0.75], 1).unwrap();
        assert!((c - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unreachable_target_gives_zero() {
        // Period-two chain: after one step the start state is never occupied.
        let chain = AbsorbingChain::new(
            DenseMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert_eq!(minorization_constant(&chain, &[1.0, 0.0], 1).unwrap(), 0.0);
    }

    #[test]
    fn onset_examples() {
        assert_eq!(onset_bound(&params(2, 0.5, 0.5, 0.1, 0.5, 0)).unwrap(), 24);
        assert_eq!(onset_bound(&params(1, 1.0, 1.0, 0.3, 0.3, 7)).unwrap(), 7);
        assert_eq!(onset_bound(&params(3, 0.5, 0.5, 1.0, 1.0, 0)).unwrap(), 0);
        assert!(matches!(onset_bound(&params(1, 0.0, 1.0, 0.5, 0.5, 0)), Err(Error::Unbounded)));
    }

    #[test]
    fn convergence_bound_at_start_and_from_alpha() {
        let chain = two_state(0.3, 0.2);
        let r = compute_qsd(&chain, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        let p = params(1, 0.5, 1.0, 0.5, 0.5, 0);
        let rep = verify_convergence_bound(&chain, &p, &[1.0, 0.0], &r.alpha, 0).unwrap();
        assert!(rep.holds);
        let rep = verify_convergence_bound(&chain, &p, &r.alpha, &r.alpha, 30).unwrap();
        assert!(rep.holds && rep.holds_factor_one);
    }
}
