//! Closed-form onset bounds and the elementary inequalities behind them.
//!
//! Everything that can overflow (`1.95^k`, `c^{k-2}`, `p^{k²}`) is evaluated
//! as a logarithm first; direct values are exponentiated only at the end.

use std::collections::BTreeMap;
use std::f64::consts::E;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pattern::{Graph, Pattern};
use crate::qsd::{alpha_floor, MinorizationParams};

/// Largest `k` for which [`n_main`] still reports an integer.
pub const N_MAIN_CAP: usize = 400;

/// Grid points per subinterval in [`verify_uniform_split`].
pub const DEFAULT_SPLIT_POINTS: usize = 1_000;

/// Grid points per `p`-range in [`verify_appendix`].
pub const DEFAULT_APPENDIX_DENSITY: usize = 10_000;

fn open_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p, "(0, 1)"))
    }
}

pub fn c1(p: f64) -> f64 {
    let q = 1.0 - p;
    p + q * p.powi(3) + 3.0 * q * q * p.powi(5) + 9.0 * q.powi(3) * p.powi(7)
}

/// Infinite for `p ≥ 1/3`.
pub fn c2(p: f64) -> f64 {
    if p >= 1.0 / 3.0 {
        return f64::INFINITY;
    }
    p + 2.0 * p * p
        + 2.0 * p.powi(3)
        + 2.0 * p.powi(4)
        + 4.0 * p.powi(5)
        + 8.0 * p.powi(6)
        + 64.0 * p.powi(7) / (1.0 - 3.0 * p)
}

pub fn c3(p: f64) -> f64 {
    1.0 / ((1.0 / (p * p) + E * E / 4.0).sqrt() - E / 2.0)
}

/// `s_k = k²(1 + 2/ln k)`.
pub fn s_k(k: usize) -> f64 {
    let k = k as f64;
    k * k * (1.0 + 2.0 / k.ln())
}

/// `(1 − p)/(1 − p(1 − p))`.
fn escape_ratio(p: f64) -> f64 {
    (1.0 - p) / (1.0 - p * (1.0 - p))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundConstants {
    pub k: usize,
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `k / (2e c₃(p))`.
    pub m: f64,
    /// `max(1, ⌈m⌉)`.
    pub m_prime: u64,
    pub s_k: f64,
    pub n_k: usize,
}

pub fn constants(k: usize, p: f64) -> Result<BoundConstants> {
    open_unit(p)?;
    let c3 = c3(p);
    let m = k as f64 / (2.0 * E * c3);
    Ok(BoundConstants {
        k,
        p,
        c1: c1(p),
        c2: c2(p),
        c3,
        m,
        m_prime: (m.ceil() as u64).max(1),
        s_k: s_k(k),
        n_k: crate::pattern::n_k(k),
    })
}

/// `ln(500 k⁶ 1.95^k)`.
pub fn n_main_ln(k: usize) -> f64 {
    let k = k as f64;
    500f64.ln() + 6.0 * k.ln() + k * 1.95f64.ln()
}

/// `⌈500 k⁶ 1.95^k⌉`, or `None` past [`N_MAIN_CAP`] where only
/// [`n_main_ln`] is reported.
pub fn n_main(k: usize) -> Option<u64> {
    if k > N_MAIN_CAP {
        return None;
    }
    let direct = 500.0 * (k as f64).powi(6) * 1.95f64.powi(k as i32);
    (direct < u64::MAX as f64).then(|| direct.ceil() as u64)
}

/// The looser `500 k⁶ 2^k` form, as a logarithm.
pub fn n_main_base_two_ln(k: usize) -> f64 {
    let k = k as f64;
    500f64.ln() + 6.0 * k.ln() + k * 2f64.ln()
}

/// `N₀(k) = 3 k² (1 + 2/ln k)`, valid for `p ≤ 1/s_k`.
pub fn n0(k: usize) -> f64 {
    3.0 * s_k(k)
}

fn ln_common(p: f64) -> f64 {
    (-(p * (1.0 - p)).ln()).ln()
}

/// `ln N₁(k, p)`; `+∞` for `p ≥ 1/3`.
pub fn n1_ln(k: usize, p: f64) -> Result<f64> {
    open_unit(p)?;
    if p >= 1.0 / 3.0 {
        return Ok(f64::INFINITY);
    }
    let c = constants(k, p)?;
    let kf = k as f64;
    Ok(ln_common(p) + (c.m + 5.0).ln() + (kf * kf + 1.5 * kf + 2.0).ln() + 2.5 * kf.ln() + (c.m + 4.0) * c.c2.ln()
        - (c.m + 4.0) * p.ln()
        - kf / 2.0 * escape_ratio(p).ln()
        - (1.0 - p).ln()
        - (kf - 2.0) * c1(1.0 - p).ln())
}

/// `ln N₂(k, p)`, valid for `p ≤ 1/2`.
pub fn n2_ln(k: usize, p: f64) -> Result<f64> {
    open_unit(p)?;
    if p > 0.5 {
        return Err(Error::ProbabilityOutOfRange(p, "(0, 1/2]"));
    }
    let c = constants(k, p)?;
    let kf = k as f64;
    Ok(ln_common(p) + (c.m + 5.0).ln() + (kf * kf + 1.5 * kf + 2.0).ln() + 1.5 * kf.ln()
        - (c.m + 5.0) * p.ln()
        - (c.m + 1.0) * escape_ratio(p).ln()
        - (1.0 - p).ln()
        - (kf - 2.0) * c1(1.0 - p).ln())
}

/// `ln N₃(k, p)`.
pub fn n3_ln(k: usize, p: f64) -> Result<f64> {
    open_unit(p)?;
    let kf = k as f64;
    Ok(ln_common(p) + (1.5 * (kf * kf + 3.0 * kf + 3.0)).ln() - 4.0 * p.ln() - (kf - 2.0) * c1(p).ln())
}

/// `N₄(k, p) = (k² + 4k) ln(1 − p) / (2 ln(2k(1 − p)))`, valid for
/// `p > 1 − 1/(2k)`.
pub fn n4(k: usize, p: f64) -> Result<f64> {
    open_unit(p)?;
    let kf = k as f64;
    if p <= 1.0 - 1.0 / (2.0 * kf) {
        return Err(Error::ProbabilityOutOfRange(p, "(1 - 1/(2k), 1)"));
    }
    Ok((kf * kf + 4.0 * kf) * (1.0 - p).ln() / (2.0 * (2.0 * kf * (1.0 - p)).ln()))
}

pub fn n1(k: usize, p: f64) -> Result<f64> {
    n1_ln(k, p).map(f64::exp)
}

pub fn n2(k: usize, p: f64) -> Result<f64> {
    n2_ln(k, p).map(f64::exp)
}

pub fn n3(k: usize, p: f64) -> Result<f64> {
    n3_ln(k, p).map(f64::exp)
}

/// All onset bounds at one `(k, p)`; `None` where a formula does not apply.
#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub k: usize,
    pub p: f64,
    pub n0: Option<f64>,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub n3: f64,
    pub n4: Option<f64>,
    pub n_main: Option<u64>,
    pub applicable_min: f64,
}

impl BoundRow {
    pub fn new(k: usize, p: f64) -> Result<BoundRow> {
        open_unit(p)?;
        let n0 = (p <= 1.0 / s_k(k)).then(|| n0(k));
        let n1 = (p < 1.0 / 3.0).then(|| n1(k, p)).transpose()?;
        let n2 = (p <= 0.5).then(|| n2(k, p)).transpose()?;
        let n3 = n3(k, p)?;
        let n4 = (p > 1.0 - 1.0 / (2.0 * k as f64)).then(|| n4(k, p)).transpose()?;
        let n_main = n_main(k);
        let applicable_min =
            [n0, n1, n2, Some(n3), n4, n_main.map(|n| n as f64)].into_iter().flatten().fold(f64::INFINITY, f64::min);
        Ok(BoundRow { k, p, n0, n1, n2, n3, n4, n_main, applicable_min })
    }

    pub const CSV_HEADER: &'static str = "k,p,N0,N1,N2,N3,N4,N_main,applicable_min";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        format!(
            "{},{},{},{},{},{:e},{},{},{:e}",
            self.k,
            self.p,
            opt(self.n0),
            opt(self.n1),
            opt(self.n2),
            self.n3,
            opt(self.n4),
            self.n_main.map_or(String::new(), |n| n.to_string()),
            self.applicable_min
        )
    }
}

/// The three choices of `(ν, n_ν)` for intermediate `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// Random-infection `ν_p`, survival bounded through `c₂` (`p < 1/3`).
    A,
    /// Random-infection `ν_p`, survival bounded by 1 (`p ≤ 1/2`).
    B,
    /// `ν = δ_{x_*}` with `n_ν = 3`.
    C,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "a" | "A" => Ok(Variant::A),
            "b" | "B" => Ok(Variant::B),
            "c" | "C" => Ok(Variant::C),
            _ => Err(Error::Parse { pos: 0, msg: format!("unknown variant {s:?}") }),
        }
    }
}

/// Formula-derived minorization constants for a variant.
pub fn intermediate_params(k: usize, p: f64, variant: Variant) -> Result<MinorizationParams> {
    open_unit(p)?;
    let kf = k as f64;
    let c_alpha = alpha_floor(k, p);
    let c_dagger = (1.0 - p).powi(k as i32);
    match variant {
        Variant::C => {
            let c_nu = p.powi(4) * c1(p).powi(k as i32 - 2);
            MinorizationParams::new(3, c_nu, 1.0, c_alpha, c_dagger, 0)
        }
        Variant::A | Variant::B => {
            if variant == Variant::A && p >= 1.0 / 3.0 {
                return Err(Error::ProbabilityOutOfRange(p, "(0, 1/3)"));
            }
            if p > 0.5 {
                return Err(Error::ProbabilityOutOfRange(p, "(0, 1/2]"));
            }
            let c = constants(k, p)?;
            let mp = c.m_prime as f64;
            let ln_num = (mp + 4.0) * p.ln()
                + mp.min(kf / 2.0) * escape_ratio(p).ln()
                + (1.0 - p).ln()
                + (kf - 2.0) * c1(1.0 - p).ln();
            let ln_survival = (kf * p).ln() + (mp + 3.0) * c.c2.ln();
            let ln_den = (2.0 * kf.sqrt()).ln() + ln_survival.min(0.0);
            let c_nu = (ln_num - ln_den).exp();
            MinorizationParams::new(c.m_prime as usize + 4, c_nu, 1.0 / kf, c_alpha, c_dagger, 0)
        }
    }
}

/// Law of the pattern obtained by opening each edge of one cycle layer with
/// probability `p` and attaching the marker to the block of a uniform vertex.
pub fn nu_p_distribution(k: usize, p: f64) -> Result<Vec<(Pattern, f64)>> {
    open_unit(p)?;
    let graph = Graph::cycle(k)?;
    let mut law: BTreeMap<Pattern, f64> = BTreeMap::new();
    for mask in 0u64..1 << k {
        let open = mask.count_ones() as i32;
        let weight = p.powi(open) * (1.0 - p).powi(k as i32 - open);
        let mut labels: Vec<usize> = (0..k).collect();
        for _ in 0..k {
            for (e, &(a, b)) in graph.edges().iter().enumerate() {
                if mask >> e & 1 == 1 {
                    let m = labels[a].min(labels[b]);
                    labels[a] = m;
                    labels[b] = m;
                }
            }
        }
        for u in 0..k {
            let mut raw = labels.clone();
            raw.push(labels[u]);
            *law.entry(Pattern::from_labels(&raw)).or_insert(0.0) += weight / k as f64;
        }
    }
    Ok(law.into_iter().collect())
}

/// Worst case of one grid-checked inequality.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub points: usize,
    pub violations: usize,
    /// Smallest margin seen (nonnegative when the inequality holds).
    pub worst_margin: f64,
    pub worst_at: String,
}

impl CheckResult {
    fn new(name: impl Into<String>) -> CheckResult {
        CheckResult {
            name: name.into(),
            points: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst_at: String::new(),
        }
    }

    fn record(&mut self, margin: f64, at: impl FnOnce() -> String) {
        self.points += 1;
        if margin < 0.0 || margin.is_nan() {
            self.violations += 1;
        }
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
            self.worst_at = at();
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

/// `points` values spanning `[lo, hi]` (or `[lo, hi)` if `open_hi`),
/// endpoints included.
fn grid(lo: f64, hi: f64, points: usize, open_hi: bool) -> Vec<f64> {
    let points = points.max(2);
    let steps = if open_hi { points } else { points - 1 };
    (0..points).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
}

/// Checks, for every `k` in the range and a grid of `points` values of `p`
/// in each of the seven subintervals of `(0, 1)`, that the applicable onset
/// bound is dominated by its polynomial-exponential envelope and that every
/// envelope lies below `N(k)`. Margins are differences of logarithms.
pub fn verify_uniform_split(ks: impl IntoIterator<Item = usize>, points: usize) -> VerificationReport {
    let names = [
        "N0 <= 9k^2 on (0, 1/(3k^2)]",
        "N1 <= 15k^8 1.53^k on [1/(3k^2), 0.1]",
        "N1 <= 526k^(11/2) 1.95^k on [0.1, 0.315]",
        "N2 <= 2119k^(9/2) 1.95^k on [0.315, 4/9]",
        "N3 <= 209k^2 1.95^k on [4/9, 2/3]",
        "N3 <= 16k^(5/2) 1.5^k on [2/3, 1 - 1/k^2]",
        "N4 <= 7k^2 on [1 - 1/k^2, 1)",
        "each envelope <= N(k)",
    ];
    let mut checks: Vec<CheckResult> = names.iter().map(|n| CheckResult::new(*n)).collect();
    for k in ks {
        let kf = k as f64;
        let lk = kf.ln();
        let envelopes = [
            (9.0 * kf * kf).ln(),
            15f64.ln() + 8.0 * lk + kf * 1.53f64.ln(),
            526f64.ln() + 5.5 * lk + kf * 1.95f64.ln(),
            2119f64.ln() + 4.5 * lk + kf * 1.95f64.ln(),
            209f64.ln() + 2.0 * lk + kf * 1.95f64.ln(),
            16f64.ln() + 2.5 * lk + kf * 1.5f64.ln(),
            (7.0 * kf * kf).ln(),
        ];
        let cuts = [1.0 / (3.0 * kf * kf), 0.1, 0.315, 4.0 / 9.0, 2.0 / 3.0, 1.0 - 1.0 / (kf * kf)];
        checks[0].record(envelopes[0] - n0(k).ln(), || format!("k={k}"));
        let main = n_main_ln(k);
        for (i, env) in envelopes.iter().enumerate() {
            checks[7].record(main - env, || format!("k={k}, envelope {}", i + 1));
        }
        let intervals: [(f64, f64, bool); 6] = [
            (cuts[0], cuts[1], false),
            (cuts[1], cuts[2], false),
            (cuts[2], cuts[3], false),
            (cuts[3], cuts[4], false),
            (cuts[4], cuts[5], false),
            (cuts[5], 1.0, true),
        ];
        for (slot, &(lo, hi, open)) in intervals.iter().enumerate() {
            let check = slot + 1;
            for p in grid(lo, hi, points, open) {
                let value = match check {
                    1 | 2 => n1_ln(k, p),
                    3 => n2_ln(k, p),
                    4 | 5 => n3_ln(k, p),
                    _ => n4(k, p).map(f64::ln),
                };
                let margin = value.map_or(f64::NAN, |v| envelopes[check] - v);
                checks[check].record(margin, || format!("k={k}, p={p}"));
            }
        }
    }
    VerificationReport { checks }
}

/// Grid checks of the auxiliary inequalities used by the bounds, plus the
/// monotonicity facts relied on when maximizing over `p`.
pub fn verify_appendix(density: usize) -> VerificationReport {
    let density = density.max(10);
    let mut checks = Vec::new();
    let open_grid = |lo: f64, hi: f64| -> Vec<f64> {
        (1..=density).map(|i| lo + (hi - lo) * i as f64 / (density + 1) as f64).collect()
    };

    let mut a1 = CheckResult::new("(p+(1-p)p^3+2(1-p)^2p^5)^4 >= p c1(p)^3");
    for p in open_grid(0.0, 1.0) {
        let q = 1.0 - p;
        let lhs = 4.0 * (p + q * p.powi(3) + 2.0 * q * q * p.powi(5)).ln();
        let rhs = p.ln() + 3.0 * c1(p).ln();
        a1.record(lhs - rhs + 1e-12, || format!("p={p}"));
    }
    checks.push(a1);

    let mut a2 = CheckResult::new("(1+1/a)^(a+1/2) > e");
    for i in 0..density {
        let a = 10f64.powf(-2.0 + 4.0 * i as f64 / (density - 1) as f64);
        a2.record((a + 0.5) * (1.0 / a).ln_1p() - 1.0, || format!("a={a}"));
    }
    checks.push(a2);

    let mut a3a = CheckResult::new("s_k >= 25k/3 >= 25");
    let mut a3b = CheckResult::new("f(k) >= 0");
    for k in 3..=1000usize {
        let kf = k as f64;
        let s = s_k(k);
        a3a.record((s - 25.0 * kf / 3.0).min(25.0 * kf / 3.0 - 25.0), || format!("k={k}"));
        let f = (s - (kf * kf - kf + 9.0) / 2.0) * s.ln() - (s - 2.0) * (E * kf).ln()
            + (kf * kf + kf) / 2.0 * (-1.0 / s).ln_1p();
        a3b.record(f, || format!("k={k}"));
    }
    checks.push(a3a);
    checks.push(a3b);

    let mut a4a = CheckResult::new("(1-p^(2k))/(p(1-p)) <= 2k for p >= 1-1/(2k)");
    let mut a4b = CheckResult::new("p^(k^2-k+1) >= (1-p)^k for p >= 1-1/(2k)");
    for k in 3..=100usize {
        let kf = k as f64;
        let lo = 1.0 - 1.0 / (2.0 * kf);
        for p in grid(lo, 1.0, density / 10, true) {
            // 1/p + 1 + p + … + p^{2k-2}, avoiding the cancellation in 1 − p^{2k}.
            let f = 1.0 / p + (0..=2 * k - 2).map(|i| p.powi(i as i32)).sum::<f64>();
            a4a.record(2.0 * kf - f + 1e-12, || format!("k={k}, p={p}"));
            let lhs = (kf * kf - kf + 1.0) * p.ln();
            let rhs = kf * (1.0 - p).ln();
            a4b.record(lhs - rhs, || format!("k={k}, p={p}"));
        }
    }
    checks.push(a4a);
    checks.push(a4b);

    checks.extend(monotonicity_checks(density));
    checks.extend(binomial_checks(200));
    VerificationReport { checks }
}

fn monotonicity_checks(density: usize) -> Vec<CheckResult> {
    let tol = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
    let mut out = Vec::new();
    let mut run = |name: &str, lo: f64, hi: f64, f: &dyn Fn(f64) -> f64, positive_floor: f64, increasing: bool| {
        let mut c = CheckResult::new(name);
        let pts: Vec<f64> = (1..=density).map(|i| lo + (hi - lo) * i as f64 / (density + 1) as f64).collect();
        let vals: Vec<f64> = pts.iter().map(|&p| f(p)).collect();
        for (i, (&p, &v)) in pts.iter().zip(&vals).enumerate() {
            let mut margin = v - positive_floor;
            if i > 0 {
                let prev = vals[i - 1];
                let step = if increasing { v - prev } else { prev - v };
                margin = margin.min(step + tol(v, prev));
            }
            c.record(margin, || format!("p={p}"));
        }
        out.push(c);
    };
    let a = |p: f64| -(p * (1.0 - p)).ln();
    run("-ln(p(1-p)) > 0, decreasing on (0,1/2]", 0.0, 0.5, &a, 0.0, false);
    run("-ln(p(1-p)) > 0, increasing on [1/2,1)", 0.5, 1.0, &a, 0.0, true);
    run("(1-p(1-p))/(1-p) > 1, increasing", 0.0, 1.0, &|p| (1.0 - p * (1.0 - p)) / (1.0 - p), 1.0, true);
    run("c1(p)/p > 0, increasing on (0,2/3]", 0.0, 2.0 / 3.0, &|p| c1(p) / p, 0.0, true);
    run("c1(p)/p > 0, decreasing on [2/3,1)", 2.0 / 3.0, 1.0, &|p| c1(p) / p, 0.0, false);
    run("c2(p)/p > 0, increasing on (0,1/3)", 0.0, 1.0 / 3.0, &|p| c2(p) / p, 0.0, true);
    run("(c2(p)-p)/p^2 > 0, increasing on (0,1/3)", 0.0, 1.0 / 3.0, &|p| (c2(p) - p) / (p * p), 0.0, true);
    let mut c3_above = CheckResult::new("c3(p) > p, increasing");
    let pts: Vec<f64> = (1..=density).map(|i| i as f64 / (density + 1) as f64).collect();
    for (i, &p) in pts.iter().enumerate() {
        let mut margin = c3(p) - p;
        if i > 0 {
            margin = margin.min(c3(p) - c3(pts[i - 1]));
        }
        c3_above.record(margin, || format!("p={p}"));
    }
    out.push(c3_above);
    out
}

/// Binomial lower bound in both stated prefactor forms, with exact
/// binomial coefficients.
fn binomial_checks(max: u64) -> Vec<CheckResult> {
    let mut general = CheckResult::new("C(m+d,d) >= (1/sqrt 8) sqrt(1/d+1/m) (e sqrt(a^2+a))^d");
    let mut simple = CheckResult::new("C(m+d,d) >= (1/sqrt(8d)) (e sqrt(a^2+a))^d");
    for m in 1..=max {
        let mut binom = BigUint::one();
        for d in 1..=max {
            // C(m+d, d) = C(m+d-1, d-1) (m+d)/d
            binom = binom * BigUint::from(m + d) / BigUint::from(d);
            let ln_binom = ln_biguint(&binom);
            let (mf, df) = (m as f64, d as f64);
            let a = mf / df;
            let ln_power = df * (1.0 + 0.5 * (a * a + a).ln());
            let ln_general = -0.5 * 8f64.ln() + 0.5 * (1.0 / df + 1.0 / mf).ln() + ln_power;
            let ln_simple = -0.5 * (8.0 * df).ln() + ln_power;
            general.record(ln_binom - ln_general, || format!("m={m}, d={d}"));
            simple.record(ln_binom - ln_simple, || format!("m={m}, d={d}"));
        }
    }
    vec![general, simple]
}

fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * 2f64.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_near_zero_behave_like_p() {
        let p = 1e-6;
        for c in [c1(p), c2(p), c3(p)] {
            assert!((1.0..=1.0001).contains(&(c / p)), "{}", c / p);
        }
        assert!(c2(0.34).is_infinite());
        assert!(c2(0.3).is_finite());
    }

    #[test]
    fn main_bound_at_three() {
        assert_eq!(n_main(3), Some(2_702_722));
        assert!(n_main(401).is_none());
        for k in 3..50 {
            let ratio = n_main_ln(k + 1) - n_main_ln(k);
            let expected = 1.95f64.ln() + 6.0 * ((k + 1) as f64 / k as f64).ln();
            assert!((ratio - expected).abs() < 1e-9);
        }
        assert!(n_main_base_two_ln(10) > n_main_ln(10));
    }

    #[test]
    fn n3_matches_direct_evaluation() {
        let direct = -(0.25f64).ln() * 1.5 * 21.0 / (0.5f64.powi(4) * c1(0.5));
        assert!((n3(3, 0.5).unwrap() - direct).abs() < 1e-9 * direct);
        assert_eq!(c1(0.5), 0.5947265625);
    }

    #[test]
    fn formula_ranges() {
        assert!(n1(3, 0.34).unwrap().is_infinite());
        assert!(n1(3, 0.2).unwrap().is_finite());
        assert!(n2(3, 0.6).is_err());
        assert!(n4(3, 0.8).is_err());
        assert!(n4(3, 0.9).unwrap() >= 2.0);
        assert!(matches!(constants(3, 1.0), Err(Error::ProbabilityOutOfRange(..))));
    }

    #[test]
    fn m_prime_is_at_least_one() {
        assert_eq!(constants(3, 0.99).unwrap().m_prime, 1);
        let c = constants(20, 0.4).unwrap();
        assert_eq!(c.m_prime, c.m.ceil() as u64);
    }

    #[test]
    fn variant_c_params() {
        let params = intermediate_params(3, 0.5, Variant::C).unwrap();
        assert_eq!(params.n_nu, 3);
        assert_eq!(params.c_nu, 0.0625 * c1(0.5));
        assert_eq!(params.c_dagger, 0.125);
        assert!(intermediate_params(3, 0.4, Variant::A).is_err());
        assert!(intermediate_params(3, 0.6, Variant::B).is_err());
    }

    #[test]
    fn nu_p_small_cycle() {
        let law = nu_p_distribution(3, 0.5).unwrap();
        let total: f64 = law.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
        let all = law.iter().find(|e| e.0 == Pattern::all_infected(3)).unwrap();
        assert_eq!(all.1, 0.5);
    }

    #[test]
    fn appendix_spot_values() {
        assert!(2f64.powf(1.5) > E);
        let p: f64 = 1.0 - 1.0 / 6.0;
        assert!(f64::powi(p, 7) >= f64::powi(1.0 - p, 3));
    }

    #[test]
    fn grid_includes_endpoints() {
        let g = grid(0.1, 0.315, 5, false);
        assert_eq!(g.first(), Some(&0.1));
        assert!((g.last().unwrap() - 0.315).abs() < 1e-15);
        assert!(grid(0.9, 1.0, 5, true).iter().all(|&p| p < 1.0));
    }

    #[test]
    fn csv_row_shape() {
        let row = BoundRow::new(3, 0.5).unwrap();
        assert_eq!(row.to_csv().split(',').count(), 9);
        assert!(row.n1.is_none() && row.n4.is_none());
        assert_eq!(row.applicable_min, row.n3.min(row.n2.unwrap()));
    }
}
