//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failures listed in `KNOWN_DIVERGENCES` are reported but do not fail the
//! run; they are cases where the published claim does not hold for the
//! quantity as specified, and the README explains each one.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use num_traits::ToPrimitive;
use percmono::bounds::{
    n3, n_main, verify_appendix, verify_uniform_split, DEFAULT_APPENDIX_DENSITY, DEFAULT_SPLIT_POINTS,
};
use percmono::kernel::rational_from_f64;
use percmono::monotonicity::{PercolationModel, Start, Verdict, DEFAULT_ONSET_SEARCH};
use percmono::montecarlo::{estimate, estimate_many, Functional, SimConfig, DEFAULT_STRIP_WIDTH};
use percmono::qsd::{
    compute_qsd, qsd_floor_check, verify_convergence_bound, ConditionedEvolution, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
use percmono::saw::{census, escape_bound, p_prime, p_prime_oracle, small_counts, w0_bound_terms, CensusCaps};

const KNOWN_DIVERGENCES: &[&str] = &["7a"];
const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Line);

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| ((lo + step * i as f64) * 1e6).round() / 1e6).collect()
}

fn census_tables() -> Line {
    let full = census(CensusCaps::FULL, None);
    let pass =
        !full.truncated && full.a == common::A && full.b == common::B && full.c == common::C && full.d == common::D;
    Line {
        id: "1",
        pass,
        detail: format!("a22={:?} b21={:?} c21={:?} d20={:?}", full.a(22), full.b(21), full.c(21), full.d(20)),
    }
}

fn small_count_checks() -> Line {
    let (n, k) = small_counts();
    let head = n[1..=6] == [1, 2, 2, 2, 4, 8];
    let returns = k[..=3] == [4, 8, 6, 1];
    let tail = (7..=15).all(|l| n[l] <= escape_bound(l));
    Line {
        id: "2",
        pass: head && returns && tail,
        detail: format!("n1..n6={:?} k0..k3={:?} tail_ok={tail}", &n[1..=6], &k[..=3]),
    }
}

fn walk_bound() -> Line {
    let p = 0.35;
    let bound = match w0_bound_terms(p, &common::golden_census()) {
        Ok(b) => b,
        Err(e) => return Line { id: "3", pass: false, detail: e.to_string() },
    };
    let config = SimConfig {
        k: DEFAULT_STRIP_WIDTH,
        depth: 200,
        samples: 1_000_000,
        seed: SEED,
        ..SimConfig::new(DEFAULT_STRIP_WIDTH, p)
    };
    let mc = estimate(&config, Functional::HalfPlaneAxis).unwrap();
    let scaled = p * bound.total;
    let dominates = mc.mean - 3.0 * mc.std_error <= bound.total;
    Line {
        id: "3",
        pass: scaled <= 1.0 && dominates,
        detail: format!("0.35*bound={scaled:.15} bound={:.6} mc={:.6}±{:.6}", bound.total, mc.mean, mc.std_error),
    }
}

fn attainability() -> Line {
    let mut sizes = Vec::new();
    let mut pass = true;
    for k in 3..=6 {
        let model = PercolationModel::cycle(k).unwrap();
        let mut reached = model.attainable().to_vec();
        reached.sort_unstable();
        let mut noncrossing = model.space().noncrossing_star().unwrap();
        noncrossing.sort_unstable();
        pass &= reached == noncrossing;
        sizes.push(reached.len());
    }
    pass &= sizes[0] == 10;
    Line { id: "4", pass, detail: format!("|attainable| for k=3..6: {sizes:?}") }
}

fn qsd_exactness() -> Line {
    let mut worst_residual: f64 = 0.0;
    let mut worst_survival: f64 = 0.0;
    let mut floor_ok = true;
    for k in 3..=5 {
        let model = PercolationModel::cycle(k).unwrap();
        for p in grid(0.1, 0.9, 0.1) {
            let at = model.at(p).unwrap();
            let qsd = compute_qsd(at.chain(), DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
            worst_residual = worst_residual.max(qsd.residual_l1);
            floor_ok &= qsd_floor_check(&qsd, k, p);
            let mut evolution = ConditionedEvolution::new(at.chain(), &qsd.alpha).unwrap();
            for n in 1..=50 {
                evolution.step().unwrap();
                let gap = (evolution.log_survival() - n as f64 * qsd.lambda.ln()).abs();
                worst_survival = worst_survival.max(gap);
            }
        }
    }
    Line {
        id: "5",
        pass: worst_residual <= 1e-12 && floor_ok && worst_survival <= 1e-10,
        detail: format!(
            "max residual={worst_residual:.2e} floor_ok={floor_ok} max |log survival - n log λ|={worst_survival:.2e}"
        ),
    }
}

fn convergence_certificate() -> Line {
    let mut pass = true;
    let mut worst_margin = f64::INFINITY;
    let mut smallest_contraction = f64::INFINITY;
    for k in 3..=4 {
        let model = PercolationModel::cycle(k).unwrap();
        for p in grid(0.4, 0.9, 0.1) {
            let at = model.at(p).unwrap();
            let chain = at.chain();
            let (qsd, params) = at.measured_certificate(3, 200).unwrap();
            smallest_contraction = smallest_contraction.min(params.contraction());
            let mut starts: Vec<Vec<f64>> = (0..chain.len())
                .map(|y| {
                    let mut delta = vec![0.0; chain.len()];
                    delta[y] = 1.0;
                    delta
                })
                .collect();
            starts.push(at.initial_distribution().to_vec());
            for mu in &starts {
                let report = verify_convergence_bound(chain, &params, mu, &qsd.alpha, 200).unwrap();
                pass &= report.holds;
                worst_margin = worst_margin.min(report.worst_margin);
            }
        }
    }
    pass &= smallest_contraction > 0.0;
    Line { id: "6", pass, detail: format!("min c_nu*c_nu'={smallest_contraction:.3e} worst margin={worst_margin:.3e}") }
}

fn fixed_start_onset() -> Line {
    let limits = [(3, 2), (4, 4)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, limit) in limits {
        let model = PercolationModel::cycle(k).unwrap();
        let (mut fixed, mut marginal) = (0, 0);
        for p in grid(0.05, 0.95, 0.05) {
            let at = model.at(p).unwrap();
            let onset = at.empirical_onset(DEFAULT_ONSET_SEARCH).unwrap().onset;
            let from_law = at.marginal_onset(DEFAULT_ONSET_SEARCH).unwrap().onset;
            match onset {
                Some(n) => fixed = fixed.max(n),
                None => pass = false,
            }
            marginal = marginal.max(from_law.unwrap_or(usize::MAX));
            if onset.is_some_and(|n| n > limit) {
                pass = false;
            }
        }
        parts.push(format!("k={k}: fixed-start max {fixed} (limit {limit}), stationary-start max {marginal}"));
    }
    Line { id: "7a", pass, detail: parts.join("; ") }
}

fn large_n_onset() -> Line {
    let model = PercolationModel::cycle(3).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.45, 0.5, 0.55] {
        let n = n3(3, p).unwrap().ceil() as usize;
        let check = model.at(p).unwrap().check_monotone_at(n, None).unwrap();
        pass &= check.verdict == Verdict::Holds;
        parts.push(format!("p={p} n={n} {:?}", check.verdict));
    }
    Line { id: "7b", pass, detail: parts.join(", ") }
}

fn bound_calculus() -> Line {
    let split = verify_uniform_split(3..=200, DEFAULT_SPLIT_POINTS);
    let main = n_main(3);
    let appendix = verify_appendix(DEFAULT_APPENDIX_DENSITY);
    Line {
        id: "8",
        pass: split.passed() && main == Some(2_702_722) && appendix.passed(),
        detail: format!(
            "uniform split violations={} N_main(3)={main:?} appendix violations={}",
            split.violations(),
            appendix.violations()
        ),
    }
}

fn oracle_equivalences() -> Line {
    let model = PercolationModel::cycle(3).unwrap();
    let at = model.at(0.5).unwrap();
    let exact = model.exact_at(&rational_from_f64(0.5)).unwrap();
    let mut enumeration_gap: f64 = 0.0;
    let mut exact_equal = true;
    for (pos, &y) in model.attainable().iter().enumerate() {
        let y = model.space().pattern(y).clone();
        let mut mu = vec![num_rational::BigRational::from_integer(0.into()); model.attainable().len()];
        mu[pos] = num_rational::BigRational::from_integer(1.into());
        let evolved = exact.evolve(&mu, 2);
        for (x, prob) in common::brute_marginals(3, &y, 2, 0.5) {
            if !x.is_infected() {
                continue;
            }
            let got = at.marginal(&Start::Pattern(y.clone()), &x, 2).unwrap();
            enumeration_gap = enumeration_gap.max((got - prob).abs());
            let idx = model.attainable_position(&x).unwrap().unwrap();
            exact_equal &= evolved[idx].to_f64() == Some(prob);
        }
    }
    let mut path_gap: f64 = 0.0;
    for l in 3..=5 {
        for p in [0.05, 0.1, 0.2, 0.35, 0.45] {
            let oracle = p_prime_oracle(l, p).unwrap().value;
            path_gap = path_gap.max((oracle - p_prime(l, p).unwrap()).abs());
        }
    }
    let mut eigen_gap: f64 = 0.0;
    for k in 3..=5 {
        let model = PercolationModel::cycle(k).unwrap();
        for p in grid(0.1, 0.9, 0.1) {
            let at = model.at(p).unwrap();
            let (lambda, alpha) = common::dense_qsd(at.chain());
            let qsd = compute_qsd(at.chain(), DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
            eigen_gap = eigen_gap.max((lambda - qsd.lambda).abs());
            for (a, b) in alpha.iter().zip(&qsd.alpha) {
                eigen_gap = eigen_gap.max((a - b).abs());
            }
        }
    }
    Line {
        id: "9",
        pass: enumeration_gap <= 1e-12 && exact_equal && path_gap <= 1e-12 && eigen_gap <= 1e-10,
        detail: format!(
            "enumeration gap={enumeration_gap:.1e} exact_equal={exact_equal} path gap={path_gap:.1e} eigen gap={eigen_gap:.1e}"
        ),
    }
}

/// Standard error floor from the exact value: a rare event can have no hits
/// and a zero sample deviation.
fn within(exact: f64, mean: f64, std_error: f64, samples: u64, scale: f64) -> Option<f64> {
    let bernoulli = (exact.clamp(0.0, 1.0) * (1.0 - exact.clamp(0.0, 1.0)) / samples as f64).sqrt();
    let sigma = std_error.max(bernoulli);
    let z = if sigma > 0.0 {
        (mean - exact).abs() / sigma
    } else if mean == exact {
        0.0
    } else {
        f64::INFINITY
    };
    (z <= scale).then_some(z)
}

fn monte_carlo() -> Line {
    let k = 3;
    let model = PercolationModel::cycle(k).unwrap();
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    for p in [0.2, 0.5, 0.8] {
        let at = model.at(p).unwrap();
        let curve = at.curve(&Start::StationaryInitial, 5).unwrap();
        let mut functionals = Vec::new();
        let mut exact = Vec::new();
        for n in 0..=5 {
            let law = curve.unconditional(n);
            for (pos, &x) in model.attainable().iter().enumerate() {
                functionals.push(Functional::Marginal { pattern: model.space().pattern(x).clone(), n });
                exact.push(law[pos]);
            }
            for v in 0..k {
                functionals.push(Functional::Connection { v, n });
                exact.push(at.connection_from(&curve, v, n));
            }
            functionals.push(Functional::Infected { n });
            exact.push(at.expected_from(&curve, n));
        }
        let config = SimConfig { samples: 100_000, horizon: 5, seed: SEED, ..SimConfig::new(k, p) };
        let estimates = estimate_many(&config, &functionals).unwrap();
        for (est, value) in estimates.iter().zip(&exact) {
            checked += 1;
            match within(*value, est.mean, est.std_error, est.samples, 4.0) {
                Some(z) => worst_z = worst_z.max(z),
                None => failures
                    .push(format!("p={p} {:?}: exact {value} mc {}±{}", est.functional, est.mean, est.std_error)),
            }
        }
    }
    let mut detail = format!("{checked} quantities, worst |z|={worst_z:.2}");
    if !failures.is_empty() {
        detail.push_str(&format!(", {} outside 4σ: {}", failures.len(), failures.join("; ")));
    }
    Line { id: "10", pass: failures.is_empty(), detail }
}

fn expectation_decreasing() -> Line {
    let mut pass = true;
    let mut failures = Vec::new();
    for k in 3..=5 {
        let model = PercolationModel::cycle(k).unwrap();
        for p in grid(0.05, 0.35, 0.05) {
            let at = model.at(p).unwrap();
            let curve = at.curve(&Start::StationaryInitial, 50).unwrap();
            let restricted: Vec<f64> = (0..=50).map(|n| at.expected_from(&curve, n)).collect();
            let full: Vec<f64> = (0..=50).map(|n| at.expected_full_from(&curve, n)).collect();
            for (name, series) in [("restricted", &restricted), ("full", &full)] {
                if let Some(n) = series.windows(2).position(|w| w[1] > w[0] * (1.0 + 1e-12)) {
                    pass = false;
                    failures.push(format!("k={k} p={p} {name} rises at n={n}"));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        "E(W_n) non-increasing for n<=50, both connection notions".to_string()
    } else {
        failures.join("; ")
    };
    Line { id: "11", pass, detail }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("SAW golden tables", census_tables),
        ("small-count checks", small_count_checks),
        ("half-plane bound at p=0.35", walk_bound),
        ("attainable = noncrossing", attainability),
        ("QSD exactness", qsd_exactness),
        ("convergence certificate", convergence_certificate),
        ("fixed-start onset <= 2 (k=3), <= 4 (k=4)", fixed_start_onset),
        ("monotone at ceil(N3) for k=3", large_n_onset),
        ("bound calculus", bound_calculus),
        ("oracle equivalences", oracle_equivalences),
        ("Monte Carlo cross-validation", monte_carlo),
        ("E(W_n) non-increasing", expectation_decreasing),
    ];
    let mut unexpected = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let line = check();
        let status = if line.pass { "PASS" } else { "FAIL" };
        let known = !line.pass && KNOWN_DIVERGENCES.contains(&line.id);
        if !line.pass && !known {
            unexpected += 1;
        }
        println!(
            "[{status}] {:>3} {name}: {}{} ({:.1}s)",
            line.id,
            line.detail,
            if known { " [known divergence]" } else { "" },
            start.elapsed().as_secs_f64()
        );
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
