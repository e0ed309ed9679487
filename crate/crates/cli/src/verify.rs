//! `verify-all`: every library-level check in one report.

use std::fmt::Write as _;
use std::time::Instant;

use percmono::bounds::{
    n3, n_main, verify_appendix, verify_uniform_split, DEFAULT_APPENDIX_DENSITY, DEFAULT_SPLIT_POINTS,
};
use percmono::monotonicity::{PercolationModel, Start, Verdict};
use percmono::montecarlo::{estimate, estimate_many, Functional, SimConfig, DEFAULT_STRIP_WIDTH};
use percmono::qsd::{
    compute_qsd, qsd_floor_check, verify_convergence_bound, ConditionedEvolution, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
use percmono::saw::{
    c2_consistency, census, escape_bound, p_prime, p_prime_oracle, small_counts, verify_recursions, w0_bound,
    CensusCaps, WalkCensus,
};
use serde::Serialize;

use crate::output::{json, Format, Outcome};
use crate::{usage, VerifyArgs};

/// Checks whose failure reflects a published claim that does not hold as
/// stated; they are reported but do not change the exit code.
const KNOWN_DIVERGENCES: &[&str] = &["fixed-start-onset"];

#[derive(Serialize)]
struct CheckLine {
    id: &'static str,
    passed: bool,
    known_divergence: bool,
    detail: String,
    seconds: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    deep: bool,
    seed: u64,
    checks: Vec<CheckLine>,
    passed: bool,
}

struct Settings {
    deep: bool,
    seed: u64,
}

impl Settings {
    fn census_caps(&self) -> CensusCaps {
        if self.deep {
            CensusCaps::FULL
        } else {
            CensusCaps::QUICK
        }
    }
    fn bound_k_max(&self) -> usize {
        if self.deep {
            200
        } else {
            100
        }
    }
    fn appendix_density(&self) -> usize {
        if self.deep {
            DEFAULT_APPENDIX_DENSITY
        } else {
            DEFAULT_APPENDIX_DENSITY / 10
        }
    }
    fn mc_samples(&self) -> u64 {
        if self.deep {
            100_000
        } else {
            20_000
        }
    }
    fn axis_samples(&self) -> u64 {
        if self.deep {
            1_000_000
        } else {
            100_000
        }
    }
}

type Check = fn(&Settings) -> anyhow::Result<(bool, String)>;

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| ((lo + step * i as f64) * 1e6).round() / 1e6).collect()
}

fn walk_tables(s: &Settings) -> anyhow::Result<(bool, String)> {
    let counted = census(s.census_caps(), None);
    let reference = WalkCensus::reference();
    let prefix = |got: &[u64], want: &[u64]| got.len() <= want.len() && want[..got.len()] == *got;
    let tables = prefix(&counted.a, &reference.a)
        && prefix(&counted.b, &reference.b)
        && prefix(&counted.c, &reference.c)
        && prefix(&counted.d, &reference.d);
    let recursions = verify_recursions(&counted);
    Ok((
        tables && !counted.truncated && recursions.passed(),
        format!(
            "lengths a..d to {:?}, tables match={tables}, recursion violations={}",
            (counted.a.len() - 1, counted.b.len() - 1, counted.c.len() - 1, counted.d.len() - 1),
            recursions.three_way_violations.len() + recursions.two_way_violations.len()
        ),
    ))
}

fn small_count_check(_: &Settings) -> anyhow::Result<(bool, String)> {
    let (n, k) = small_counts();
    let pass = n[1..=6] == [1, 2, 2, 2, 4, 8] && k[..=3] == [4, 8, 6, 1] && (7..=15).all(|l| n[l] <= escape_bound(l));
    let series = [0.05, 0.1, 0.2, 0.3].into_iter().map(c2_consistency).collect::<Result<Vec<_>, _>>()?;
    let series_ok = series.iter().all(|c| c.passed());
    Ok((pass && series_ok, format!("n1..n6={:?} k0..k3={:?} c2 series ok={series_ok}", &n[1..=6], &k[..=3])))
}

fn axis_bound(s: &Settings) -> anyhow::Result<(bool, String)> {
    let p = 0.35;
    let bound = w0_bound(p, &WalkCensus::reference())?;
    let config = SimConfig { samples: s.axis_samples(), seed: s.seed, ..SimConfig::new(DEFAULT_STRIP_WIDTH, p) };
    let mc = estimate(&config, Functional::HalfPlaneAxis)?;
    let pass = p * bound <= 1.0 && mc.mean - 3.0 * mc.std_error <= bound;
    Ok((pass, format!("p*bound={:.12} mc={:.5}±{:.5}", p * bound, mc.mean, mc.std_error)))
}

fn attainability(_: &Settings) -> anyhow::Result<(bool, String)> {
    let mut pass = true;
    let mut sizes = Vec::new();
    for k in 3..=6 {
        let model = PercolationModel::cycle(k)?;
        let mut reached = model.attainable().to_vec();
        reached.sort_unstable();
        let mut noncrossing = model.space().noncrossing_star()?;
        noncrossing.sort_unstable();
        pass &= reached == noncrossing;
        sizes.push(reached.len());
    }
    Ok((pass, format!("sizes for k=3..6: {sizes:?}")))
}

fn qsd_exactness(_: &Settings) -> anyhow::Result<(bool, String)> {
    let (mut residual, mut survival, mut floor) = (0f64, 0f64, true);
    for k in 3..=5 {
        let model = PercolationModel::cycle(k)?;
        for p in grid(0.1, 0.9, 0.1) {
            let at = model.at(p)?;
            let qsd = compute_qsd(at.chain(), DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;
            residual = residual.max(qsd.residual_l1);
            floor &= qsd_floor_check(&qsd, k, p);
            let mut evolution = ConditionedEvolution::new(at.chain(), &qsd.alpha)?;
            for n in 1..=50 {
                evolution.step()?;
                survival = survival.max((evolution.log_survival() - n as f64 * qsd.lambda.ln()).abs());
            }
        }
    }
    Ok((
        residual <= 1e-12 && floor && survival <= 1e-10,
        format!("residual={residual:.1e} floor={floor} survival gap={survival:.1e}"),
    ))
}

fn certificate(_: &Settings) -> anyhow::Result<(bool, String)> {
    let mut pass = true;
    let mut margin = f64::INFINITY;
    for k in 3..=4 {
        let model = PercolationModel::cycle(k)?;
        for p in grid(0.4, 0.9, 0.1) {
            let at = model.at(p)?;
            let (qsd, params) = at.measured_certificate(3, 200)?;
            pass &= params.contraction() > 0.0;
            let size = at.chain().len();
            let mut starts: Vec<Vec<f64>> =
                (0..size).map(|y| (0..size).map(|x| f64::from(u8::from(x == y))).collect()).collect();
            starts.push(at.initial_distribution().to_vec());
            for mu in &starts {
                let report = verify_convergence_bound(at.chain(), &params, mu, &qsd.alpha, 200)?;
                pass &= report.holds;
                margin = margin.min(report.worst_margin);
            }
        }
    }
    Ok((pass, format!("worst margin={margin:.2e}")))
}

fn onset_search(stationary: bool) -> anyhow::Result<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, limit) in [(3, 2), (4, 4)] {
        let model = PercolationModel::cycle(k)?;
        let mut worst = 0;
        for p in grid(0.05, 0.95, 0.05) {
            let at = model.at(p)?;
            let report = if stationary { at.marginal_onset(64)? } else { at.empirical_onset(64)? };
            let n = report.onset.unwrap_or(usize::MAX);
            worst = worst.max(n);
            pass &= n <= limit;
        }
        parts.push(format!("k={k}: max {worst} (limit {limit})"));
    }
    Ok((pass, parts.join(", ")))
}

fn fixed_start_onset(_: &Settings) -> anyhow::Result<(bool, String)> {
    onset_search(false)
}

fn stationary_onset(_: &Settings) -> anyhow::Result<(bool, String)> {
    onset_search(true)
}

fn large_n(_: &Settings) -> anyhow::Result<(bool, String)> {
    let model = PercolationModel::cycle(3)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.45, 0.5, 0.55] {
        let n = n3(3, p)?.ceil() as usize;
        let verdict = model.at(p)?.check_monotone_at(n, None)?.verdict;
        pass &= verdict == Verdict::Holds;
        parts.push(format!("p={p} n={n} {verdict:?}"));
    }
    Ok((pass, parts.join(", ")))
}

fn bound_calculus(s: &Settings) -> anyhow::Result<(bool, String)> {
    let split = verify_uniform_split(3..=s.bound_k_max(), DEFAULT_SPLIT_POINTS);
    let appendix = verify_appendix(s.appendix_density());
    let main = n_main(3);
    Ok((
        split.passed() && appendix.passed() && main == Some(2_702_722),
        format!(
            "split k<={} violations={} appendix violations={} N_main(3)={main:?}",
            s.bound_k_max(),
            split.violations(),
            appendix.violations()
        ),
    ))
}

fn path_oracle(_: &Settings) -> anyhow::Result<(bool, String)> {
    let mut gap = 0f64;
    for l in 3..=5 {
        for p in [0.05, 0.1, 0.2, 0.35, 0.45] {
            let closed = p_prime(l, p).ok_or_else(|| usage("no closed form"))?;
            gap = gap.max((p_prime_oracle(l, p)?.value - closed).abs());
        }
    }
    Ok((gap <= 1e-12, format!("max gap={gap:.1e}")))
}

fn monte_carlo(s: &Settings) -> anyhow::Result<(bool, String)> {
    let model = PercolationModel::cycle(3)?;
    let (mut worst, mut bad) = (0f64, 0);
    for p in [0.2, 0.5, 0.8] {
        let at = model.at(p)?;
        let curve = at.curve(&Start::StationaryInitial, 5)?;
        let mut functionals = Vec::new();
        let mut exact = Vec::new();
        for n in 0..=5 {
            let law = curve.unconditional(n);
            for (pos, &x) in model.attainable().iter().enumerate() {
                functionals.push(Functional::Marginal { pattern: model.space().pattern(x).clone(), n });
                exact.push(law[pos]);
            }
            for v in 0..3 {
                functionals.push(Functional::Connection { v, n });
                exact.push(at.connection_from(&curve, v, n));
            }
            functionals.push(Functional::Infected { n });
            exact.push(at.expected_from(&curve, n));
        }
        let config = SimConfig { samples: s.mc_samples(), horizon: 5, seed: s.seed, ..SimConfig::new(3, p) };
        for (est, &value) in estimate_many(&config, &functionals)?.iter().zip(&exact) {
            let q = value.clamp(0.0, 1.0);
            let sigma = est.std_error.max((q * (1.0 - q) / est.samples as f64).sqrt());
            let z = if sigma > 0.0 { (est.mean - value).abs() / sigma } else { 0.0 };
            worst = worst.max(z);
            bad += usize::from(z > 4.0);
        }
    }
    Ok((bad == 0, format!("worst |z|={worst:.2}, {bad} outside 4σ")))
}

fn expectation(_: &Settings) -> anyhow::Result<(bool, String)> {
    let mut rises = Vec::new();
    for k in 3..=5 {
        let model = PercolationModel::cycle(k)?;
        for p in grid(0.05, 0.35, 0.05) {
            let at = model.at(p)?;
            let curve = at.curve(&Start::StationaryInitial, 50)?;
            let series: Vec<f64> = (0..=50).map(|n| at.expected_from(&curve, n)).collect();
            if let Some(n) = series.windows(2).position(|w| w[1] > w[0] * (1.0 + 1e-12)) {
                rises.push(format!("k={k} p={p} n={n}"));
            }
        }
    }
    let detail = if rises.is_empty() { "non-increasing through n=50".to_string() } else { rises.join("; ") };
    Ok((rises.is_empty(), detail))
}

pub fn run(args: &VerifyArgs, format: Format) -> anyhow::Result<Outcome> {
    if format == Format::Csv {
        return Err(usage("verify-all has no CSV form; use --json"));
    }
    let settings = Settings { deep: args.deep, seed: args.seed };
    let checks: [(&'static str, Check); 13] = [
        ("walk-tables", walk_tables),
        ("small-counts", small_count_check),
        ("axis-bound", axis_bound),
        ("attainability", attainability),
        ("qsd", qsd_exactness),
        ("certificate", certificate),
        ("fixed-start-onset", fixed_start_onset),
        ("stationary-start-onset", stationary_onset),
        ("large-n-monotone", large_n),
        ("bound-calculus", bound_calculus),
        ("path-oracle", path_oracle),
        ("monte-carlo", monte_carlo),
        ("expectation", expectation),
    ];
    let mut lines = Vec::new();
    for (id, check) in checks {
        let start = Instant::now();
        let (passed, detail) = check(&settings)?;
        lines.push(CheckLine {
            id,
            passed,
            known_divergence: !passed && KNOWN_DIVERGENCES.contains(&id),
            detail,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let passed = lines.iter().all(|l| l.passed || l.known_divergence);
    let report = VerifyReport { deep: settings.deep, seed: settings.seed, checks: lines, passed };
    let body = if format == Format::Json {
        json(&report)?
    } else {
        let mut out = String::new();
        for l in &report.checks {
            let status = if l.passed { "PASS" } else { "FAIL" };
            let note = if l.known_divergence { " [known divergence]" } else { "" };
            writeln!(out, "[{status}] {}: {}{note} ({:.1}s)", l.id, l.detail, l.seconds)?;
        }
        out
    };
    Ok(Outcome::checked(body, passed).with_seeds(vec![settings.seed]))
}
