use std::fmt::Write as _;

use percmono::bounds::{verify_appendix, verify_uniform_split, BoundRow, VerificationReport};
use percmono::kernel::TransitionKernel;
use percmono::monotonicity::{OnsetReport, PercolationModel, Start};
use percmono::montecarlo::{estimate, Functional, McResult, SimConfig, DEFAULT_STRIP_WIDTH};
use percmono::pattern::{Graph, Pattern, PatternSpace};
use percmono::qsd::QsdReport;
use percmono::saw::{census, verify_recursions, w0_bound_terms, CensusCaps, RecursionReport, W0Bound, WalkCensus};
use serde::Serialize;

use crate::output::{json, Format, Outcome};
use crate::{
    usage, AppendixArgs, BoundsArgs, FunctionalKind, GraphArgs, GraphKind, KernelArgs, McArgs, OnsetArgs, PatternsArgs,
    QsdArgs, SawArgs, Theorem3Args,
};

fn space(args: &GraphArgs) -> anyhow::Result<PatternSpace> {
    let graph = match args.graph {
        GraphKind::Cycle => Graph::cycle(args.k)?,
        GraphKind::Line => Graph::line(args.k)?,
    };
    Ok(PatternSpace::enumerate_with_cap(graph, args.cap)?)
}

fn no_csv(command: &str) -> anyhow::Error {
    usage(format!("{command} has no CSV form; use --json"))
}

#[derive(Serialize)]
struct PatternRow {
    index: usize,
    pattern: Pattern,
    text: String,
    infected: bool,
    noncrossing: bool,
}

pub fn patterns(args: &PatternsArgs, format: Format) -> anyhow::Result<Outcome> {
    let space = space(&args.graph)?;
    let indices: Vec<usize> = if args.attainable {
        PercolationModel::from_space(space.clone(), args.origin)?.attainable().to_vec()
    } else {
        (0..space.len()).collect()
    };
    let cycle = space.graph().is_cycle();
    let rows: Vec<PatternRow> = indices
        .into_iter()
        .map(|i| {
            let x = space.pattern(i).clone();
            PatternRow {
                index: i,
                text: x.to_string(),
                infected: x.is_infected(),
                noncrossing: cycle && x.is_noncrossing(),
                pattern: x,
            }
        })
        .collect();
    let body = match format {
        Format::Json => json(&rows)?,
        Format::Csv | Format::Text => {
            let mut out = String::from("index,pattern,infected,noncrossing\n");
            for r in &rows {
                writeln!(out, "{},\"{}\",{},{}", r.index, r.text, r.infected, r.noncrossing)?;
            }
            out
        }
    };
    Ok(Outcome::ok(body))
}

pub fn kernel(args: &KernelArgs, format: Format) -> anyhow::Result<Outcome> {
    let space = space(&args.graph)?;
    let kernel = TransitionKernel::build(&space)?;
    let body = match format {
        Format::Json => json(&kernel.to_json(&space))?,
        Format::Csv | Format::Text => kernel.to_csv(),
    };
    Ok(Outcome::ok(body))
}

pub fn qsd(args: &QsdArgs, format: Format) -> anyhow::Result<Outcome> {
    let model = PercolationModel::cycle(args.k)?;
    let at = model.at(args.p)?;
    let (result, params) = at.measured_certificate(args.n_nu, args.horizon)?;
    let report = QsdReport::new(&result, &params)?;
    let body = match format {
        Format::Json => json(&report)?,
        Format::Csv => {
            let mut out = String::from("x_pattern,alpha\n");
            for (&i, a) in model.attainable().iter().zip(&report.alpha) {
                writeln!(out, "\"{}\",{a:e}", model.space().pattern(i))?;
            }
            out
        }
        Format::Text => {
            let c = &report.certificate;
            format!(
                "lambda = {}\nresidual = {:.3e} after {} iterations\nc_nu = {:.6}, c_nu' = {:.6}, c_alpha = {:.4e}, c_dagger = {:.6}\nN = {}\n",
                report.lambda, report.residual, report.iterations, c.c_nu, c.c_nu_prime, c.c_alpha, c.c_dagger, c.onset
            )
        }
    };
    Ok(Outcome::ok(body))
}

#[derive(Serialize)]
struct OnsetOutput {
    #[serde(flatten)]
    fixed_start: OnsetReport,
    /// Onset for the marginals of the chain started from its stationary law.
    stationary_start_onset: Option<usize>,
}

pub fn onset(args: &OnsetArgs, format: Format) -> anyhow::Result<Outcome> {
    let model = PercolationModel::cycle(args.k)?;
    let at = model.at(args.p)?;
    let body = match format {
        Format::Csv => {
            let labels: Vec<String> =
                model.attainable().iter().map(|&i| model.space().pattern(i).to_string()).collect();
            at.curve(&Start::StationaryInitial, args.n_max)?.to_csv(&labels)
        }
        _ => {
            let out = OnsetOutput {
                fixed_start: at.empirical_onset(args.n_max)?,
                stationary_start_onset: at.marginal_onset(args.n_max)?.onset,
            };
            if format == Format::Json {
                json(&out)?
            } else {
                let show = |o: Option<usize>| o.map_or(format!("none up to {}", args.n_max), |n| n.to_string());
                format!(
                    "fixed-start onset: {}\nstationary-start onset: {}\n",
                    show(out.fixed_start.onset),
                    show(out.stationary_start_onset)
                )
            }
        }
    };
    Ok(Outcome::ok(body))
}

fn report_text(report: &VerificationReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{status}] {} ({} points, worst margin {:e})", c.name, c.points, c.worst_margin);
    }
    out
}

fn render_report(report: &VerificationReport, format: Format, command: &str) -> anyhow::Result<Outcome> {
    let body = match format {
        Format::Json => json(report)?,
        Format::Csv => return Err(no_csv(command)),
        Format::Text => report_text(report),
    };
    Ok(Outcome::checked(body, report.passed()))
}

pub fn bounds(args: &BoundsArgs, format: Format) -> anyhow::Result<Outcome> {
    if args.split {
        if args.k_max < 3 {
            return Err(usage("--k-max must be at least 3"));
        }
        return render_report(&verify_uniform_split(3..=args.k_max, args.points), format, "bounds --split");
    }
    let mut rows = Vec::new();
    for &k in &args.k {
        for &p in &args.p {
            rows.push(BoundRow::new(k, p)?);
        }
    }
    let body = match format {
        Format::Json => json(&rows)?,
        _ => {
            let mut out = format!("{}\n", BoundRow::CSV_HEADER);
            for row in &rows {
                writeln!(out, "{}", row.to_csv())?;
            }
            out
        }
    };
    Ok(Outcome::ok(body))
}

pub fn appendix(args: &AppendixArgs, format: Format) -> anyhow::Result<Outcome> {
    render_report(&verify_appendix(args.density), format, "verify-appendix")
}

#[derive(Serialize)]
struct SawOutput<'a> {
    census: &'a WalkCensus,
    recursions: Option<RecursionReport>,
}

pub fn saw(args: &SawArgs, format: Format) -> anyhow::Result<Outcome> {
    let base = if args.deep { CensusCaps::FULL } else { CensusCaps::QUICK };
    let base = args.max_len.map_or(base, CensusCaps::uniform);
    let caps = CensusCaps {
        a: args.max_a.unwrap_or(base.a),
        b: args.max_b.unwrap_or(base.b),
        c: args.max_c.unwrap_or(base.c),
        d: args.max_d.unwrap_or(base.d),
    };
    if caps.a.max(caps.b).max(caps.c).max(caps.d) > 30 {
        return Err(usage("walk lengths above 30 are out of reach"));
    }
    let counted = census(caps, args.node_limit);
    if counted.truncated {
        eprintln!("warning: node limit reached; counts are lower bounds");
    }
    let recursions = args.recursions.then(|| verify_recursions(&counted));
    let passed = recursions.as_ref().is_none_or(RecursionReport::passed);
    let body = match format {
        Format::Json => json(&SawOutput { census: &counted, recursions })?,
        Format::Csv => counted.to_csv(),
        Format::Text => {
            let mut out = counted.to_csv();
            if let Some(r) = &recursions {
                writeln!(
                    out,
                    "recursions: {} three-way and {} two-way splits, {} violations, max growth ratio {:.4}",
                    r.three_way_checked,
                    r.two_way_checked,
                    r.three_way_violations.len() + r.two_way_violations.len(),
                    r.max_growth_ratio
                )?;
            }
            out
        }
    };
    Ok(Outcome::checked(body, passed))
}

#[derive(Serialize)]
struct Theorem3Output {
    bound: W0Bound,
    p_times_bound: f64,
    holds: bool,
    monte_carlo: Option<McResult>,
}

pub fn theorem3(args: &Theorem3Args, format: Format) -> anyhow::Result<Outcome> {
    let tables = if args.recompute { census(CensusCaps::FULL, None) } else { WalkCensus::reference() };
    let bound = w0_bound_terms(args.p, &tables)?;
    let p_times_bound = args.p * bound.total;
    let monte_carlo = match args.mc_samples {
        Some(samples) => {
            let config = SimConfig { samples, seed: args.seed, ..SimConfig::new(DEFAULT_STRIP_WIDTH, args.p) };
            Some(McResult::new(&config, estimate(&config, Functional::HalfPlaneAxis)?))
        }
        None => None,
    };
    let dominated = monte_carlo.as_ref().is_none_or(|mc| mc.mean - 3.0 * mc.std_error <= bound.total);
    let holds = p_times_bound <= 1.0;
    let out = Theorem3Output { bound, p_times_bound, holds, monte_carlo };
    let body = match format {
        Format::Json => json(&out)?,
        Format::Csv => format!(
            "p,axis,short,counted,estimated,tail,total,p_times_bound\n{},{},{},{},{},{},{},{}\n",
            out.bound.p,
            out.bound.axis,
            out.bound.short,
            out.bound.counted,
            out.bound.estimated,
            out.bound.tail,
            out.bound.total,
            out.p_times_bound
        ),
        Format::Text => {
            let mut s = format!("bound = {}\np * bound = {}\n", out.bound.total, out.p_times_bound);
            if let Some(mc) = &out.monte_carlo {
                writeln!(s, "monte carlo = {} ± {} ({} samples)", mc.mean, mc.std_error, mc.samples)?;
            }
            s
        }
    };
    let seeds = out.monte_carlo.as_ref().map(|mc| vec![mc.seed]).unwrap_or_default();
    Ok(Outcome::checked(body, holds && dominated).with_seeds(seeds))
}

pub fn mc(args: &McArgs, format: Format) -> anyhow::Result<Outcome> {
    let strip = matches!(args.functional, FunctionalKind::HalfPlaneAxis | FunctionalKind::Escape);
    let k = args.k.unwrap_or(if strip { DEFAULT_STRIP_WIDTH } else { 3 });
    let origin = if strip { 0 } else { args.origin };
    if args.samples == 0 || args.depth == 0 {
        return Err(usage("--samples and --depth must be positive"));
    }
    if origin >= k {
        return Err(usage(format!("--origin {origin} outside 0..{k}")));
    }
    let n = args.n;
    let functional = match args.functional {
        FunctionalKind::Marginal => {
            let text = args.pattern.as_deref().ok_or_else(|| usage("--functional marginal needs --pattern"))?;
            Functional::Marginal { pattern: Pattern::parse_with_k(text, k)?, n }
        }
        FunctionalKind::Connection => Functional::Connection { v: args.v, n },
        FunctionalKind::ConnectionFull => Functional::ConnectionFull { v: args.v, n },
        FunctionalKind::Infected => Functional::Infected { n },
        FunctionalKind::InfectedFull => Functional::InfectedFull { n },
        FunctionalKind::HalfPlaneAxis => Functional::HalfPlaneAxis,
        FunctionalKind::Escape => Functional::Escape { n },
    };
    let config = SimConfig {
        depth: args.depth,
        horizon: n,
        samples: args.samples,
        seed: args.seed,
        origin,
        ..SimConfig::new(k, args.p)
    };
    let result = McResult::new(&config, estimate(&config, functional)?);
    let body = match format {
        Format::Json => json(&result)?,
        Format::Csv => format!(
            "mean,std_error,samples,seed\n{},{},{},{}\n",
            result.mean, result.std_error, result.samples, result.seed
        ),
        Format::Text => {
            format!("{} ± {} ({} samples, seed {})\n", result.mean, result.std_error, result.samples, result.seed)
        }
    };
    Ok(Outcome::ok(body).with_seeds(vec![args.seed]))
}
