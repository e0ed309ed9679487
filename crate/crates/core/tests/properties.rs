mod common;

use std::sync::OnceLock;

use percmono::kernel::{successor, LayerConfig, TransitionKernel};
use percmono::monotonicity::{PercolationModel, Start};
use percmono::montecarlo::{estimate, Functional, SimConfig};
use percmono::pattern::{Element, Graph, Pattern, PatternSpace};
use percmono::saw::{w0_bound, GROWTH};
use proptest::prelude::*;

fn spaces() -> &'static [(PatternSpace, TransitionKernel)] {
    static SPACES: OnceLock<Vec<(PatternSpace, TransitionKernel)>> = OnceLock::new();
    SPACES.get_or_init(|| {
        (3..=5)
            .map(|k| {
                let space = PatternSpace::cycle(k).unwrap();
                let kernel = TransitionKernel::build(&space).unwrap();
                (space, kernel)
            })
            .collect()
    })
}

fn models() -> &'static [PercolationModel] {
    static MODELS: OnceLock<Vec<PercolationModel>> = OnceLock::new();
    MODELS.get_or_init(|| (3..=4).map(|k| PercolationModel::cycle(k).unwrap()).collect())
}

/// An arbitrary pattern on `k` vertices, as labels with the marker last.
fn pattern(k: usize) -> impl Strategy<Value = Pattern> {
    (prop::collection::vec(0usize..=k, k + 1), any::<bool>()).prop_map(move |(mut labels, infected)| {
        if !infected {
            labels[k] = k + 1;
        }
        Pattern::from_labels(&labels)
    })
}

fn sized_pattern() -> impl Strategy<Value = Pattern> {
    (1usize..=8).prop_flat_map(pattern)
}

proptest! {
    #[test]
    fn kernel_rows_count_every_configuration(k_idx in 0usize..3, row in any::<prop::sample::Index>()) {
        let (space, kernel) = &spaces()[k_idx];
        let y = row.index(space.len());
        let edges = space.graph().layer_edges();
        let mut per_open = vec![0u64; edges + 1];
        for entry in kernel.row(y).unwrap() {
            for (j, c) in entry.counts.iter().enumerate() {
                per_open[j] += c;
            }
        }
        for (j, total) in per_open.iter().enumerate() {
            prop_assert_eq!(*total as u128, percmono::kernel::binomial(edges, j));
        }
    }

    #[test]
    fn successor_commutes_with_rotation(y in (3usize..=7).prop_flat_map(pattern), mask in any::<u64>(), r in -6isize..6) {
        let k = y.k();
        let graph = Graph::cycle(k).unwrap();
        let mask = mask & ((1u64 << graph.layer_edges()) - 1);
        let rotated_mask = {
            let shift = r.rem_euclid(k as isize) as usize;
            let mut out = 0u64;
            for u in 0..k {
                if mask >> u & 1 == 1 { out |= 1 << ((u + shift) % k); }
                if mask >> (k + u) & 1 == 1 { out |= 1 << (k + (u + shift) % k); }
            }
            out
        };
        let direct = successor(&graph, &y, LayerConfig::new(mask)).unwrap().rotate(r);
        let rotated = successor(&graph, &y.rotate(r), LayerConfig::new(rotated_mask)).unwrap();
        prop_assert_eq!(direct, rotated);
    }

    #[test]
    fn transition_support_does_not_depend_on_p(k_idx in 0usize..3, row in any::<prop::sample::Index>()) {
        let (space, kernel) = &spaces()[k_idx];
        let y = row.index(space.len());
        let low = kernel.evaluate(0.25).unwrap();
        let high = kernel.evaluate(0.75).unwrap();
        for x in 0..space.len() {
            prop_assert_eq!(low.get(y, x) > 0.0, high.get(y, x) > 0.0);
        }
    }

    #[test]
    fn canonical_form_is_idempotent(x in sized_pattern()) {
        let again = Pattern::canonicalize(x.k(), &x.blocks()).unwrap();
        prop_assert_eq!(&again, &x);
        prop_assert_eq!(Pattern::from_labels(x.labels()), x);
    }

    #[test]
    fn text_and_json_round_trip(x in sized_pattern()) {
        let text = x.to_string();
        prop_assert_eq!(Pattern::parse_with_k(&text, x.k()).unwrap(), x.clone());
        prop_assert_eq!(Pattern::from_json(&x.to_json()).unwrap(), x.clone());
        let json = serde_json::to_string(&x).unwrap();
        prop_assert_eq!(serde_json::from_str::<Pattern>(&json).unwrap(), x);
    }

    #[test]
    fn rotation_is_a_group_action(x in sized_pattern(), r in -10isize..10, s in -10isize..10) {
        let k = x.k() as isize;
        prop_assert_eq!(x.rotate(r).rotate(s), x.rotate(r + s));
        prop_assert_eq!(x.rotate(k), x.clone());
        prop_assert_eq!(x.rotate(r).rotate(-r), x.clone());
        prop_assert_eq!(x.rotate(r).is_noncrossing(), x.is_noncrossing());
    }

    #[test]
    fn blocks_partition_the_vertices(x in sized_pattern()) {
        let blocks = x.blocks();
        let mut seen = vec![0; x.k()];
        let mut markers = 0;
        for block in &blocks {
            for e in block {
                match e {
                    Element::Vertex(v) => seen[*v] += 1,
                    Element::Star => markers += 1,
                }
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(markers, 1);
    }

    #[test]
    fn walk_bound_grows_with_p(p in 0.01f64..0.36, q in 0.01f64..0.36) {
        prop_assume!(p < 1.0 / GROWTH && q < 1.0 / GROWTH);
        let census = common::golden_census();
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        prop_assert!(w0_bound(lo, &census).unwrap() <= w0_bound(hi, &census).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conditioned_laws_sum_to_one(m_idx in 0usize..2, p in 0.05f64..0.95, start in any::<prop::sample::Index>(), n in 0usize..12) {
        let model = &models()[m_idx];
        let at = model.at(p).unwrap();
        let y = model.space().pattern(model.attainable()[start.index(model.attainable().len())]).clone();
        for start in [Start::Pattern(y), Start::StationaryInitial] {
            let curve = at.curve(&start, n).unwrap();
            for law in &curve.conditional {
                let total: f64 = law.iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(law.iter().all(|&v| v >= 0.0));
            }
            prop_assert!(curve.log_survival.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let config = SimConfig { samples: 40, depth: 6, horizon: 3, seed, ..SimConfig::new(3, p) };
        let functional = Functional::InfectedFull { n: 2 };
        let a = estimate(&config, functional.clone()).unwrap();
        let b = estimate(&config, functional).unwrap();
        prop_assert_eq!(a.mean, b.mean);
        prop_assert_eq!(a.std_error, b.std_error);
    }
}
