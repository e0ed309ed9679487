//! Replays the checked-in fuzz seeds through the parsers.

use std::path::PathBuf;

use percmono::kernel::{parse_kernel_csv, TransitionKernel};
use percmono::pattern::{Pattern, PatternSpace};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            (path, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

/// Seeds named `invalid_*` must be rejected.
fn is_invalid(path: &std::path::Path) -> bool {
    path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("invalid_"))
}

#[test]
fn pattern_text_seeds_round_trip() {
    for (path, text) in seeds("parse_pattern_text") {
        if is_invalid(&path) {
            assert!(text.parse::<Pattern>().is_err(), "{}", path.display());
            continue;
        }
        let x: Pattern = text.parse().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(x.to_string(), text, "{}", path.display());
    }
}

#[test]
fn pattern_json_seeds_round_trip() {
    for (path, text) in seeds("parse_pattern_json") {
        if is_invalid(&path) {
            assert!(Pattern::from_json_str(&text).is_err(), "{}", path.display());
            continue;
        }
        let x = Pattern::from_json_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(Pattern::from_json(&x.to_json()).unwrap(), x);
    }
}

#[test]
fn kernel_csv_seeds_parse() {
    let space = PatternSpace::cycle(3).unwrap();
    let full = TransitionKernel::build(&space).unwrap();
    for (path, text) in seeds("parse_kernel_csv") {
        assert_eq!(parse_kernel_csv(&text).is_ok(), !is_invalid(&path), "{}", path.display());
        if path.ends_with("cycle3") {
            assert_eq!(TransitionKernel::from_csv(&text, &space).unwrap(), full);
        }
    }
}
