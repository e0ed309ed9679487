#![no_main]

use libfuzzer_sys::fuzz_target;
use percmono::kernel::{parse_kernel_csv, TransitionKernel};
use percmono::pattern::PatternSpace;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_kernel_csv(text);
    if let Ok(space) = PatternSpace::cycle(3) {
        let _ = TransitionKernel::from_csv(text, &space);
    }
});
