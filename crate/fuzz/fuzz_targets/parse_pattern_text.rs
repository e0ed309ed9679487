#![no_main]

use libfuzzer_sys::fuzz_target;
use percmono::pattern::Pattern;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(x) = text.parse::<Pattern>() {
        let printed = x.to_string();
        assert_eq!(Pattern::parse_with_k(&printed, x.k()).unwrap(), x);
    }
});
