#![no_main]

use libfuzzer_sys::fuzz_target;
use percmono::pattern::Pattern;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(x) = Pattern::from_json_str(text) {
        assert_eq!(Pattern::from_json(&x.to_json()).unwrap(), x);
    }
});
