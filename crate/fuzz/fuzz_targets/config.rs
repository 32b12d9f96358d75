#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use orlicz_flow::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let base = Path::new("/nonexistent-fuzz-base");
    if let Ok(cfg) = parse_config(text, base, None) {
        // a resolved config parses back to itself
        let again = parse_config(&cfg.to_toml(), base, None).expect("resolved config reparses");
        assert_eq!(cfg, again);
    }
});
