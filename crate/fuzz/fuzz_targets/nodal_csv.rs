#![no_main]

use libfuzzer_sys::fuzz_target;
use orlicz_flow::io::parse_nodal_csv;

fuzz_target!(|data: &[u8]| {
    let Some((&len, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let len = len as usize;
    if let Ok(vals) = parse_nodal_csv(text, len, "fuzz") {
        assert_eq!(vals.len(), len);
        assert!(vals.iter().all(|v| v.is_finite()));
    }
});
