#![no_main]

use libfuzzer_sys::fuzz_target;
use orlicz_flow::io::parse_weight_table;
use orlicz_flow::orlicz::{Weight, WeightFunction};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(points) = parse_weight_table(text) else {
        return;
    };
    if let Ok(w) = Weight::from_table(&points) {
        // accepted tables give a positive weight everywhere
        for s in [1e-9, 1e-3, 0.5, 1.0, 2.0, 1e3, 1e9] {
            let v = w.value(s);
            assert!(v > 0.0, "phi({s}) = {v}");
        }
    }
});
