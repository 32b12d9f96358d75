#![no_main]

use libfuzzer_sys::fuzz_target;
use orlicz_flow::io::parse_atoms_csv;

fuzz_target!(|data: &[u8]| {
    let Some((&sel, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let dim = 1 + (sel & 1) as usize;
    if let Ok(atoms) = parse_atoms_csv(text, dim) {
        for a in atoms {
            assert!(a.mass > 0.0 && a.mass.is_finite());
            assert!(a.direction.iter().any(|c| *c != 0.0));
        }
    }
});
