#![no_main]
use libfuzzer_sys::fuzz_target;
use systolica::flat::{flat_volume, BieberbachSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<BieberbachSpec>() {
        let reparsed: BieberbachSpec = spec.to_string().parse().unwrap();
        assert_eq!(spec, reparsed);
        assert!(flat_volume(&spec) >= 0.0);
    }
});
