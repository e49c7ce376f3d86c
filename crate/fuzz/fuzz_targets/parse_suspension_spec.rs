#![no_main]
use libfuzzer_sys::fuzz_target;
use systolica::suspension::SuspensionSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<SuspensionSpec>() {
        // angles are canonical after the first parse
        let reparsed: SuspensionSpec = spec.to_string().parse().unwrap();
        assert_eq!(spec, reparsed);
    }
});
