#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::models::ModelSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = ModelSpec::from_text(text) {
        assert_eq!(ModelSpec::from_text(&spec.to_text()).unwrap(), spec);
    }
});
