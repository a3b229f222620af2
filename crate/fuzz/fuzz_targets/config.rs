#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::cli::{RunConfig, Settings};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(settings) = Settings::parse(text, "fuzz.cfg") {
        let _ = RunConfig::from_settings(&settings);
    }
});
