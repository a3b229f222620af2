#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::textprep::{clean_text, CleanConfig, Language};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for lang in Language::ALL {
        let config = CleanConfig::for_language(lang);
        let once = clean_text(text, &config);
        assert_eq!(clean_text(&once, &config), once);
    }
});
