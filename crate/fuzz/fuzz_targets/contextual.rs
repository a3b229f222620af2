#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::textprep::ContextualFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ContextualFile::parse(text, "fuzz") {
        assert_eq!(ContextualFile::parse(&file.to_text(), "fuzz").unwrap(), file);
    }
});
