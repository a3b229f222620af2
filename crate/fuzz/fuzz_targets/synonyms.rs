#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::embed_aug::SynonymTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = SynonymTable::parse_tsv(text, "fuzz") {
        assert_eq!(SynonymTable::parse_tsv(&table.to_tsv(), "fuzz").unwrap(), table);
    }
});
