#![no_main]

use libfuzzer_sys::fuzz_target;
use tweetnet::embed_aug::EmbeddingTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = EmbeddingTable::parse(text, "fuzz", None) {
        let again = EmbeddingTable::parse(&table.to_text(), "fuzz", Some(table.dim())).unwrap();
        assert_eq!(again.words(), table.words());
        for w in table.words() {
            assert_eq!(again.get(w), table.get(w));
        }
    }
});
