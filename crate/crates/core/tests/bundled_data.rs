use std::fs;
use std::path::Path;

use tweetnet::data_eval::write_tsv;
use tweetnet::synthetic::{SmokeCorpus, SMOKE_SEED};

#[test]
fn bundled_corpus_matches_generator() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let corpus = SmokeCorpus::generate(SMOKE_SEED).unwrap();
    for (name, expected) in [
        ("train.tsv", write_tsv(&corpus.train)),
        ("embeddings.txt", corpus.embeddings.to_text()),
        ("contextual.txt", corpus.contextual.to_text()),
    ] {
        let on_disk = fs::read_to_string(dir.join(name)).unwrap();
        assert!(on_disk == expected, "{name} is stale; run `cargo run --example gen_synthetic`");
    }
}
