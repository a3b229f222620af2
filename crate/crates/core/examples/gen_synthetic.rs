//! Writes the bundled synthetic corpus to `data/synthetic/` (or the
//! directory given as the first argument).

use std::path::PathBuf;

use tweetnet::data_eval::write_tsv;
use tweetnet::synthetic::{SmokeCorpus, SMOKE_SEED};

fn main() -> tweetnet::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic"));
    std::fs::create_dir_all(&dir).map_err(|e| tweetnet::Error::io(&dir, e))?;
    let corpus = SmokeCorpus::generate(SMOKE_SEED)?;
    for (name, text) in [
        ("train.tsv", write_tsv(&corpus.train)),
        ("embeddings.txt", corpus.embeddings.to_text()),
        ("contextual.txt", corpus.contextual.to_text()),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| tweetnet::Error::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
