//! Word-embedding tables, cosine neighbor search, and synonym-replacement
//! augmentation of labeled corpora.

mod synonyms;
mod table;

pub use synonyms::{
    augment_corpus, build_synonym_table, AugmentPolicy, SynonymEntry, SynonymTable, DEFAULT_MIN_COS, DEFAULT_TOP_N,
    SYNTHETIC_ID_SUFFIX,
};
pub use table::{load_embeddings, nearest_neighbors, EmbeddingTable};
