use std::collections::{HashMap, HashSet};

use crate::data_eval::{DataRecord, Dataset};
use crate::embed_aug::{nearest_neighbors, EmbeddingTable};
use crate::error::{Error, Result};
use crate::numeric::RngStream;
use crate::textprep::tokenize;

pub const DEFAULT_TOP_N: usize = 1000;
pub const DEFAULT_MIN_COS: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct SynonymEntry {
    pub source: String,
    pub replacement: String,
    pub cosine: f64,
}

/// One replacement per source word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymTable {
    entries: Vec<SynonymEntry>,
    index: HashMap<String, usize>,
}

impl SynonymTable {
    pub fn new(entries: Vec<SynonymEntry>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.source == e.replacement {
                return Err(Error::Data(format!("synonym entry maps {:?} to itself", e.source)));
            }
            for w in [&e.source, &e.replacement] {
                if w.is_empty() || w.contains(char::is_whitespace) {
                    return Err(Error::Data(format!("synonym word {w:?} is empty or contains whitespace")));
                }
            }
            if index.insert(e.source.clone(), i).is_some() {
                return Err(Error::Data(format!("source word {:?} listed twice", e.source)));
            }
        }
        Ok(SynonymTable { entries, index })
    }

    pub fn entries(&self) -> &[SynonymEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn replacement(&self, word: &str) -> Option<&str> {
        self.index.get(word).map(|&i| self.entries[i].replacement.as_str())
    }

    /// `source<TAB>replacement<TAB>cosine` lines.
    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.source, e.replacement, e.cosine))
            .collect()
    }

    pub fn parse_tsv(text: &str, source_name: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let [source, replacement, cos] = f[..] else {
                return Err(Error::parse(source_name, i + 1, format!("expected 3 fields, found {}", f.len())));
            };
            let cosine = cos
                .parse::<f64>()
                .ok()
                .filter(|c| (-1.0..=1.0).contains(c))
                .ok_or_else(|| Error::parse(source_name, i + 1, format!("invalid cosine {cos:?}")))?;
            entries.push(SynonymEntry {
                source: source.to_string(),
                replacement: replacement.to_string(),
                cosine,
            });
        }
        SynonymTable::new(entries)
    }
}

/// For each of the `top_n` most frequent corpus tokens that the table
/// knows, its nearest neighbor becomes its replacement when the cosine
/// reaches `min_cos`. Frequency ties are ordered by word.
pub fn build_synonym_table(corpus: &[Vec<String>], table: &EmbeddingTable, top_n: usize, min_cos: f64) -> Result<SynonymTable> {
    if top_n == 0 {
        return Err(Error::invalid("top_n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&min_cos) {
        return Err(Error::invalid(format!("min_cos must lie in [0, 1], got {min_cos}")));
    }
    if corpus.iter().all(Vec::is_empty) {
        return Err(Error::Data("cannot build a synonym table from an empty corpus".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in corpus.iter().flatten() {
        if table.contains(t) {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut entries = Vec::new();
    for (word, _) in ranked.into_iter().take(top_n) {
        if table.len() < 2 {
            break;
        }
        let (best, cosine) = nearest_neighbors(word, table, 1)?.remove(0);
        if cosine >= min_cos {
            entries.push(SynonymEntry {
                source: word.to_string(),
                replacement: best,
                cosine,
            });
        }
    }
    SynonymTable::new(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentPolicy {
    /// Every matching token is replaced.
    ReplaceAll,
    /// At most `k` matching positions, chosen at random, are replaced.
    PerTweetMax(usize),
}

pub const SYNTHETIC_ID_SUFFIX: &str = "~syn";

/// One synthetic copy per record that contains at least one source word.
/// Copies keep the label, get the id `<id>~syn` (numbered if taken), and
/// hold the substituted tokens joined by single spaces.
pub fn augment_corpus(dataset: &Dataset, syn: &SynonymTable, policy: AugmentPolicy, rng: &mut RngStream) -> Result<Dataset> {
    if policy == AugmentPolicy::PerTweetMax(0) {
        return Err(Error::invalid("per-tweet replacement limit must be at least 1"));
    }
    let mut taken: HashSet<String> = dataset.records.iter().map(|r| r.id.clone()).collect();
    let mut out = Vec::new();
    for r in &dataset.records {
        let mut tokens = tokenize(&r.text);
        let hits: Vec<usize> = (0..tokens.len()).filter(|&i| syn.replacement(&tokens[i]).is_some()).collect();
        if hits.is_empty() {
            continue;
        }
        let chosen = match policy {
            AugmentPolicy::ReplaceAll => hits,
            AugmentPolicy::PerTweetMax(k) => {
                let mut h = hits;
                rng.shuffle(&mut h);
                h.truncate(k);
                h.sort_unstable();
                h
            }
        };
        for i in chosen {
            tokens[i] = syn.replacement(&tokens[i]).unwrap().to_string();
        }
        let mut id = format!("{}{SYNTHETIC_ID_SUFFIX}", r.id);
        let mut n = 1;
        while taken.contains(&id) {
            n += 1;
            id = format!("{}{SYNTHETIC_ID_SUFFIX}{n}", r.id);
        }
        taken.insert(id.clone());
        out.push(DataRecord {
            id,
            text: tokens.join(" "),
            label: r.label,
        });
    }
    Dataset::new(dataset.schema.clone(), out)
}
