use std::collections::HashMap;

use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const OOV_ID: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<unk>";

/// Word ↔ id map with the padding and out-of-vocabulary ids reserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Vocabulary over the given words in order, after the two reserved
    /// entries. Repeats and the reserved spellings are skipped.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocab {
            words: Vec::new(),
            index: HashMap::new(),
        };
        for w in [PAD_TOKEN, OOV_TOKEN].into_iter().map(str::to_string).chain(words.into_iter().map(|w| w.as_ref().to_string())) {
            if !v.index.contains_key(&w) {
                v.index.insert(w.clone(), v.words.len());
                v.words.push(w);
            }
        }
        v
    }

    /// Words of a tokenized corpus with at least `min_count` occurrences,
    /// most frequent first, ties in lexicographic order.
    pub fn build<'a, I>(corpus: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tokens in corpus {
            for t in tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<_> = counts.into_iter().filter(|&(_, c)| c >= min_count.max(1)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        Vocab::from_words(ranked.into_iter().map(|(w, _)| w))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(OOV_ID)
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Fixed-length id sequence with its attention mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedInput {
    pub ids: Vec<usize>,
    pub mask: Vec<u8>,
}

impl EncodedInput {
    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1).count()
    }
}

/// Maps tokens to ids, truncating or right-padding to `max_len`.
pub fn encode(tokens: &[String], vocab: &Vocab, max_len: usize) -> Result<EncodedInput> {
    if max_len == 0 {
        return Err(Error::invalid("max_len must be at least 1"));
    }
    let mut ids = vec![PAD_ID; max_len];
    let mut mask = vec![0; max_len];
    for (i, t) in tokens.iter().take(max_len).enumerate() {
        ids[i] = vocab.id(t);
        mask[i] = 1;
    }
    Ok(EncodedInput { ids, mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn pads_and_masks() {
        let v = Vocab::from_words(["a", "b"]);
        let e = encode(&toks("a b"), &v, 4).unwrap();
        assert_eq!(e.ids, [v.id("a"), v.id("b"), PAD_ID, PAD_ID]);
        assert_eq!(e.mask, [1, 1, 0, 0]);
    }

    #[test]
    fn truncates() {
        let v = Vocab::from_words(["x"]);
        let tokens = vec!["x".to_string(); 70];
        let e = encode(&tokens, &v, 60).unwrap();
        assert_eq!(e.ids.len(), 60);
        assert!(e.mask.iter().all(|&m| m == 1));
    }

    #[test]
    fn unknown_is_oov() {
        let v = Vocab::from_words(["a"]);
        let e = encode(&toks("zzz"), &v, 2).unwrap();
        assert_eq!((e.ids[0], e.mask[0]), (OOV_ID, 1));
    }

    #[test]
    fn build_orders_by_frequency() {
        let corpus = [toks("b a c a"), toks("b a")];
        let v = Vocab::build(corpus.iter().map(Vec::as_slice), 1);
        assert_eq!(v.words(), [PAD_TOKEN, OOV_TOKEN, "a", "b", "c"]);
        let v = Vocab::build(corpus.iter().map(Vec::as_slice), 2);
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn zero_length_rejected() {
        assert!(encode(&[], &Vocab::from_words::<_, &str>([]), 0).is_err());
    }
}
