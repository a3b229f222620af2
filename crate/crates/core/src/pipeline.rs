//! Glue from datasets to model inputs.

use crate::data_eval::Dataset;
use crate::error::{Error, Result};
use crate::models::ModelInput;
use crate::optim::Example;
use crate::textprep::{clean_text, encode, tokenize, CleanConfig, ContextualFile, ContextualInput, Vocab};

/// Cleaned, tokenized text of every record.
pub fn token_lists(dataset: &Dataset, clean: &CleanConfig) -> Vec<Vec<String>> {
    dataset
        .records
        .iter()
        .map(|r| tokenize(&clean_text(&r.text, clean)))
        .collect()
}

pub fn token_inputs(dataset: &Dataset, clean: &CleanConfig, vocab: &Vocab, max_len: usize) -> Result<Vec<ModelInput>> {
    token_lists(dataset, clean)
        .iter()
        .map(|t| encode(t, vocab, max_len).map(ModelInput::Tokens))
        .collect()
}

/// Inputs looked up by record id in a contextual-embedding file.
pub fn contextual_inputs(dataset: &Dataset, file: &ContextualFile, max_len: usize) -> Result<Vec<ModelInput>> {
    let by_id: std::collections::HashMap<&str, _> = file.records.iter().map(|r| (r.id.as_str(), r)).collect();
    dataset
        .records
        .iter()
        .map(|r| {
            let rec = by_id
                .get(r.id.as_str())
                .ok_or_else(|| Error::Data(format!("no contextual vectors for record {:?}", r.id)))?;
            ContextualInput::from_vectors(&rec.vectors, max_len).map(ModelInput::Contextual)
        })
        .collect()
}

/// Pairs inputs with the dataset's labels.
pub fn examples(dataset: &Dataset, inputs: Vec<ModelInput>) -> Result<Vec<Example>> {
    let labels = dataset.labels()?;
    if labels.len() != inputs.len() {
        return Err(Error::invalid("inputs and records differ in number"));
    }
    Ok(inputs
        .into_iter()
        .zip(labels)
        .map(|(input, label)| Example { input, label })
        .collect())
}
