//! Offensive-tweet classification with a BiGRU/CNN weighted ensemble over
//! static word embeddings and a recurrent head over precomputed contextual
//! embeddings.

pub mod cli;
pub mod data_eval;
pub mod embed_aug;
pub mod error;
pub mod layers;
pub mod models;
pub mod numeric;
pub mod optim;
pub mod pipeline;
pub mod synthetic;
pub mod textprep;

pub use error::{Error, ErrorCategory, Result};
