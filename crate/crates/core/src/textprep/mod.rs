//! Tweet cleaning, tokenization, fixed-length encoding, and framing of
//! inputs for the contextual-embedding model.

mod clean;
mod contextual;
mod encode;

pub use clean::{clean_text, is_emoji, tokenize, CleanConfig, Language, EMOJI_RANGES};
pub use contextual::{
    prepare_contextual_input, ContextualFile, ContextualInput, ContextualRecord, FramedInput, CLS_TOKEN,
    FRAME_PAD_TOKEN, SEP_TOKEN,
};
pub use encode::{encode, EncodedInput, Vocab, OOV_ID, OOV_TOKEN, PAD_ID, PAD_TOKEN};
