//! Sentence splitting, tokenisation, vocabularies and embedding tables.

mod embeddings;
mod segment;
mod tokenize;
mod vocab;

pub use embeddings::{load_embeddings, parse_embeddings, EmbeddingTable, OOV_INIT_BOUND};
pub use segment::{split_sentences, SentenceSpan, ABBREVIATIONS};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, PAD, PAD_ID, UNK, UNK_ID};
