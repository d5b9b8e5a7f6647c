//! Zero-shot cross-lingual rumour detection by self-training.
//!
//! A teacher classifier is fine-tuned on gold-labelled threads in a source
//! language and applied to an unlabelled target language. Its confident,
//! class-balanced predictions become silver labels for a student, which then
//! replaces the teacher; the loop repeats. Source gold labels can be mixed
//! into every student round to keep source-language accuracy.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod model;
pub mod seeds;
pub mod selftrain;
pub mod tokenizer;
