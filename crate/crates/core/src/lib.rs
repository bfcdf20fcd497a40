//! Core algorithms for building synthetic parallel corpora through a pivot
//! language and training small attentional encoder-decoder translation
//! models on them.
//!
//! Everything in this crate is pure computation over in-memory data: corpus
//! construction and mixing, rule-based tokenization, byte-pair subword
//! segmentation, the recurrent translation model with its training loop,
//! beam-search decoding, and corpus-level BLEU. File formats, process
//! orchestration, and the command-line interface live in the companion
//! `pseudomix` crate.
//!
//! The crate is `no_std` (with `alloc`) unless the default `std` feature is
//! enabled. All randomized operations take explicit seeds and all internal
//! collections iterate in a stable order, so every function here is
//! reproducible bit-for-bit across runs and platforms with the same inputs.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod corpus;
pub mod decode;
pub mod metrics;
pub mod nmt;
pub mod subword;
pub mod tensor;
pub mod tokenizer;
pub mod vocab;

pub use corpus::{
    mix_pseudo, pivot_align, CorpusError, CorpusKind, MultiParallelCorpus, ParallelCorpus,
    Provenance, SentencePair,
};
pub use decode::{beam_search, greedy_decode, DecodeConfig, Hypothesis};
pub use metrics::{corpus_bleu, BleuReport, MetricsError};
pub use nmt::{
    fine_tune, train, AdamState, ModelConfig, ModelParameters, TrainConfig, TrainOutcome,
};
pub use subword::{bpe_apply, bpe_learn, bpe_undo, BpeModel, SubwordError};
pub use tokenizer::tokenize;
pub use vocab::{Vocabulary, BOS_ID, EOS_ID, PAD_ID, UNK_ID};
