//! Multi-task Arabic social-media text classification.
//!
//! The crate covers the full pipeline: tweet normalization, trainable
//! WordPiece tokenization, a from-scratch transformer encoder with
//! masked-token/next-sentence pretraining and supervised fine-tuning, a
//! small GRU baseline, a self-training wrapper for semi-supervised runs,
//! dataset ingestion with label normalization, evaluation metrics, and an
//! on-disk model registry behind a frozen prediction handle.
//!
//! Typical flow: [`wordpiece::train_vocab`] → [`pretrain::pretrain`] →
//! [`finetune::finetune`] (or [`finetune::self_train`]) →
//! [`registry::ModelRegistry::save_encoder`] → [`registry::Predictor`].

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod eval;
pub mod finetune;
pub mod nn;
pub mod normalize;
pub mod pretrain;
pub mod registry;
pub mod wordpiece;

pub use data::{
    class_distribution, combine, ingest, split, DatasetManifest, FileFormat, LabeledDataset,
    SplitSet, TaskName, TaskSpec, TextSample,
};
pub use error::{Error, Result};
pub use eval::{accuracy, macro_f1, user_aggregate, EvalReport};
pub use finetune::{
    finetune, predict, self_train, ClassifierModel, FinetuneResult, PredictionResult,
    SelectionMetric, SelfTrainConfig, SelfTrainResult, TrainConfig,
};
pub use nn::attention::{multi_head_attention, scaled_dot_attention};
pub use nn::encoder::{
    encoder_forward, pooled_output, positional_encoding, EncoderConfig, EncoderParams,
    PositionalMode,
};
pub use nn::gru::{gru_forward, mi_vocab, train_gru, GruConfig, GruModel};
pub use nn::optim::{AdamW, OptimizerConfig};
pub use nn::{Activation, Phase, Tensors};
pub use normalize::{
    normalize, passes_min_words, squash_repeats, strip_diacritics, strip_urls, strip_usernames,
    NormalizeConfig,
};
pub use pretrain::{
    make_mlm_example, make_nsp_pair, pretrain, MaskMode, MlmExample, NspPair, PretrainConfig,
    PretrainModel, SentenceCorpus,
};
pub use registry::{ModelRegistry, Predictor};
pub use wordpiece::{decode, encode, tokenize, train_vocab, TokenSequence, Vocabulary};
