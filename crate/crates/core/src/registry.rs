//! On-disk model registry and the frozen prediction handle.
//!
//! Layout: `<root>/<task>/model.ckpt` (weights + architecture),
//! `vocab.txt` (one token per line) and `task.manifest` (task definition
//! as key=value text). The registry root comes from the `TASNIF_REGISTRY`
//! environment variable unless a path is given explicitly; the fallback is
//! `./models`. Every artifact is validated at load time so prediction
//! itself cannot fail.

use std::path::{Path, PathBuf};

use rand::SeedableRng;

use crate::checkpoint::Checkpoint;
use crate::data::{TaskName, TaskSpec};
use crate::error::{Error, Result};
use crate::finetune::{self, ClassifierModel, PredictionResult, SelfTrainConfig, TrainConfig};
use crate::nn::encoder::{EncoderConfig, EncoderParams, PositionalMode};
use crate::nn::gru::{GruConfig, GruModel, GruParams};
use crate::nn::{Activation, LinearParams};
use crate::normalize::NormalizeConfig;
use crate::wordpiece::Vocabulary;

pub const ENV_REGISTRY: &str = "TASNIF_REGISTRY";
const CHECKPOINT_FILE: &str = "model.ckpt";
const VOCAB_FILE: &str = "vocab.txt";
const MANIFEST_FILE: &str = "task.manifest";

/// Registry root: `$TASNIF_REGISTRY` or `./models`.
pub fn default_root() -> PathBuf {
    std::env::var_os(ENV_REGISTRY)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("models"))
}

/// A directory of per-task model artifacts.
#[derive(Debug, Clone)]
pub struct ModelRegistry {
    root: PathBuf,
}

/// The model behind a predictor.
enum PredictorKind {
    Encoder {
        config: EncoderConfig,
        model: ClassifierModel,
        vocab: Vocabulary,
    },
    Gru(GruModel),
}

/// A frozen, thread-safe prediction handle for one task.
pub struct Predictor {
    task: TaskSpec,
    kind: PredictorKind,
}

impl Predictor {
    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    /// Predict one text. Normalization, tokenization and truncation follow
    /// the task configuration; the result carries the full distribution.
    pub fn predict(&self, text: &str) -> PredictionResult {
        match &self.kind {
            PredictorKind::Encoder {
                config,
                model,
                vocab,
            } => finetune::predict(model, config, &self.task, vocab, text),
            PredictorKind::Gru(model) => {
                let normalized = crate::normalize::normalize(text, &self.task.normalize);
                model.predict(&normalized)
            }
        }
    }

    /// Predict every non-blank line of a file. Returns (0-based input line
    /// number, prediction); blank lines are skipped and logged. Invalid
    /// UTF-8 is replaced with U+FFFD rather than rejected.
    pub fn predict_file(&self, path: &Path) -> Result<Vec<(usize, PredictionResult)>> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(e) => {
                log::warn!(
                    "{}: invalid UTF-8, replacing offending bytes",
                    path.display()
                );
                String::from_utf8_lossy(e.as_bytes()).into_owned()
            }
        };
        Ok(self.predict_lines(text.lines()))
    }

    /// As [`Predictor::predict_file`], over any line iterator.
    pub fn predict_lines<'a>(
        &self,
        lines: impl IntoIterator<Item = &'a str>,
    ) -> Vec<(usize, PredictionResult)> {
        let mut out = Vec::new();
        for (index, line) in lines.into_iter().enumerate() {
            if line.trim().is_empty() {
                log::debug!("skipping blank input line {index}");
                continue;
            }
            out.push((index, self.predict(line)));
        }
        out
    }
}

fn bool_str(v: bool) -> &'static str {
    if v {
        "true"
    } else {
        "false"
    }
}

fn manifest_text(task: &TaskSpec, model_kind: &str) -> String {
    let diacritics: Vec<String> = task
        .normalize
        .diacritics
        .iter()
        .map(|c| format!("{:04X}", *c as u32))
        .collect();
    format!(
        "task={}\nmodel={}\nlabels={}\n\
         train.learning_rate={}\ntrain.epochs={}\ntrain.batch_size={}\n\
         train.max_len={}\ntrain.selection_metric={}\ntrain.seed={}\n\
         normalize.strip_usernames={}\nnormalize.strip_urls={}\n\
         normalize.strip_diacritics={}\nnormalize.squash_repeats={}\n\
         normalize.min_words={}\nnormalize.drop_retweets={}\n\
         diacritics={}\n",
        task.name,
        model_kind,
        task.labels.join(","),
        task.train.learning_rate,
        task.train.epochs,
        task.train.batch_size,
        task.train.max_len,
        task.train.selection_metric,
        task.train.seed,
        bool_str(task.normalize.strip_usernames),
        bool_str(task.normalize.strip_urls),
        bool_str(task.normalize.strip_diacritics),
        bool_str(task.normalize.squash_repeats),
        task.normalize.min_words,
        bool_str(task.normalize.drop_retweets),
        diacritics.join(","),
    )
}

fn parse_manifest(path: &Path) -> Result<(TaskSpec, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::BadManifest {
        path: path.to_path_buf(),
        reason,
    };
    let mut fields = std::collections::BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed line {line:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |key: &str| -> Result<String> {
        fields
            .get(key)
            .cloned()
            .ok_or_else(|| bad(format!("missing key {key:?}")))
    };
    let name: TaskName = get("task")?.parse()?;
    let model_kind = get("model")?;
    let labels: Vec<String> = get("labels")?
        .split(',')
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();
    if labels.is_empty() {
        return Err(bad("empty label set".into()));
    }
    let parse_field = |key: &str| -> Result<String> { get(key) };
    let train = TrainConfig {
        learning_rate: parse_field("train.learning_rate")?
            .parse()
            .map_err(|_| bad("bad train.learning_rate".into()))?,
        epochs: parse_field("train.epochs")?
            .parse()
            .map_err(|_| bad("bad train.epochs".into()))?,
        batch_size: parse_field("train.batch_size")?
            .parse()
            .map_err(|_| bad("bad train.batch_size".into()))?,
        max_len: parse_field("train.max_len")?
            .parse()
            .map_err(|_| bad("bad train.max_len".into()))?,
        selection_metric: parse_field("train.selection_metric")?
            .parse()
            .map_err(|e| bad(e))?,
        seed: parse_field("train.seed")?
            .parse()
            .map_err(|_| bad("bad train.seed".into()))?,
    };
    let parse_bool = |key: &str| -> Result<bool> {
        parse_field(key)?
            .parse()
            .map_err(|_| bad(format!("bad boolean for {key}")))
    };
    let mut normalize = NormalizeConfig {
        strip_usernames: parse_bool("normalize.strip_usernames")?,
        strip_urls: parse_bool("normalize.strip_urls")?,
        strip_diacritics: parse_bool("normalize.strip_diacritics")?,
        squash_repeats: parse_bool("normalize.squash_repeats")?,
        min_words: parse_field("normalize.min_words")?
            .parse()
            .map_err(|_| bad("bad normalize.min_words".into()))?,
        drop_retweets: parse_bool("normalize.drop_retweets")?,
        ..NormalizeConfig::default()
    };
    if let Some(spec) = fields.get("diacritics") {
        normalize.diacritics = spec
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                u32::from_str_radix(s.trim(), 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| bad(format!("bad diacritic code point {s:?}")))
            })
            .collect::<Result<_>>()?;
    }
    train.validate()?;
    Ok((
        TaskSpec {
            name,
            labels,
            normalize,
            train,
        },
        model_kind,
    ))
}

fn encoder_config_entries(config: &EncoderConfig) -> Vec<(String, String)> {
    vec![
        ("model".into(), "encoder".into()),
        ("num_layers".into(), config.num_layers.to_string()),
        ("d_model".into(), config.d_model.to_string()),
        ("num_heads".into(), config.num_heads.to_string()),
        ("d_ff".into(), config.d_ff.to_string()),
        ("max_positions".into(), config.max_positions.to_string()),
        ("vocab_size".into(), config.vocab_size.to_string()),
        ("dropout_rate".into(), config.dropout_rate.to_string()),
        ("positional".into(), config.positional.to_string()),
        ("activation".into(), config.activation.to_string()),
    ]
}

fn encoder_config_from(ckpt: &Checkpoint, path: &Path) -> Result<EncoderConfig> {
    Ok(EncoderConfig {
        num_layers: ckpt.config_parse(path, "num_layers")?,
        d_model: ckpt.config_parse(path, "d_model")?,
        num_heads: ckpt.config_parse(path, "num_heads")?,
        d_ff: ckpt.config_parse(path, "d_ff")?,
        max_positions: ckpt.config_parse(path, "max_positions")?,
        vocab_size: ckpt.config_parse(path, "vocab_size")?,
        dropout_rate: ckpt.config_parse(path, "dropout_rate")?,
        positional: ckpt.config_parse::<PositionalMode>(path, "positional")?,
        activation: ckpt.config_parse::<Activation>(path, "activation")?,
    })
}

impl ModelRegistry {
    pub fn open(root: impl Into<PathBuf>) -> Self {
        ModelRegistry { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn task_dir(&self, task: &str) -> PathBuf {
        self.root.join(task)
    }

    /// Registered task names (directories holding a manifest), sorted.
    pub fn tasks(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Ok(entries) = std::fs::read_dir(&self.root) {
            for entry in entries.flatten() {
                let path = entry.path();
                if path.is_dir() && path.join(MANIFEST_FILE).is_file() {
                    if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                        out.push(name.to_string());
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Load a frozen predictor, validating every artifact now rather than
    /// at prediction time.
    pub fn load(&self, task: &str) -> Result<Predictor> {
        let dir = self.task_dir(task);
        let manifest_path = dir.join(MANIFEST_FILE);
        if !manifest_path.is_file() {
            return Err(Error::UnknownTask {
                requested: task.to_string(),
                available: self.tasks(),
            });
        }
        let (spec, model_kind) = parse_manifest(&manifest_path)?;
        let ckpt_path = dir.join(CHECKPOINT_FILE);
        if !ckpt_path.is_file() {
            return Err(Error::MissingArtifact { path: ckpt_path });
        }
        let ckpt = Checkpoint::read(&ckpt_path)?;
        let vocab_path = dir.join(&ckpt.vocab_ref);
        if !vocab_path.is_file() {
            return Err(Error::MissingArtifact { path: vocab_path });
        }

        let stored_kind: String = ckpt.config_parse(&ckpt_path, "model")?;
        if stored_kind != model_kind {
            return Err(Error::CorruptCheckpoint {
                path: ckpt_path,
                reason: format!(
                    "manifest says model={model_kind} but checkpoint says {stored_kind}"
                ),
            });
        }
        let num_classes: usize = ckpt.config_parse(&ckpt_path, "num_classes")?;
        if num_classes != spec.labels.len() {
            return Err(Error::CorruptCheckpoint {
                path: ckpt_path,
                reason: format!(
                    "checkpoint has {num_classes} classes but the label set has {}",
                    spec.labels.len()
                ),
            });
        }

        let kind = match model_kind.as_str() {
            "encoder" => {
                let config = encoder_config_from(&ckpt, &ckpt_path)?;
                config.validate()?;
                let vocab = Vocabulary::read_file(&vocab_path)?;
                if vocab.len() != config.vocab_size {
                    return Err(Error::CorruptCheckpoint {
                        path: ckpt_path,
                        reason: format!(
                            "vocabulary has {} entries but checkpoint expects {}",
                            vocab.len(),
                            config.vocab_size
                        ),
                    });
                }
                // Seed value irrelevant: every tensor is overwritten.
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
                let mut model = ClassifierModel {
                    encoder: EncoderParams::init(&config, &mut rng),
                    head: LinearParams::init(config.d_model, num_classes, &mut rng),
                };
                ckpt.load_into(&ckpt_path, &mut model)?;
                PredictorKind::Encoder {
                    config,
                    model,
                    vocab,
                }
            }
            "gru" => {
                let config = GruConfig {
                    hidden_units: ckpt.config_parse(&ckpt_path, "hidden_units")?,
                    dropout: ckpt.config_parse(&ckpt_path, "dropout")?,
                    embed_dim: ckpt.config_parse(&ckpt_path, "embed_dim")?,
                    max_words: ckpt.config_parse(&ckpt_path, "max_words")?,
                    vocab_top_k: ckpt.config_parse(&ckpt_path, "vocab_top_k")?,
                    batch_size: ckpt.config_parse(&ckpt_path, "batch_size")?,
                    learning_rate: ckpt.config_parse(&ckpt_path, "learning_rate")?,
                    epochs: ckpt.config_parse(&ckpt_path, "epochs")?,
                };
                config.validate()?;
                let words = read_word_list(&vocab_path)?;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
                let mut params =
                    GruParams::init(words.len() + 2, &config, num_classes, &mut rng);
                ckpt.load_into(&ckpt_path, &mut params)?;
                PredictorKind::Gru(GruModel::new(
                    config,
                    words,
                    spec.labels.clone(),
                    params,
                ))
            }
            other => {
                return Err(Error::CorruptCheckpoint {
                    path: ckpt_path,
                    reason: format!("unknown model kind {other:?}"),
                })
            }
        };
        Ok(Predictor { task: spec, kind })
    }

    /// Register a fine-tuned encoder model under its task name.
    pub fn save_encoder(
        &self,
        task: &TaskSpec,
        config: &EncoderConfig,
        model: &ClassifierModel,
        vocab: &Vocabulary,
    ) -> Result<PathBuf> {
        let dir = self.task_dir(task.name.as_str());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        vocab.write_file(&dir.join(VOCAB_FILE))?;
        let mut entries = encoder_config_entries(config);
        entries.push(("num_classes".into(), task.labels.len().to_string()));
        let ckpt = Checkpoint {
            config: entries,
            vocab_ref: VOCAB_FILE.to_string(),
            tensors: Checkpoint::snapshot(model),
        };
        ckpt.write(&dir.join(CHECKPOINT_FILE))?;
        std::fs::write(dir.join(MANIFEST_FILE), manifest_text(task, "encoder"))
            .map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    /// Register a trained GRU baseline under its task name.
    pub fn save_gru(&self, task: &TaskSpec, model: &GruModel) -> Result<PathBuf> {
        let dir = self.task_dir(task.name.as_str());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_word_list(&dir.join(VOCAB_FILE), &model.words)?;
        let config = &model.config;
        let ckpt = Checkpoint {
            config: vec![
                ("model".into(), "gru".into()),
                ("hidden_units".into(), config.hidden_units.to_string()),
                ("dropout".into(), config.dropout.to_string()),
                ("embed_dim".into(), config.embed_dim.to_string()),
                ("max_words".into(), config.max_words.to_string()),
                ("vocab_top_k".into(), config.vocab_top_k.to_string()),
                ("batch_size".into(), config.batch_size.to_string()),
                ("learning_rate".into(), config.learning_rate.to_string()),
                ("epochs".into(), config.epochs.to_string()),
                ("num_classes".into(), model.labels.len().to_string()),
            ],
            vocab_ref: VOCAB_FILE.to_string(),
            tensors: Checkpoint::snapshot(&model.params),
        };
        ckpt.write(&dir.join(CHECKPOINT_FILE))?;
        std::fs::write(dir.join(MANIFEST_FILE), manifest_text(task, "gru"))
            .map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    /// Write the provenance manifest stored alongside every checkpoint:
    /// the task, training configuration, data paths and seed of a run.
    pub fn write_run_manifest(
        &self,
        task: &TaskSpec,
        data_paths: &[(&str, &Path)],
        self_train: Option<&SelfTrainConfig>,
    ) -> Result<PathBuf> {
        let dir = self.task_dir(task.name.as_str());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut text = manifest_text(task, "run");
        for (key, path) in data_paths {
            text.push_str(&format!("data.{}={}\n", key, path.display()));
        }
        if let Some(st) = self_train {
            text.push_str(&format!(
                "selftrain.confidence_threshold={}\nselftrain.top_percent={}\n\
                 selftrain.iterations={}\nselftrain.warm_start={}\n",
                st.confidence_threshold, st.top_percent, st.iterations, st.warm_start
            ));
        }
        let path = dir.join("run.manifest");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// GRU word list files mirror the vocab.txt convention: `[PAD]` and
/// `[UNK]` on the first two lines, then one word per line.
fn write_word_list(path: &Path, words: &[String]) -> Result<()> {
    let mut text = String::from("[PAD]\n[UNK]\n");
    for w in words {
        text.push_str(w);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("[PAD]") || lines.next() != Some("[UNK]") {
        return Err(Error::InvalidVocab(format!(
            "{}: word list must start with [PAD] and [UNK]",
            path.display()
        )));
    }
    Ok(lines.map(|l| l.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledDataset;
    use crate::data::TextSample;
    use crate::nn::gru::train_gru;
    use crate::wordpiece::train_vocab;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_task() -> TaskSpec {
        let mut task = TaskSpec::builtin(TaskName::Sentiment);
        task.train.max_len = 12;
        task.normalize.strip_diacritics = false;
        task
    }

    fn toy_encoder_predictor_dir(dir: &Path) -> (TaskSpec, Vocabulary, EncoderConfig) {
        let corpus = vec!["alpha beta gamma delta".to_string()];
        let vocab = train_vocab(&corpus, 40).unwrap();
        let config = EncoderConfig {
            num_layers: 1,
            d_model: 8,
            num_heads: 2,
            d_ff: 16,
            max_positions: 16,
            vocab_size: vocab.len(),
            dropout_rate: 0.0,
            positional: PositionalMode::Sinusoidal,
            activation: Activation::Gelu,
        };
        let task = toy_task();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = ClassifierModel {
            encoder: EncoderParams::init(&config, &mut rng),
            head: LinearParams::init(config.d_model, 2, &mut rng),
        };
        ModelRegistry::open(dir)
            .save_encoder(&task, &config, &model, &vocab)
            .unwrap();
        (task, vocab, config)
    }

    #[test]
    fn encoder_roundtrip_through_registry() {
        let dir = tempfile::tempdir().unwrap();
        let (_task, _vocab, _config) = toy_encoder_predictor_dir(dir.path());
        let registry = ModelRegistry::open(dir.path());
        assert_eq!(registry.tasks(), vec!["sentiment"]);
        let predictor = registry.load("sentiment").unwrap();
        let a = predictor.predict("alpha beta");
        let b = predictor.predict("alpha beta");
        assert_eq!(a, b);
        let total: f64 = a.distribution.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!(["positive", "negative"].contains(&a.label.as_str()));
    }

    #[test]
    fn two_handles_agree() {
        let dir = tempfile::tempdir().unwrap();
        toy_encoder_predictor_dir(dir.path());
        let registry = ModelRegistry::open(dir.path());
        let p1 = registry.load("sentiment").unwrap();
        let p2 = registry.load("sentiment").unwrap();
        assert_eq!(p1.predict("gamma delta"), p2.predict("gamma delta"));
    }

    #[test]
    fn unknown_task_lists_available() {
        let dir = tempfile::tempdir().unwrap();
        toy_encoder_predictor_dir(dir.path());
        let registry = ModelRegistry::open(dir.path());
        match registry.load("nosuch") {
            Err(Error::UnknownTask {
                requested,
                available,
            }) => {
                assert_eq!(requested, "nosuch");
                assert_eq!(available, vec!["sentiment"]);
            }
            other => panic!("expected UnknownTask, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn corrupt_checkpoint_is_detected_at_load() {
        let dir = tempfile::tempdir().unwrap();
        toy_encoder_predictor_dir(dir.path());
        let ckpt_path = dir.path().join("sentiment").join(CHECKPOINT_FILE);
        let mut bytes = std::fs::read(&ckpt_path).unwrap();
        bytes.truncate(bytes.len() / 2);
        std::fs::write(&ckpt_path, bytes).unwrap();
        let registry = ModelRegistry::open(dir.path());
        assert!(matches!(
            registry.load("sentiment"),
            Err(Error::CorruptCheckpoint { .. })
        ));
    }

    #[test]
    fn missing_vocab_is_detected_at_load() {
        let dir = tempfile::tempdir().unwrap();
        toy_encoder_predictor_dir(dir.path());
        std::fs::remove_file(dir.path().join("sentiment").join(VOCAB_FILE)).unwrap();
        let registry = ModelRegistry::open(dir.path());
        assert!(matches!(
            registry.load("sentiment"),
            Err(Error::MissingArtifact { .. })
        ));
    }

    #[test]
    fn gru_roundtrip_through_registry() {
        let dir = tempfile::tempdir().unwrap();
        let mut train = LabeledDataset::new(vec!["ironic".into(), "non-ironic".into()]);
        for i in 0..20 {
            train.samples.push(TextSample {
                text: if i % 2 == 0 {
                    format!("sarcasm marker text {i}")
                } else {
                    format!("plain serious text {i}")
                },
                label: if i % 2 == 0 { "ironic" } else { "non-ironic" }.into(),
                user_id: None,
                source: None,
            });
        }
        let cfg = GruConfig {
            epochs: 3,
            ..GruConfig::desk_default()
        };
        let result = train_gru(&train, &train, &cfg, 9).unwrap();
        let mut task = TaskSpec::builtin(TaskName::Irony);
        task.normalize.strip_diacritics = false;
        let registry = ModelRegistry::open(dir.path());
        registry.save_gru(&task, &result.model).unwrap();

        let predictor = registry.load("irony").unwrap();
        let direct = result.model.predict("sarcasm marker text 0");
        let loaded = predictor.predict("sarcasm marker text 0");
        assert_eq!(direct.label, loaded.label);
        for ((_, a), (_, b)) in direct.distribution.iter().zip(loaded.distribution.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn run_manifest_written_alongside() {
        let dir = tempfile::tempdir().unwrap();
        let task = toy_task();
        let registry = ModelRegistry::open(dir.path());
        let path = registry
            .write_run_manifest(
                &task,
                &[("train", Path::new("train.tsv")), ("dev", Path::new("dev.tsv"))],
                Some(&SelfTrainConfig::default()),
            )
            .unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.contains("task=sentiment"));
        assert!(text.contains("data.train=train.tsv"));
        assert!(text.contains("selftrain.iterations=3"));
        assert!(text.contains("train.seed=42"));
    }
}
