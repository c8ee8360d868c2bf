//! Dataset ingestion, task registry, label normalization and splitting.
//!
//! Input files are TSV (`text<TAB>label[<TAB>user_id]`, UTF-8, no header
//! unless requested) or JSONL (objects with `text`, `label` and optional
//! `user_id`). Ingestion normalizes text per the task's configuration,
//! applies the retweet and minimum-word filters, and canonicalizes labels;
//! for sentiment it applies the polar mapping and drops non-polar rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::finetune::TrainConfig;
use crate::normalize::{self, NormalizeConfig, NormalizeOverrides};

/// The six classification tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskName {
    Age,
    Gender,
    Dialect,
    Emotion,
    Irony,
    Sentiment,
}

impl TaskName {
    pub const ALL: [TaskName; 6] = [
        TaskName::Age,
        TaskName::Gender,
        TaskName::Dialect,
        TaskName::Emotion,
        TaskName::Irony,
        TaskName::Sentiment,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskName::Age => "age",
            TaskName::Gender => "gender",
            TaskName::Dialect => "dialect",
            TaskName::Emotion => "emotion",
            TaskName::Irony => "irony",
            TaskName::Sentiment => "sentiment",
        }
    }
}

impl fmt::Display for TaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "age" => Ok(TaskName::Age),
            "gender" => Ok(TaskName::Gender),
            "dialect" => Ok(TaskName::Dialect),
            "emotion" => Ok(TaskName::Emotion),
            "irony" => Ok(TaskName::Irony),
            "sentiment" => Ok(TaskName::Sentiment),
            other => Err(Error::UnknownTask {
                requested: other.to_string(),
                available: TaskName::ALL.iter().map(|t| t.to_string()).collect(),
            }),
        }
    }
}

/// A named task: its closed label set plus normalization and training
/// configuration.
#[derive(Debug, Clone)]
pub struct TaskSpec {
    pub name: TaskName,
    pub labels: Vec<String>,
    pub normalize: NormalizeConfig,
    pub train: TrainConfig,
}

impl TaskSpec {
    /// The built-in task definitions. Dialect has no fixed label inventory;
    /// its labels come from a dataset manifest via [`TaskSpec::with_labels`].
    pub fn builtin(name: TaskName) -> TaskSpec {
        let labels: Vec<String> = match name {
            TaskName::Age => vec!["under-25", "25-to-34", "35-and-up"],
            TaskName::Gender => vec!["male", "female"],
            TaskName::Dialect => vec![],
            TaskName::Emotion => vec![
                "anger",
                "anticipation",
                "disgust",
                "fear",
                "joy",
                "sadness",
                "surprise",
                "trust",
            ],
            TaskName::Irony => vec!["ironic", "non-ironic"],
            TaskName::Sentiment => vec!["positive", "negative"],
        }
        .into_iter()
        .map(String::from)
        .collect();

        // Repetition squashing and the short/retweet filters apply to the
        // age and gender source data; the other corpora ship pre-cleaned.
        let mut normalize = NormalizeConfig::default();
        match name {
            TaskName::Age | TaskName::Gender => {
                normalize.squash_repeats = true;
                normalize.min_words = 3;
                normalize.drop_retweets = true;
            }
            TaskName::Emotion => {
                normalize.min_words = 3;
            }
            _ => {}
        }

        let mut train = TrainConfig::default();
        match name {
            TaskName::Dialect => train.epochs = 10,
            TaskName::Sentiment => train.learning_rate = 2e-6,
            _ => {}
        }

        TaskSpec {
            name,
            labels,
            normalize,
            train,
        }
    }

    pub fn builtin_with_overrides(name: TaskName, overrides: &NormalizeOverrides) -> Result<TaskSpec> {
        let mut spec = TaskSpec::builtin(name);
        overrides.apply(name.as_str(), &mut spec.normalize)?;
        Ok(spec)
    }

    /// Replace the label inventory (used for manifest-driven dialect sets).
    pub fn with_labels(mut self, labels: Vec<String>) -> TaskSpec {
        self.labels = labels;
        self
    }

    /// Canonicalize a raw label: case-insensitive match against the label
    /// set plus the documented per-task aliases. Sentiment goes through
    /// [`normalize_sentiment_label`] instead.
    pub fn canonical_label(&self, raw: &str) -> Option<String> {
        let lowered = raw.trim().to_lowercase();
        let aliased = match (self.name, lowered.as_str()) {
            (TaskName::Age, "25-to34") => "25-to-34",
            (TaskName::Age, "above-35") => "35-and-up",
            (TaskName::Emotion, "happy") => "joy",
            (TaskName::Emotion, "sad") => "sadness",
            (TaskName::Irony, "non_ironic" | "nonironic" | "not-ironic") => "non-ironic",
            _ => lowered.as_str(),
        };
        self.labels.iter().find(|l| l.as_str() == aliased).cloned()
    }
}

/// Outcome of the polar sentiment mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentimentLabel {
    Positive,
    Negative,
    Excluded,
}

/// Map raw sentiment annotations onto the binary set, case-insensitively:
/// positive/pos/high-pos become `positive`, negative/neg/high-neg become
/// `negative`, and everything else (obj, mixed, neut, neutral, …) is
/// excluded.
pub fn normalize_sentiment_label(raw: &str) -> SentimentLabel {
    match raw.trim().to_lowercase().as_str() {
        "positive" | "pos" | "high-pos" => SentimentLabel::Positive,
        "negative" | "neg" | "high-neg" => SentimentLabel::Negative,
        _ => SentimentLabel::Excluded,
    }
}

/// One labeled text with optional user and source-corpus attribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextSample {
    pub text: String,
    pub label: String,
    pub user_id: Option<String>,
    pub source: Option<String>,
}

/// A dataset bound to a task label set.
#[derive(Debug, Clone, Default)]
pub struct LabeledDataset {
    pub samples: Vec<TextSample>,
    pub label_set: Vec<String>,
}

impl LabeledDataset {
    pub fn new(label_set: Vec<String>) -> Self {
        LabeledDataset {
            samples: Vec::new(),
            label_set,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of a label within the owning label set.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_set.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Tsv,
    Jsonl,
}

impl FromStr for FileFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(FileFormat::Tsv),
            "jsonl" => Ok(FileFormat::Jsonl),
            other => Err(Error::InvalidConfig(format!(
                "unknown file format {other:?} (expected tsv or jsonl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Skip the first line of a TSV file.
    pub has_header: bool,
}

#[derive(serde::Deserialize)]
struct JsonRecord {
    text: String,
    label: String,
    #[serde(default)]
    user_id: Option<String>,
}

/// Parse, normalize and filter a dataset file against a task definition.
pub fn ingest(path: &Path, format: FileFormat, task: &TaskSpec) -> Result<LabeledDataset> {
    ingest_with_options(path, format, task, &IngestOptions::default())
}

pub fn ingest_with_options(
    path: &Path,
    format: FileFormat,
    task: &TaskSpec,
    options: &IngestOptions,
) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned());
    let mut dataset = LabeledDataset::new(task.labels.clone());

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if idx == 0 && options.has_header && format == FileFormat::Tsv {
            continue;
        }
        let (raw_text, raw_label, user_id) = match format {
            FileFormat::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                match fields.as_slice() {
                    [text, label] => (text.to_string(), label.to_string(), None),
                    [text, label, user] => {
                        (text.to_string(), label.to_string(), Some(user.to_string()))
                    }
                    _ => {
                        return Err(Error::MalformedRecord {
                            path: path.to_path_buf(),
                            line: lineno,
                            reason: format!(
                                "expected 2 or 3 tab-separated fields, got {}",
                                fields.len()
                            ),
                        })
                    }
                }
            }
            FileFormat::Jsonl => {
                let record: JsonRecord =
                    serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                        path: path.to_path_buf(),
                        line: lineno,
                        reason: e.to_string(),
                    })?;
                (record.text, record.label, record.user_id)
            }
        };

        let label = match task.name {
            TaskName::Sentiment => {
                if raw_label.trim().parse::<f64>().is_ok() {
                    return Err(Error::RegressionLabel {
                        path: path.to_path_buf(),
                        line: lineno,
                        label: raw_label,
                    });
                }
                match normalize_sentiment_label(&raw_label) {
                    SentimentLabel::Positive => "positive".to_string(),
                    SentimentLabel::Negative => "negative".to_string(),
                    SentimentLabel::Excluded => continue,
                }
            }
            _ => task
                .canonical_label(&raw_label)
                .ok_or_else(|| Error::UnknownLabel {
                    task: task.name.to_string(),
                    label: raw_label.clone(),
                    line: lineno,
                })?,
        };

        if task.normalize.drop_retweets && normalize::is_retweet(&raw_text) {
            continue;
        }
        let normalized = normalize::normalize(&raw_text, &task.normalize);
        if !normalize::passes_min_words(&normalized, task.normalize.min_words) {
            continue;
        }

        dataset.samples.push(TextSample {
            text: normalized,
            label,
            user_id,
            source: source.clone(),
        });
    }
    Ok(dataset)
}

/// Train/dev/test splits of one dataset.
#[derive(Debug, Clone)]
pub struct SplitSet {
    pub train: LabeledDataset,
    pub dev: LabeledDataset,
    pub test: LabeledDataset,
}

/// Largest-remainder apportionment of `total` into three parts.
fn apportion(total: usize, fractions: [f64; 3]) -> [usize; 3] {
    let mut sizes = [0usize; 3];
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(3);
    let mut assigned = 0;
    for (i, f) in fractions.iter().enumerate() {
        let exact = f * total as f64;
        sizes[i] = exact.floor() as usize;
        assigned += sizes[i];
        remainders.push((i, exact - exact.floor()));
    }
    // Distribute leftovers by largest remainder; ties go to the earlier split.
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (i, _) in remainders.iter().take(total - assigned) {
        sizes[*i] += 1;
    }
    sizes
}

/// Shuffle and split a dataset. With `group_by_user`, users (not samples)
/// are apportioned so every sample of one user lands in one split.
pub fn split(
    dataset: &LabeledDataset,
    fractions: (f64, f64, f64),
    seed: u64,
    group_by_user: bool,
) -> Result<SplitSet> {
    let fr = [fractions.0, fractions.1, fractions.2];
    if fr.iter().any(|&f| f <= 0.0) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::BadFractions(fr));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = [
        LabeledDataset::new(dataset.label_set.clone()),
        LabeledDataset::new(dataset.label_set.clone()),
        LabeledDataset::new(dataset.label_set.clone()),
    ];

    if group_by_user {
        let missing = dataset
            .samples
            .iter()
            .filter(|s| s.user_id.is_none())
            .count();
        if missing > 0 {
            return Err(Error::MissingUserIds { missing });
        }
        let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, sample) in dataset.samples.iter().enumerate() {
            by_user
                .entry(sample.user_id.as_deref().unwrap())
                .or_default()
                .push(i);
        }
        let mut users: Vec<&str> = by_user.keys().copied().collect();
        users.shuffle(&mut rng);
        let sizes = apportion(users.len(), fr);
        let mut cursor = 0;
        for (part, &size) in parts.iter_mut().zip(sizes.iter()) {
            for user in &users[cursor..cursor + size] {
                for &i in &by_user[user] {
                    part.samples.push(dataset.samples[i].clone());
                }
            }
            cursor += size;
        }
    } else {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut rng);
        let sizes = apportion(dataset.len(), fr);
        let mut cursor = 0;
        for (part, &size) in parts.iter_mut().zip(sizes.iter()) {
            for &i in &order[cursor..cursor + size] {
                part.samples.push(dataset.samples[i].clone());
            }
            cursor += size;
        }
    }

    let [train, dev, test] = parts;
    Ok(SplitSet { train, dev, test })
}

/// Concatenate datasets with identical label sets, preserving source tags.
pub fn combine(datasets: &[LabeledDataset]) -> Result<LabeledDataset> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::LabelSetMismatch("no datasets given".into()))?;
    let mut out = LabeledDataset::new(first.label_set.clone());
    for ds in datasets {
        if ds.label_set != first.label_set {
            return Err(Error::LabelSetMismatch(format!(
                "{:?} vs {:?}",
                first.label_set, ds.label_set
            )));
        }
        out.samples.extend(ds.samples.iter().cloned());
    }
    Ok(out)
}

/// Per-label counts and percentages, in label-set order. Labels outside the
/// set (impossible after ingest) would be ignored.
pub fn class_distribution(dataset: &LabeledDataset) -> Vec<(String, usize, f64)> {
    if dataset.is_empty() {
        return Vec::new();
    }
    let total = dataset.len() as f64;
    dataset
        .label_set
        .iter()
        .map(|label| {
            let count = dataset.samples.iter().filter(|s| &s.label == label).count();
            (label.clone(), count, 100.0 * count as f64 / total)
        })
        .collect()
}

/// A dataset manifest: task, file paths, format, dialect labels and
/// normalization overrides, as line-oriented `key=value` text.
///
/// ```text
/// task=dialect
/// format=tsv
/// train=data/train.tsv
/// dev=data/dev.tsv
/// test=data/test.tsv
/// labels=egy,gulf,lev,msa
/// normalize.squash_repeats=false
/// normalize.min_words=0
/// ```
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub task: TaskSpec,
    pub format: FileFormat,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::BadManifest {
            path: path.to_path_buf(),
            reason,
        };
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        let mut normalize_lines = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim().to_string();
            if let Some(flag) = key.strip_prefix("normalize.") {
                normalize_lines.push((flag.to_string(), value.trim().to_string()));
            } else {
                fields.insert(key, value.trim().to_string());
            }
        }

        let name: TaskName = fields
            .get("task")
            .ok_or_else(|| bad("missing task".into()))?
            .parse()?;
        let mut task = TaskSpec::builtin(name);
        if let Some(labels) = fields.get("labels") {
            let labels: Vec<String> = labels
                .split(',')
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect();
            let unique: BTreeSet<&String> = labels.iter().collect();
            if unique.len() != labels.len() {
                return Err(bad("duplicate labels".into()));
            }
            task = task.with_labels(labels);
        }
        if name == TaskName::Dialect && task.labels.is_empty() {
            return Err(bad("dialect manifests must declare labels=".into()));
        }
        let overrides = NormalizeOverrides {
            diacritics: None,
            per_task: normalize_lines
                .into_iter()
                .map(|(flag, value)| (name.as_str().to_string(), flag, value))
                .collect(),
        };
        overrides.apply(name.as_str(), &mut task.normalize)?;

        let format: FileFormat = fields
            .get("format")
            .map(|f| f.parse())
            .transpose()?
            .unwrap_or(FileFormat::Tsv);
        let path_of = |key: &str| fields.get(key).map(PathBuf::from);
        Ok(DatasetManifest {
            task,
            format,
            train: path_of("train"),
            dev: path_of("dev"),
            test: path_of("test"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn toy_dataset(n: usize, labels: &[&str]) -> LabeledDataset {
        let mut ds = LabeledDataset::new(labels.iter().map(|s| s.to_string()).collect());
        for i in 0..n {
            ds.samples.push(TextSample {
                text: format!("sample {i}"),
                label: labels[i % labels.len()].to_string(),
                user_id: Some(format!("u{}", i / 10)),
                source: None,
            });
        }
        ds
    }

    #[test]
    fn sentiment_mapping_matches_rule_table() {
        use SentimentLabel::*;
        let cases = [
            ("Positive", Positive),
            ("Pos", Positive),
            ("High-Pos", Positive),
            ("Negative", Negative),
            ("Neg", Negative),
            ("High-Neg", Negative),
            ("obj", Excluded),
            ("mixed", Excluded),
            ("neut", Excluded),
            ("neutral", Excluded),
            ("Subj Mixed", Excluded),
            ("", Excluded),
        ];
        for (raw, expected) in cases {
            assert_eq!(normalize_sentiment_label(raw), expected, "{raw:?}");
        }
    }

    #[test]
    fn ingest_excludes_neutral_sentiment_rows() {
        let f = write_temp("good text here\tPositive\nbad text here\tneutral\nmore bad text\tNeg\n");
        let task = TaskSpec::builtin(TaskName::Sentiment);
        let ds = ingest(f.path(), FileFormat::Tsv, &task).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples[0].label, "positive");
        assert_eq!(ds.samples[1].label, "negative");
    }

    #[test]
    fn ingest_rejects_regression_labels() {
        let f = write_temp("text one\t0.73\n");
        let task = TaskSpec::builtin(TaskName::Sentiment);
        assert!(matches!(
            ingest(f.path(), FileFormat::Tsv, &task),
            Err(Error::RegressionLabel { line: 1, .. })
        ));
    }

    #[test]
    fn ingest_case_folds_labels() {
        let f = write_temp("some tweet text\tMALE\tu1\n");
        let mut task = TaskSpec::builtin(TaskName::Gender);
        task.normalize.min_words = 0;
        let ds = ingest(f.path(), FileFormat::Tsv, &task).unwrap();
        assert_eq!(ds.samples[0].label, "male");
        assert_eq!(ds.samples[0].user_id.as_deref(), Some("u1"));
    }

    #[test]
    fn ingest_reports_unknown_labels_with_line() {
        let f = write_temp("text a\tmale\ntext b\tunknown\n");
        let mut task = TaskSpec::builtin(TaskName::Gender);
        task.normalize.min_words = 0;
        match ingest(f.path(), FileFormat::Tsv, &task) {
            Err(Error::UnknownLabel { line, label, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(label, "unknown");
            }
            other => panic!("expected UnknownLabel, got {other:?}"),
        }
    }

    #[test]
    fn ingest_empty_file_is_empty_dataset() {
        let f = write_temp("");
        let task = TaskSpec::builtin(TaskName::Irony);
        let ds = ingest(f.path(), FileFormat::Tsv, &task).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn ingest_applies_retweet_and_min_words_filters() {
        let f = write_temp(
            "RT @someone: forwarded content here\tmale\n\
             too short\tmale\n\
             this one is long enough\tfemale\n",
        );
        let task = TaskSpec::builtin(TaskName::Gender); // min_words 3, retweets dropped
        let ds = ingest(f.path(), FileFormat::Tsv, &task).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples[0].label, "female");
    }

    #[test]
    fn ingest_jsonl_and_emotion_aliases() {
        let f = write_temp(
            r#"{"text": "first happy tweet text", "label": "happy"}
{"text": "second sad tweet text", "label": "SAD", "user_id": "u9"}
"#,
        );
        let task = TaskSpec::builtin(TaskName::Emotion);
        let ds = ingest(f.path(), FileFormat::Jsonl, &task).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples[0].label, "joy");
        assert_eq!(ds.samples[1].label, "sadness");
        assert_eq!(ds.samples[1].user_id.as_deref(), Some("u9"));
    }

    #[test]
    fn ingest_malformed_tsv_reports_line() {
        let f = write_temp("only one field\n");
        let task = TaskSpec::builtin(TaskName::Irony);
        assert!(matches!(
            ingest(f.path(), FileFormat::Tsv, &task),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn split_exact_division() {
        let ds = toy_dataset(100, &["a", "b"]);
        let s = split(&ds, (0.8, 0.1, 0.1), 42, false).unwrap();
        assert_eq!(s.train.len(), 80);
        assert_eq!(s.dev.len(), 10);
        assert_eq!(s.test.len(), 10);
    }

    #[test]
    fn split_is_deterministic_and_partitioning() {
        let ds = toy_dataset(103, &["a", "b", "c"]);
        let s1 = split(&ds, (0.8, 0.1, 0.1), 7, false).unwrap();
        let s2 = split(&ds, (0.8, 0.1, 0.1), 7, false).unwrap();
        assert_eq!(s1.train.samples, s2.train.samples);
        assert_eq!(s1.dev.samples, s2.dev.samples);
        assert_eq!(s1.test.samples, s2.test.samples);

        let mut all: Vec<&str> = s1
            .train
            .samples
            .iter()
            .chain(&s1.dev.samples)
            .chain(&s1.test.samples)
            .map(|s| s.text.as_str())
            .collect();
        all.sort();
        let mut expected: Vec<&str> = ds.samples.iter().map(|s| s.text.as_str()).collect();
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn split_by_user_keeps_users_whole() {
        let ds = toy_dataset(100, &["a", "b"]); // 10 users × 10 tweets
        let s = split(&ds, (0.8, 0.1, 0.1), 3, true).unwrap();
        let users = |d: &LabeledDataset| -> BTreeSet<String> {
            d.samples.iter().map(|s| s.user_id.clone().unwrap()).collect()
        };
        let (tr, dv, te) = (users(&s.train), users(&s.dev), users(&s.test));
        assert_eq!(tr.len(), 8);
        assert_eq!(dv.len(), 1);
        assert_eq!(te.len(), 1);
        assert!(tr.is_disjoint(&dv));
        assert!(tr.is_disjoint(&te));
        assert!(dv.is_disjoint(&te));
    }

    #[test]
    fn split_by_user_requires_user_ids() {
        let mut ds = toy_dataset(10, &["a", "b"]);
        ds.samples[3].user_id = None;
        assert!(matches!(
            split(&ds, (0.8, 0.1, 0.1), 1, true),
            Err(Error::MissingUserIds { missing: 1 })
        ));
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = toy_dataset(10, &["a", "b"]);
        assert!(matches!(
            split(&ds, (0.8, 0.1, 0.2), 1, false),
            Err(Error::BadFractions(_))
        ));
    }

    #[test]
    fn combine_identity_and_concatenation() {
        let a = toy_dataset(4, &["a", "b"]);
        let b = toy_dataset(6, &["a", "b"]);
        assert_eq!(combine(&[a.clone()]).unwrap().samples, a.samples);
        assert_eq!(combine(&[a.clone(), b.clone()]).unwrap().len(), 10);
        let c = toy_dataset(3, &["a", "c"]);
        assert!(matches!(
            combine(&[a, c]),
            Err(Error::LabelSetMismatch(_))
        ));
    }

    #[test]
    fn class_distribution_counts_and_percentages() {
        let mut ds = LabeledDataset::new(vec!["pos".into(), "neg".into()]);
        for _ in 0..3 {
            ds.samples.push(TextSample {
                text: "x".into(),
                label: "pos".into(),
                user_id: None,
                source: None,
            });
        }
        ds.samples.push(TextSample {
            text: "y".into(),
            label: "neg".into(),
            user_id: None,
            source: None,
        });
        let dist = class_distribution(&ds);
        assert_eq!(dist[0], ("pos".to_string(), 3, 75.0));
        assert_eq!(dist[1], ("neg".to_string(), 1, 25.0));
        let pct_sum: f64 = dist.iter().map(|(_, _, p)| p).sum();
        assert!((pct_sum - 100.0).abs() < 0.01);
        assert!(class_distribution(&LabeledDataset::new(vec![])).is_empty());
    }

    #[test]
    fn class_distribution_is_order_invariant() {
        let mut ds = toy_dataset(9, &["a", "b", "c"]);
        let before = class_distribution(&ds);
        ds.samples.reverse();
        assert_eq!(class_distribution(&ds), before);
    }

    #[test]
    fn manifest_parses_dialect_labels_and_flags() {
        let text = "
task=dialect
format=tsv
train=data/train.tsv
dev=data/dev.tsv
labels=egy,gulf,lev
normalize.min_words=2
";
        let m = DatasetManifest::parse(text, Path::new("m.conf")).unwrap();
        assert_eq!(m.task.name, TaskName::Dialect);
        assert_eq!(m.task.labels, vec!["egy", "gulf", "lev"]);
        assert_eq!(m.task.normalize.min_words, 2);
        assert_eq!(m.train.as_deref(), Some(Path::new("data/train.tsv")));
        assert!(m.test.is_none());
    }

    #[test]
    fn manifest_requires_dialect_labels() {
        assert!(DatasetManifest::parse("task=dialect\n", Path::new("m")).is_err());
    }

    #[test]
    fn builtin_label_sets() {
        assert_eq!(
            TaskSpec::builtin(TaskName::Age).labels,
            vec!["under-25", "25-to-34", "35-and-up"]
        );
        assert_eq!(TaskSpec::builtin(TaskName::Emotion).labels.len(), 8);
        assert!(TaskSpec::builtin(TaskName::Age).normalize.squash_repeats);
        assert!(!TaskSpec::builtin(TaskName::Irony).normalize.squash_repeats);
        assert_eq!(TaskSpec::builtin(TaskName::Dialect).train.epochs, 10);
        assert_eq!(
            TaskSpec::builtin(TaskName::Sentiment).train.learning_rate,
            2e-6
        );
    }

    #[test]
    fn age_alias_canonicalization() {
        let task = TaskSpec::builtin(TaskName::Age);
        assert_eq!(task.canonical_label("25-to34").as_deref(), Some("25-to-34"));
        assert_eq!(task.canonical_label("Above-35").as_deref(), Some("35-and-up"));
        assert_eq!(task.canonical_label("UNDER-25").as_deref(), Some("under-25"));
        assert_eq!(task.canonical_label("ancient"), None);
    }
}
