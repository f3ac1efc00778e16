//! Corpus handling and evaluation: loading labeled texts, splitting them,
//! generating the synthetic benchmark corpus, running a trained policy, and
//! the metric suite.

mod evaluate;
mod metrics;
mod synthetic;

pub use evaluate::{evaluate_policy, TextEvaluation};
pub use metrics::{compute_metrics, metrics_from_evaluations, ClassMetrics, EvalMetrics, Prediction};
pub use synthetic::{first_window_majority_oracle, generate_synthetic_corpus, SyntheticBundle, SyntheticConfig};

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::agent::AgentError;
use crate::env::EnvError;
use crate::featurize::FeaturizeError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// One message per offending file or row, newline-separated.
    #[error("corpus problems:\n{0}")]
    Corpus(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// A labeled text ready for featurization.
#[derive(Clone, Debug)]
pub struct CorpusText {
    /// Stable identifier: relative file path or CSV row.
    pub id: String,
    pub text: String,
    /// Readability level in 1..=num_classes.
    pub level: usize,
}

/// A set of labeled texts with a known class count.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub name: String,
    pub num_classes: usize,
    pub texts: Vec<CorpusText>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One subdirectory per class (named by its level) of UTF-8 .txt files.
    Directory,
    /// A single CSV with header `label,text`.
    Csv,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    /// Texts per class, indexed by level - 1.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for text in &self.texts {
            counts[text.level - 1] += 1;
        }
        counts
    }
}

/// Loads a corpus from disk, collecting every problem (unknown labels,
/// empty texts, malformed rows) into one itemized error.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, EvalError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    let (mut texts, problems) = match format {
        CorpusFormat::Directory => load_directory(path)?,
        CorpusFormat::Csv => load_csv(path)?,
    };
    if !problems.is_empty() {
        return Err(EvalError::Corpus(problems.join("\n")));
    }
    if texts.is_empty() {
        return Err(EvalError::Corpus(format!(
            "{}: no texts found",
            path.display()
        )));
    }

    let num_classes = texts.iter().map(|t| t.level).max().unwrap_or(0);
    let mut counts = vec![0usize; num_classes];
    for text in &texts {
        counts[text.level - 1] += 1;
    }
    let mut missing = String::new();
    for (i, &count) in counts.iter().enumerate() {
        if count == 0 {
            let _ = write!(missing, "no texts with level {}; ", i + 1);
        }
    }
    if !missing.is_empty() {
        return Err(EvalError::Corpus(format!(
            "{}: levels must cover 1..={num_classes} ({})",
            path.display(),
            missing.trim_end_matches("; ")
        )));
    }
    texts.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Corpus {
        name,
        num_classes,
        texts,
    })
}

fn load_directory(path: &Path) -> Result<(Vec<CorpusText>, Vec<String>), EvalError> {
    let io_err = |p: &Path, e: std::io::Error| EvalError::Io {
        path: p.display().to_string(),
        source: e,
    };
    let mut texts = Vec::new();
    let mut problems = Vec::new();
    let mut class_dirs = Vec::new();
    for entry in std::fs::read_dir(path).map_err(|e| io_err(path, e))? {
        let entry = entry.map_err(|e| io_err(path, e))?;
        let entry_path = entry.path();
        if !entry_path.is_dir() {
            continue;
        }
        let dir_name = entry.file_name().to_string_lossy().into_owned();
        match dir_name.parse::<usize>() {
            Ok(level) if level >= 1 => class_dirs.push((level, entry_path)),
            _ => problems.push(format!(
                "{}: unknown label {dir_name:?} (class directories must be named 1, 2, ...)",
                entry_path.display()
            )),
        }
    }
    class_dirs.sort();

    for (level, dir) in class_dirs {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
            let entry = entry.map_err(|e| io_err(&dir, e))?;
            let file = entry.path();
            if file.extension().is_some_and(|e| e == "txt") {
                files.push(file);
            }
        }
        files.sort();
        for file in files {
            let display = file.display().to_string();
            match std::fs::read_to_string(&file) {
                Ok(content) if content.trim().is_empty() => {
                    problems.push(format!("{display}: empty file"));
                }
                Ok(content) => texts.push(CorpusText {
                    id: format!(
                        "{level}/{}",
                        file.file_name().unwrap_or_default().to_string_lossy()
                    ),
                    text: content,
                    level,
                }),
                Err(e) => problems.push(format!("{display}: {e}")),
            }
        }
    }
    Ok((texts, problems))
}

fn load_csv(path: &Path) -> Result<(Vec<CorpusText>, Vec<String>), EvalError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => EvalError::Io {
                path: display.clone(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => EvalError::Corpus(format!("{display}: {e}")),
        })?;

    let mut problems = Vec::new();
    match reader.headers() {
        Ok(headers) => {
            let expected = ["label", "text"];
            if headers.len() != 2 || headers.iter().zip(expected).any(|(h, e)| h != e) {
                problems.push(format!(
                    "{display}: header must be `label,text`, found {headers:?}"
                ));
            }
        }
        Err(e) => problems.push(format!("{display}: {e}")),
    }

    let mut texts = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(record) => record,
            Err(e) => {
                problems.push(format!("{display}: {e}"));
                continue;
            }
        };
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or_default();
        if record.len() != 2 {
            problems.push(format!(
                "{display}:{line}: expected 2 fields, found {}",
                record.len()
            ));
            continue;
        }
        let level = match record[0].trim().parse::<usize>() {
            Ok(level) if level >= 1 => level,
            _ => {
                problems.push(format!(
                    "{display}:{line}: unknown label {:?}",
                    &record[0]
                ));
                continue;
            }
        };
        let text = record[1].to_string();
        if text.trim().is_empty() {
            problems.push(format!("{display}:{line}: empty text"));
            continue;
        }
        texts.push(CorpusText {
            id: format!("row{line:05}"),
            text,
            level,
        });
    }
    Ok((texts, problems))
}

/// Splits a corpus into train and test sets, stratified by class. Each
/// class is shuffled deterministically under the seed, then the first
/// floor(fraction * n) texts go to train. fraction = 1.0 keeps everything
/// for training and leaves the test set empty.
pub fn split_corpus(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus), EvalError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(EvalError::InvalidArgument(format!(
            "split fraction must be in (0, 1], got {fraction}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for level in 1..=corpus.num_classes {
        let mut members: Vec<&CorpusText> =
            corpus.texts.iter().filter(|t| t.level == level).collect();
        members.shuffle(&mut rng);
        let take = ((members.len() as f64) * fraction).floor() as usize;
        for (i, text) in members.into_iter().enumerate() {
            if i < take {
                train.push(text.clone());
            } else {
                test.push(text.clone());
            }
        }
    }
    if test.is_empty() {
        log::warn!("split fraction {fraction} leaves the test set empty");
    }
    train.sort_by(|a, b| a.id.cmp(&b.id));
    test.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((
        Corpus {
            name: format!("{}-train", corpus.name),
            num_classes: corpus.num_classes,
            texts: train,
        },
        Corpus {
            name: format!("{}-test", corpus.name),
            num_classes: corpus.num_classes,
            texts: test,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(path: &Path, content: &str) {
        fs::write(path, content).unwrap();
    }

    #[test]
    fn directory_layout_loads_all_classes() {
        let dir = tempfile::tempdir().unwrap();
        for level in 1..=3 {
            let class_dir = dir.path().join(level.to_string());
            fs::create_dir(&class_dir).unwrap();
            write(&class_dir.join("a.txt"), "Some words here.");
            write(&class_dir.join("b.txt"), "More words there.");
        }
        let corpus = load_corpus(dir.path(), CorpusFormat::Directory).unwrap();
        assert_eq!(corpus.num_classes, 3);
        assert_eq!(corpus.len(), 6);
        assert_eq!(corpus.class_counts(), vec![2, 2, 2]);
    }

    #[test]
    fn directory_problems_are_itemized() {
        let dir = tempfile::tempdir().unwrap();
        let one = dir.path().join("1");
        fs::create_dir(&one).unwrap();
        write(&one.join("ok.txt"), "Fine text.");
        write(&one.join("empty.txt"), "   \n");
        fs::create_dir(dir.path().join("mystery")).unwrap();
        let err = load_corpus(dir.path(), CorpusFormat::Directory).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("empty.txt"), "{message}");
        assert!(message.contains("mystery"), "{message}");
    }

    #[test]
    fn missing_level_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for level in [1usize, 3] {
            let class_dir = dir.path().join(level.to_string());
            fs::create_dir(&class_dir).unwrap();
            write(&class_dir.join("a.txt"), "Words.");
        }
        let err = load_corpus(dir.path(), CorpusFormat::Directory).unwrap_err();
        assert!(err.to_string().contains("level 2"), "{err}");
    }

    #[test]
    fn csv_loads_rows() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("corpus.csv");
        write(
            &file,
            "label,text\n1,\"First text, quoted.\"\n1,Second text.\n2,Third text.\n2,Fourth.\n2,Fifth.\n",
        );
        let corpus = load_corpus(&file, CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.len(), 5);
        assert_eq!(corpus.num_classes, 2);
        assert_eq!(corpus.name, "corpus");
        assert!(corpus.texts[0].text.contains("quoted"));
    }

    #[test]
    fn csv_problems_cite_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("bad.csv");
        write(&file, "label,text\n1,Good one.\nseven,Mystery label.\n2,\n");
        let err = load_corpus(&file, CorpusFormat::Csv).unwrap_err();
        let message = err.to_string();
        assert!(message.contains(":3: unknown label"), "{message}");
        assert!(message.contains(":4: empty text"), "{message}");
    }

    fn numbered_corpus(per_class: usize, classes: usize) -> Corpus {
        let mut texts = Vec::new();
        for level in 1..=classes {
            for i in 0..per_class {
                texts.push(CorpusText {
                    id: format!("{level}-{i:03}"),
                    text: format!("text {level} {i}"),
                    level,
                });
            }
        }
        Corpus {
            name: "numbered".to_string(),
            num_classes: classes,
            texts,
        }
    }

    #[test]
    fn split_is_stratified_and_exhaustive() {
        let corpus = numbered_corpus(100, 3);
        let (train, test) = split_corpus(&corpus, 0.8, 17).unwrap();
        assert_eq!(train.class_counts(), vec![80, 80, 80]);
        assert_eq!(test.class_counts(), vec![20, 20, 20]);
        let mut ids: Vec<&str> = train
            .texts
            .iter()
            .chain(&test.texts)
            .map(|t| t.id.as_str())
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), corpus.len(), "partition must be disjoint and exhaustive");
    }

    #[test]
    fn split_is_deterministic_under_the_seed() {
        let corpus = numbered_corpus(10, 2);
        let (train_a, test_a) = split_corpus(&corpus, 0.8, 5).unwrap();
        let (train_b, test_b) = split_corpus(&corpus, 0.8, 5).unwrap();
        let ids = |c: &Corpus| c.texts.iter().map(|t| t.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&train_a), ids(&train_b));
        assert_eq!(ids(&test_a), ids(&test_b));
        let (train_c, _) = split_corpus(&corpus, 0.8, 6).unwrap();
        assert_ne!(ids(&train_a), ids(&train_c), "different seeds should differ");
    }

    #[test]
    fn full_fraction_empties_the_test_set() {
        let corpus = numbered_corpus(5, 2);
        let (train, test) = split_corpus(&corpus, 1.0, 1).unwrap();
        assert_eq!(train.len(), 10);
        assert!(test.is_empty());
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let corpus = numbered_corpus(5, 2);
        assert!(split_corpus(&corpus, 0.0, 1).is_err());
        assert!(split_corpus(&corpus, 1.5, 1).is_err());
    }
}
