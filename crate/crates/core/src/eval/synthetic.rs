//! Synthetic benchmark corpus: K classes over disjoint vocabulary bands
//! with separated embedding clusters and distinct frequency bands, so the
//! class of a text is decodable from any 5-token window. Used as the
//! desk-scale stand-in for real readability corpora.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use super::{Corpus, CorpusText, EvalError};
use crate::featurize::tokenize;

/// Embedding width expected by the network input (105 = 100 + 5 n-gram
/// features).
const EMBED_DIM: usize = 100;

/// Sentence lengths are drawn uniformly from this token range.
const SENTENCE_TOKENS: (usize, usize) = (8, 12);

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub texts_per_class: usize,
    /// Inclusive bounds on text length in tokens.
    pub length_range: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_classes: 3,
            texts_per_class: 200,
            length_range: (15, 60),
            seed: 0,
        }
    }
}

/// The generated corpus plus the resource files written for it.
#[derive(Debug)]
pub struct SyntheticBundle {
    pub corpus: Corpus,
    pub corpus_path: PathBuf,
    pub embeddings_path: PathBuf,
    pub ngrams_path: PathBuf,
}

/// Vocabulary size for a class band; higher levels get exponentially more
/// distinct tokens, mimicking vocabulary growth with text difficulty.
fn vocab_size(class: usize) -> usize {
    8usize << (2 * (class - 1))
}

/// Base unigram count for a class band; lower levels read as more frequent.
fn count_base(class: usize) -> u64 {
    (1000u64 >> (2 * (class - 1))).max(2)
}

fn token_name(class: usize, index: usize) -> String {
    format!("c{class}w{index:04}")
}

/// Generates the corpus and writes `corpus.csv`, `embeddings.txt`, and
/// `ngrams.tsv` into `out_dir`. Equal seeds give byte-identical files.
pub fn generate_synthetic_corpus(
    config: &SyntheticConfig,
    out_dir: &Path,
) -> Result<SyntheticBundle, EvalError> {
    if config.num_classes < 2 {
        return Err(EvalError::InvalidArgument(
            "need at least two classes".to_string(),
        ));
    }
    if config.texts_per_class == 0 {
        return Err(EvalError::InvalidArgument(
            "texts_per_class must be at least 1".to_string(),
        ));
    }
    let (min_len, max_len) = config.length_range;
    if min_len < 5 || min_len > max_len {
        return Err(EvalError::InvalidArgument(format!(
            "length range ({min_len}, {max_len}) must satisfy 5 <= min <= max"
        )));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| EvalError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let io_err = |p: &Path| {
        let display = p.display().to_string();
        move |e: std::io::Error| EvalError::Io {
            path: display.clone(),
            source: e,
        }
    };

    let mut master = ChaCha12Rng::seed_from_u64(config.seed);
    // Fixed substream order keeps the files reproducible even if one
    // generation stage changes how much randomness it consumes.
    let mut embed_rng = ChaCha12Rng::seed_from_u64(master.random());
    let mut text_rng = ChaCha12Rng::seed_from_u64(master.random());

    // Embeddings: each class owns a block of dimensions raised well above
    // the background, plus small per-token jitter.
    let jitter = Normal::new(0.0, 0.05).expect("valid normal");
    let block = EMBED_DIM / config.num_classes;
    let mut embeddings = String::new();
    let mut ngrams = String::new();
    for class in 1..=config.num_classes {
        let band_start = (class - 1) * block;
        let band_end = if class == config.num_classes {
            EMBED_DIM
        } else {
            class * block
        };
        let base = count_base(class);
        for index in 0..vocab_size(class) {
            embeddings.push_str(&token_name(class, index));
            for dim in 0..EMBED_DIM {
                let center = if (band_start..band_end).contains(&dim) {
                    0.6
                } else {
                    -0.2
                };
                let value: f64 = center + jitter.sample(&mut embed_rng);
                let _ = write!(embeddings, " {value:.6}");
            }
            embeddings.push('\n');

            let count = base + (index as u64) % base.div_ceil(10);
            let _ = writeln!(ngrams, "1\t{}\t{count}", token_name(class, index));
        }
    }

    let embeddings_path = out_dir.join("embeddings.txt");
    std::fs::write(&embeddings_path, &embeddings).map_err(io_err(&embeddings_path))?;
    let ngrams_path = out_dir.join("ngrams.tsv");
    std::fs::write(&ngrams_path, &ngrams).map_err(io_err(&ngrams_path))?;

    // Texts: class tokens drawn uniformly, periods closing every sentence.
    let mut texts = Vec::with_capacity(config.num_classes * config.texts_per_class);
    for class in 1..=config.num_classes {
        let vocab = vocab_size(class);
        for t in 0..config.texts_per_class {
            let length = text_rng.random_range(min_len..=max_len);
            let mut body = String::new();
            let mut sentence_left =
                text_rng.random_range(SENTENCE_TOKENS.0..=SENTENCE_TOKENS.1);
            for position in 0..length {
                if position > 0 {
                    body.push(' ');
                }
                body.push_str(&token_name(class, text_rng.random_range(0..vocab)));
                sentence_left -= 1;
                if sentence_left == 0 || position + 1 == length {
                    body.push('.');
                    sentence_left =
                        text_rng.random_range(SENTENCE_TOKENS.0..=SENTENCE_TOKENS.1);
                }
            }
            texts.push(CorpusText {
                id: format!("c{class}-t{t:03}"),
                text: body,
                level: class,
            });
        }
    }

    let corpus_path = out_dir.join("corpus.csv");
    let csv_err = |e: csv::Error| EvalError::Corpus(format!("{}: {e}", corpus_path.display()));
    let mut writer = csv::Writer::from_path(&corpus_path).map_err(&csv_err)?;
    writer.write_record(["label", "text"]).map_err(&csv_err)?;
    for text in &texts {
        writer
            .write_record([text.level.to_string().as_str(), text.text.as_str()])
            .map_err(&csv_err)?;
    }
    writer.flush().map_err(io_err(&corpus_path))?;

    Ok(SyntheticBundle {
        corpus: Corpus {
            name: "synthetic".to_string(),
            num_classes: config.num_classes,
            texts,
        },
        corpus_path,
        embeddings_path,
        ngrams_path,
    })
}

/// Reference classifier for the synthetic corpus: majority vote over the
/// classes of the first five tokens, decoded from their `c<class>w...`
/// names. Returns None when no token decodes. Because class vocabularies
/// are disjoint, this oracle must score 100% on a well-formed corpus;
/// anything less means the generator broke separability.
pub fn first_window_majority_oracle(text: &str, num_classes: usize) -> Option<usize> {
    let tokens = tokenize(text).tokens;
    let mut votes = vec![0usize; num_classes];
    for token in tokens.iter().take(5) {
        if let Some(class) = decode_class(token) {
            if class >= 1 && class <= num_classes {
                votes[class - 1] += 1;
            }
        }
    }
    let best = *votes.iter().max()?;
    if best == 0 {
        return None;
    }
    votes.iter().position(|&v| v == best).map(|i| i + 1)
}

fn decode_class(token: &str) -> Option<usize> {
    let rest = token.strip_prefix('c')?;
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() || !rest[digits.len()..].starts_with('w') {
        return None;
    }
    digits.parse().ok()
}
