//! Turning raw text into the per-token feature vectors the agent reads.
//!
//! Each token gets the concatenation of its embedding (zeros when unknown)
//! and five n-gram frequency features for the n-grams of order 1 through 5
//! that end at the token. Feature vectors are computed once per text and
//! never depend on the agent's position, so featurization can be cached and
//! shared across episodes.

mod embeddings;
mod ngrams;

pub use embeddings::EmbeddingTable;
pub use ngrams::{NgramModel, MAX_NGRAM};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("cannot featurize an empty text")]
    EmptyText,
}

/// Lowercased tokens plus the positions of sentence boundaries.
///
/// A boundary is a maximal run of `.`, `!`, or `?`; its recorded position is
/// the number of tokens that precede it, i.e. the index the next sentence's
/// first token would take.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tokenization {
    pub tokens: Vec<String>,
    pub sentence_breaks: Vec<usize>,
}

/// Splits on whitespace, lowercases, strips leading and trailing
/// punctuation from each token, and drops tokens that end up empty.
pub fn tokenize(text: &str) -> Tokenization {
    let mut tokens: Vec<String> = Vec::new();
    let mut sentence_breaks = Vec::new();
    let mut current = String::new();
    let mut in_terminator_run = false;

    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            let trimmed: &str = current.trim_matches(|c: char| !c.is_alphanumeric());
            if !trimmed.is_empty() {
                tokens.push(trimmed.to_string());
            }
            current.clear();
        }
    };

    for ch in text.chars() {
        let is_terminator = matches!(ch, '.' | '!' | '?');
        if is_terminator && !in_terminator_run {
            let pending = if current
                .chars()
                .any(|c| c.is_alphanumeric())
            {
                1
            } else {
                0
            };
            sentence_breaks.push(tokens.len() + pending);
        }
        in_terminator_run = is_terminator;
        if ch.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else {
            current.extend(ch.to_lowercase());
        }
    }
    flush(&mut current, &mut tokens);
    Tokenization {
        tokens,
        sentence_breaks,
    }
}

/// Feature vectors for one text, stored row-major with one row per token.
#[derive(Debug)]
pub struct TokenFeatureSequence {
    tokens: Vec<String>,
    features: Vec<f64>,
    feature_dim: usize,
    unknown_tokens: usize,
}

impl TokenFeatureSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Feature row for token `index`.
    pub fn feature(&self, index: usize) -> &[f64] {
        &self.features[index * self.feature_dim..(index + 1) * self.feature_dim]
    }

    /// Tokens that had no embedding and fell back to the zero vector.
    pub fn unknown_tokens(&self) -> usize {
        self.unknown_tokens
    }
}

/// Builds the feature sequence for a tokenized text.
pub fn featurize_text(
    tokens: &[String],
    embeddings: &EmbeddingTable,
    ngrams: &NgramModel,
) -> Result<TokenFeatureSequence, FeaturizeError> {
    if tokens.is_empty() {
        return Err(FeaturizeError::EmptyText);
    }
    let embed_dim = embeddings.dimension();
    let feature_dim = embed_dim + MAX_NGRAM;
    let mut features = Vec::with_capacity(tokens.len() * feature_dim);
    let mut unknown_tokens = 0;
    for (i, token) in tokens.iter().enumerate() {
        match embeddings.lookup(token) {
            Some(vector) => features.extend_from_slice(vector),
            None => {
                unknown_tokens += 1;
                features.extend(std::iter::repeat(0.0).take(embed_dim));
            }
        }
        for n in 1..=MAX_NGRAM {
            features.push(ngrams.feature(tokens, i, n));
        }
    }
    Ok(TokenFeatureSequence {
        tokens: tokens.to_vec(),
        features,
        feature_dim,
        unknown_tokens,
    })
}
