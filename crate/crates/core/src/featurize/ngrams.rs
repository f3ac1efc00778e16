//! Corpus n-gram counts and the log-scaled frequency feature derived from
//! them.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::FeaturizeError;

/// Largest n-gram order tracked, which is also the number of n-gram
/// features per token.
pub const MAX_NGRAM: usize = 5;

/// Counts for n-grams of order 1 through MAX_NGRAM, with the per-order
/// maximum cached for normalization.
#[derive(Clone, Debug, Default)]
pub struct NgramModel {
    counts: [HashMap<Vec<String>, u64>; MAX_NGRAM],
    max_counts: [u64; MAX_NGRAM],
}

impl NgramModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads a tab-separated file with lines of the form
    /// `order<TAB>space-joined tokens<TAB>count`.
    pub fn from_path(path: &Path) -> Result<Self, FeaturizeError> {
        let file = File::open(path).map_err(|source| FeaturizeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file), &path.display().to_string())
    }

    pub fn parse(reader: impl BufRead, source_name: &str) -> Result<Self, FeaturizeError> {
        let mut model = NgramModel::new();
        for (index, line) in reader.lines().enumerate() {
            let line_no = index + 1;
            let line = line.map_err(|source| FeaturizeError::Io {
                path: source_name.to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(FeaturizeError::Parse {
                    path: source_name.to_string(),
                    line: line_no,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let order: usize = fields[0].parse().map_err(|_| FeaturizeError::Parse {
                path: source_name.to_string(),
                line: line_no,
                message: format!("bad n-gram order {:?}", fields[0]),
            })?;
            if order == 0 || order > MAX_NGRAM {
                return Err(FeaturizeError::Parse {
                    path: source_name.to_string(),
                    line: line_no,
                    message: format!("n-gram order {order} outside 1..={MAX_NGRAM}"),
                });
            }
            let tokens: Vec<String> =
                fields[1].split_whitespace().map(str::to_string).collect();
            if tokens.len() != order {
                return Err(FeaturizeError::Parse {
                    path: source_name.to_string(),
                    line: line_no,
                    message: format!(
                        "order {} n-gram has {} tokens",
                        order,
                        tokens.len()
                    ),
                });
            }
            let count: u64 = fields[2].parse().map_err(|_| FeaturizeError::Parse {
                path: source_name.to_string(),
                line: line_no,
                message: format!("bad count {:?}", fields[2]),
            })?;
            model.insert(tokens, count);
        }
        Ok(model)
    }

    /// Records a count, keeping the per-order maximum current. Repeated
    /// inserts of the same n-gram accumulate.
    pub fn insert(&mut self, ngram: Vec<String>, count: u64) {
        assert!(
            !ngram.is_empty() && ngram.len() <= MAX_NGRAM,
            "n-gram order must be within 1..={MAX_NGRAM}"
        );
        let order = ngram.len();
        let entry = self.counts[order - 1].entry(ngram).or_insert(0);
        *entry += count;
        if *entry > self.max_counts[order - 1] {
            self.max_counts[order - 1] = *entry;
        }
    }

    pub fn count(&self, ngram: &[String]) -> u64 {
        if ngram.is_empty() || ngram.len() > MAX_NGRAM {
            return 0;
        }
        self.counts[ngram.len() - 1]
            .get(ngram)
            .copied()
            .unwrap_or(0)
    }

    /// Largest count recorded for the given order.
    pub fn max_count(&self, order: usize) -> u64 {
        assert!(order >= 1 && order <= MAX_NGRAM);
        self.max_counts[order - 1]
    }

    /// Number of distinct n-grams of the given order.
    pub fn distinct(&self, order: usize) -> usize {
        assert!(order >= 1 && order <= MAX_NGRAM);
        self.counts[order - 1].len()
    }

    /// Log-scaled frequency of the order-`n` n-gram ending at `position`:
    /// ln(1 + count) / ln(1 + max count of that order), which lands in
    /// [0, 1] and increases monotonically with the count. Returns 0 when
    /// fewer than n tokens precede the position, for unseen n-grams, and
    /// for orders with no recorded counts.
    pub fn feature(&self, tokens: &[String], position: usize, n: usize) -> f64 {
        assert!(n >= 1 && n <= MAX_NGRAM, "n-gram order out of range");
        assert!(position < tokens.len(), "position out of range");
        if position + 1 < n {
            return 0.0;
        }
        let gram = &tokens[position + 1 - n..=position];
        let count = self.count(gram);
        let max = self.max_counts[n - 1];
        if count == 0 || max == 0 {
            return 0.0;
        }
        (1.0 + count as f64).ln() / (1.0 + max as f64).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn most_frequent_unigram_scores_one() {
        let mut model = NgramModel::new();
        model.insert(toks(&["the"]), 100);
        model.insert(toks(&["cat"]), 10);
        let text = toks(&["the", "cat"]);
        assert_eq!(model.feature(&text, 0, 1), 1.0);
        let cat = model.feature(&text, 1, 1);
        assert!(cat > 0.0 && cat < 1.0);
    }

    #[test]
    fn unseen_ngram_scores_zero() {
        let mut model = NgramModel::new();
        model.insert(toks(&["the"]), 100);
        let text = toks(&["dog"]);
        assert_eq!(model.feature(&text, 0, 1), 0.0);
    }

    #[test]
    fn short_prefix_scores_zero() {
        let mut model = NgramModel::new();
        model.insert(toks(&["the", "cat"]), 5);
        let text = toks(&["the", "cat"]);
        // No bigram ends at the first token.
        assert_eq!(model.feature(&text, 0, 2), 0.0);
        assert_eq!(model.feature(&text, 1, 2), 1.0);
    }

    #[test]
    fn feature_is_monotone_in_count() {
        let mut model = NgramModel::new();
        model.insert(toks(&["a"]), 1);
        model.insert(toks(&["b"]), 5);
        model.insert(toks(&["c"]), 25);
        let text = toks(&["a", "b", "c"]);
        let fa = model.feature(&text, 0, 1);
        let fb = model.feature(&text, 1, 1);
        let fc = model.feature(&text, 2, 1);
        assert!(fa < fb && fb < fc);
        assert_eq!(fc, 1.0);
        assert!(fa > 0.0);
    }

    #[test]
    fn parse_round_trips_counts() {
        let model =
            NgramModel::parse("1\tthe\t100\n2\tthe cat\t7\n".as_bytes(), "mem").unwrap();
        assert_eq!(model.count(&toks(&["the"])), 100);
        assert_eq!(model.count(&toks(&["the", "cat"])), 7);
        assert_eq!(model.max_count(2), 7);
        assert_eq!(model.distinct(1), 1);
    }

    #[test]
    fn parse_rejects_token_count_mismatch() {
        let err = NgramModel::parse("2\tthe\t100\n".as_bytes(), "mem").unwrap_err();
        match err {
            FeaturizeError::Parse { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("has 1 tokens"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_out_of_range_order() {
        assert!(NgramModel::parse("6\ta b c d e f\t1\n".as_bytes(), "mem").is_err());
        assert!(NgramModel::parse("0\t\t1\n".as_bytes(), "mem").is_err());
    }
}
