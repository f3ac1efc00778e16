//! Traditional readability formulas, used as baselines for the agent.
//!
//! All four formulas consume the same `TextStats` summary, so a single
//! counting pass serves every baseline and keeps their inputs consistent.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::featurize::tokenize;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("text contains no words")]
    EmptyText,
    #[error("statistics require at least one word and one sentence")]
    DegenerateStats,
}

/// Case-insensitive membership list of "easy" words for Dale-Chall style
/// difficult-word counting.
#[derive(Clone, Debug, Default)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    /// Loads one word per line, lowercasing everything; blank lines are
    /// skipped.
    pub fn from_path(path: &Path) -> Result<Self, BaselineError> {
        let file = File::open(path).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut words = HashSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|source| BaselineError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let word = line.trim().to_lowercase();
            if !word.is_empty() {
                words.insert(word);
            }
        }
        Ok(WordList { words })
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        WordList {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Surface statistics the formulas consume.
///
/// `complex_words` counts words of three or more syllables;
/// `difficult_words` counts words missing from the easy-word list (zero when
/// no list is supplied, which effectively disables the Dale-Chall term).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TextStats {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    pub complex_words: usize,
    pub difficult_words: usize,
}

impl TextStats {
    /// Tokenizes and counts in one pass. Sentences are the sentence-boundary
    /// runs the tokenizer records, floored at one so ratios stay defined for
    /// fragments without terminal punctuation.
    pub fn from_text(text: &str, easy_words: Option<&WordList>) -> Result<Self, BaselineError> {
        let tokenization = tokenize(text);
        if tokenization.tokens.is_empty() {
            return Err(BaselineError::EmptyText);
        }
        let mut stats = TextStats {
            words: tokenization.tokens.len(),
            sentences: tokenization.sentence_breaks.len().max(1),
            ..TextStats::default()
        };
        for token in &tokenization.tokens {
            let syl = count_syllables(token);
            stats.syllables += syl;
            if syl >= 3 {
                stats.complex_words += 1;
            }
            if let Some(list) = easy_words {
                if !list.contains(token) {
                    stats.difficult_words += 1;
                }
            }
        }
        Ok(stats)
    }

    fn check(&self) -> Result<(), BaselineError> {
        if self.words == 0 || self.sentences == 0 {
            return Err(BaselineError::DegenerateStats);
        }
        Ok(())
    }

    fn words_per_sentence(&self) -> f64 {
        self.words as f64 / self.sentences as f64
    }

    fn syllables_per_word(&self) -> f64 {
        self.syllables as f64 / self.words as f64
    }
}

/// Heuristic syllable count: runs of vowels (a, e, i, o, u, y) count once
/// each, a trailing silent `e` is dropped when it is not the only vowel
/// group, and every word counts at least one syllable.
pub fn count_syllables(word: &str) -> usize {
    let lower = word.to_lowercase();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0usize;
    let mut in_group = false;
    for c in lower.chars() {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
            }
            in_group = true;
        } else {
            in_group = false;
        }
    }
    if groups > 1 && lower.ends_with('e') && !lower.ends_with("le") {
        let chars: Vec<char> = lower.chars().collect();
        // Silent final e: preceded by a consonant, as in "stone" or "make".
        if chars.len() >= 2 && !is_vowel(chars[chars.len() - 2]) {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// Flesch-Kincaid grade level:
/// 0.39 (words/sentences) + 11.8 (syllables/words) - 15.59.
pub fn flesch_kincaid(stats: &TextStats) -> Result<f64, BaselineError> {
    stats.check()?;
    Ok(0.39 * stats.words_per_sentence() + 11.8 * stats.syllables_per_word() - 15.59)
}

/// Fog index variant in which the 0.4 factor applies to the sentence-length
/// term only, with the percentage of complex words added at full weight:
/// 0.4 (words/sentences) + 100 (complex/words). The more common formulation
/// scales the sum of both terms by 0.4 instead; this project uses the form
/// below throughout, baselines and evaluation alike.
pub fn gunning_fog(stats: &TextStats) -> Result<f64, BaselineError> {
    stats.check()?;
    Ok(0.4 * stats.words_per_sentence()
        + 100.0 * (stats.complex_words as f64 / stats.words as f64))
}

/// Dale-Chall difficulty score:
/// 15.79 (difficult/words) + 0.0496 (words/sentences).
pub fn dale_chall(stats: &TextStats) -> Result<f64, BaselineError> {
    stats.check()?;
    Ok(15.79 * (stats.difficult_words as f64 / stats.words as f64)
        + 0.0496 * stats.words_per_sentence())
}

/// Flesch variant with constants retuned for Persian text:
/// 0.31 - 0.846 (syllables/words) - 1.01 (words/sentences). Note the
/// intercept sits between the two subtracted terms' usual magnitudes, so
/// scores are typically negative; ordering, not sign, is what matters here.
pub fn flesch_dayani(stats: &TextStats) -> Result<f64, BaselineError> {
    stats.check()?;
    Ok(0.31 - 0.846 * stats.syllables_per_word() - 1.01 * stats.words_per_sentence())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn syllable_counts_follow_the_heuristic() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("beautiful"), 3); // eau + i + u
        assert_eq!(count_syllables("queue"), 1);
        assert_eq!(count_syllables("rhythm"), 1);
        assert_eq!(count_syllables("stone"), 1); // trailing silent e
        assert_eq!(count_syllables("idea"), 2); // i + ea
        assert_eq!(count_syllables("xyzzy"), 2); // y + y
        assert_eq!(count_syllables("strength"), 1);
        assert_eq!(count_syllables("mmm"), 1); // floor at one
    }

    fn stats(words: usize, sentences: usize, syllables: usize) -> TextStats {
        TextStats {
            words,
            sentences,
            syllables,
            complex_words: 0,
            difficult_words: 0,
        }
    }

    #[test]
    fn flesch_kincaid_reference_values() {
        let fk = flesch_kincaid(&stats(100, 10, 150)).unwrap();
        assert_relative_eq!(fk, 6.01, max_relative = 1e-9);
        let unit = flesch_kincaid(&stats(1, 1, 1)).unwrap();
        assert_relative_eq!(unit, -3.40, max_relative = 1e-9);
    }

    #[test]
    fn gunning_fog_reference_value() {
        let mut s = stats(100, 10, 150);
        s.complex_words = 5;
        assert_relative_eq!(gunning_fog(&s).unwrap(), 9.0, max_relative = 1e-9);
    }

    #[test]
    fn dale_chall_reference_value() {
        let mut s = stats(100, 10, 130);
        s.difficult_words = 10;
        assert_relative_eq!(dale_chall(&s).unwrap(), 2.075, max_relative = 1e-9);
    }

    #[test]
    fn flesch_dayani_reference_value() {
        let fd = flesch_dayani(&stats(100, 10, 150)).unwrap();
        assert_relative_eq!(fd, -11.059, max_relative = 1e-9);
    }

    #[test]
    fn formulas_reject_degenerate_stats() {
        let zero = TextStats::default();
        assert!(flesch_kincaid(&zero).is_err());
        assert!(gunning_fog(&zero).is_err());
        assert!(dale_chall(&zero).is_err());
        assert!(flesch_dayani(&zero).is_err());
    }

    #[test]
    fn stats_from_text_counts_words_sentences_and_syllables() {
        let s = TextStats::from_text("The cat sat. The dog ran away!", None).unwrap();
        assert_eq!(s.words, 7);
        assert_eq!(s.sentences, 2);
        assert_eq!(s.difficult_words, 0);
        assert!(s.syllables >= 7);
    }

    #[test]
    fn fragment_without_terminator_counts_one_sentence() {
        let s = TextStats::from_text("just a fragment", None).unwrap();
        assert_eq!(s.sentences, 1);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(
            TextStats::from_text("  ... ", None),
            Err(BaselineError::EmptyText)
        ));
    }

    #[test]
    fn difficult_words_use_the_easy_list_case_insensitively() {
        let list = WordList::from_words(["the", "cat", "sat"]);
        let s = TextStats::from_text("The cat sat on the mat.", Some(&list)).unwrap();
        assert_eq!(s.words, 6);
        assert_eq!(s.difficult_words, 2); // "on" and "mat"
    }

    #[test]
    fn ratio_scaling_leaves_every_formula_unchanged() {
        let base = TextStats {
            words: 120,
            sentences: 8,
            syllables: 190,
            complex_words: 14,
            difficult_words: 33,
        };
        for k in [2usize, 3, 10] {
            let scaled = TextStats {
                words: base.words * k,
                sentences: base.sentences * k,
                syllables: base.syllables * k,
                complex_words: base.complex_words * k,
                difficult_words: base.difficult_words * k,
            };
            assert_eq!(
                flesch_kincaid(&base).unwrap(),
                flesch_kincaid(&scaled).unwrap()
            );
            assert_eq!(gunning_fog(&base).unwrap(), gunning_fog(&scaled).unwrap());
            assert_eq!(dale_chall(&base).unwrap(), dale_chall(&scaled).unwrap());
            assert_eq!(
                flesch_dayani(&base).unwrap(),
                flesch_dayani(&scaled).unwrap()
            );
        }
    }
}
