//! Word embedding table loaded from a whitespace-separated text file, one
//! token per line followed by its vector components.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::FeaturizeError;

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    dimension: usize,
}

impl EmbeddingTable {
    pub fn from_path(path: &Path) -> Result<Self, FeaturizeError> {
        let file = File::open(path).map_err(|source| FeaturizeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file), &path.display().to_string())
    }

    /// Parses embedding lines, enforcing one consistent dimension across the
    /// whole file. Blank lines are ignored; any other malformed line is an
    /// error naming its 1-based line number.
    pub fn parse(reader: impl BufRead, source_name: &str) -> Result<Self, FeaturizeError> {
        let mut vectors = HashMap::new();
        let mut dimension: Option<usize> = None;
        for (index, line) in reader.lines().enumerate() {
            let line_no = index + 1;
            let line = line.map_err(|source| FeaturizeError::Io {
                path: source_name.to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts
                .next()
                .expect("non-empty line has at least one field");
            let mut vector = Vec::new();
            for part in parts {
                let value: f64 = part.parse().map_err(|_| FeaturizeError::Parse {
                    path: source_name.to_string(),
                    line: line_no,
                    message: format!("expected a number, found {part:?}"),
                })?;
                if !value.is_finite() {
                    return Err(FeaturizeError::Parse {
                        path: source_name.to_string(),
                        line: line_no,
                        message: format!("non-finite component {part:?}"),
                    });
                }
                vector.push(value);
            }
            if vector.is_empty() {
                return Err(FeaturizeError::Parse {
                    path: source_name.to_string(),
                    line: line_no,
                    message: "token has no vector components".to_string(),
                });
            }
            match dimension {
                None => dimension = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(FeaturizeError::Parse {
                        path: source_name.to_string(),
                        line: line_no,
                        message: format!(
                            "dimension {} does not match the file's dimension {}",
                            vector.len(),
                            d
                        ),
                    });
                }
                Some(_) => {}
            }
            vectors.insert(token.to_string(), vector);
        }
        let dimension = dimension.ok_or_else(|| FeaturizeError::Parse {
            path: source_name.to_string(),
            line: 1,
            message: "file contains no embeddings".to_string(),
        })?;
        Ok(EmbeddingTable { vectors, dimension })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Embedding for a token, or None for out-of-vocabulary tokens; callers
    /// substitute the zero vector.
    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }
}
