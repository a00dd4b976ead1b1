use std::collections::{BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use super::TokenSet;

/// Row reserved for tokens outside the vocabulary.
pub const UNKNOWN_INDEX: usize = 0;

/// Sorted token list mapped to embedding rows; row 0 is the unknown token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_token_sets<'a>(sets: impl IntoIterator<Item = &'a TokenSet>) -> Self {
        let all: BTreeSet<&str> = sets.into_iter().flat_map(|s| s.iter()).collect();
        Self::from_sorted(all.into_iter().map(str::to_string).collect())
    }

    fn from_sorted(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + 1))
            .collect();
        Vocabulary { tokens, index }
    }

    /// Number of known tokens, not counting the unknown row.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Rows needed in an embedding table.
    pub fn table_rows(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNKNOWN_INDEX)
    }

    pub fn indices(&self, tokens: &TokenSet) -> Vec<usize> {
        tokens.iter().map(|t| self.index_of(t)).collect()
    }

    pub fn sequence_indices(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.index_of(t)).collect()
    }

    /// Hex SHA-256 over the newline-joined token list.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for token in &self.tokens {
            hasher.update(token.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}
