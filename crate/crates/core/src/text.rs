//! Review text to document vectors.
//!
//! A document is segmented into lowercase word tokens, each token is mapped
//! to the first of its lemma candidates present in the matrix vocabulary, and
//! the document vector is the sum of the matched rows, one term per token
//! occurrence. Tokens with no candidate in the vocabulary are skipped.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::normalize_lemma;
use crate::learn::{star_to_class, LearnError, SentimentClass};
use crate::matrix::{DistanceMatrix, MatrixError, UNREACHABLE};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: invalid review JSON: {source}")]
    Json {
        file: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{file}:{line}: {source}")]
    Stars {
        file: String,
        line: usize,
        #[source]
        source: LearnError,
    },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub text: String,
    pub label: Option<SentimentClass>,
    pub domain: Option<String>,
}

impl Document {
    pub fn new(text: impl Into<String>) -> Self {
        Document {
            text: text.into(),
            label: None,
            domain: None,
        }
    }
}

/// One line of the review JSON Lines input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub text: String,
    pub stars: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

pub fn parse_reviews_jsonl(name: &str, content: &str) -> Result<Vec<Document>, TextError> {
    let mut docs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let review: Review = serde_json::from_str(line).map_err(|source| TextError::Json {
            file: name.to_string(),
            line: i + 1,
            source,
        })?;
        let label = star_to_class(review.stars).map_err(|source| TextError::Stars {
            file: name.to_string(),
            line: i + 1,
            source,
        })?;
        docs.push(Document {
            text: review.text,
            label: Some(label),
            domain: review.domain,
        });
    }
    Ok(docs)
}

pub fn read_reviews_jsonl(path: &Path) -> Result<Vec<Document>, TextError> {
    let content = std::fs::read_to_string(path).map_err(|source| TextError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_reviews_jsonl(&path.display().to_string(), &content)
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Splits text into maximal runs of letters, allowing apostrophes and hyphens
/// between letters. Tokens are lowercased; digits and other punctuation act as
/// separators.
pub fn segment(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_alphabetic() {
            current.extend(c.to_lowercase());
        } else if is_joiner(c)
            && !current.is_empty()
            && chars.peek().is_some_and(|n| n.is_alphabetic())
        {
            current.push(if c == '-' { '-' } else { '\'' });
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

// Detachment rules as (suffix, replacement), grouped by part of speech.
const NOUN_RULES: &[(&str, &str)] = &[
    ("s", ""),
    ("ses", "s"),
    ("xes", "x"),
    ("zes", "z"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("men", "man"),
    ("ies", "y"),
];
const VERB_RULES: &[(&str, &str)] = &[
    ("s", ""),
    ("ies", "y"),
    ("es", "e"),
    ("es", ""),
    ("ed", ""),
    ("ed", "e"),
    ("ing", ""),
    ("ing", "e"),
];
const ADJ_RULES: &[(&str, &str)] = &[("er", ""), ("est", ""), ("er", "e"), ("est", "e")];

/// Suffixes whose removal may expose a doubled final consonant
/// (`running` -> `runn` -> `run`).
const DOUBLING_SUFFIXES: &[&str] = &["ing", "ed", "er", "est"];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Morphy-style lemmatizer: exception lists first, then suffix detachment.
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    exceptions: HashMap<String, Vec<String>>,
}

impl Lemmatizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds entries in WordNet `*.exc` format: `inflected base [base ...]`.
    pub fn add_exceptions(&mut self, content: &str) {
        for line in content.lines() {
            let mut words = line.split_whitespace();
            let Some(inflected) = words.next() else {
                continue;
            };
            let bases = self
                .exceptions
                .entry(normalize_lemma(inflected))
                .or_default();
            for b in words {
                let b = normalize_lemma(b);
                if !bases.contains(&b) {
                    bases.push(b);
                }
            }
        }
    }

    pub fn load_exceptions(&mut self, path: &Path) -> std::io::Result<()> {
        self.add_exceptions(&std::fs::read_to_string(path)?);
        Ok(())
    }

    /// Candidate lemmas for `token`, the token itself first, without
    /// duplicates.
    pub fn candidates(&self, token: &str) -> Vec<String> {
        let mut out = vec![token.to_string()];
        let mut push = |c: String| {
            if c.chars().count() >= 2 && !out.contains(&c) {
                out.push(c);
            }
        };
        if let Some(bases) = self.exceptions.get(token) {
            for b in bases {
                push(b.clone());
            }
        }
        for rules in [NOUN_RULES, VERB_RULES, ADJ_RULES] {
            for &(suffix, replacement) in rules {
                let Some(stem) = token.strip_suffix(suffix) else {
                    continue;
                };
                if stem.is_empty() {
                    continue;
                }
                push(format!("{stem}{replacement}"));
                if replacement.is_empty() && DOUBLING_SUFFIXES.contains(&suffix) {
                    let mut tail = stem.chars().rev();
                    if let (Some(a), Some(b)) = (tail.next(), tail.next()) {
                        if a == b && a.is_alphabetic() && !is_vowel(a) {
                            push(stem[..stem.len() - a.len_utf8()].to_string());
                        }
                    }
                }
            }
        }
        out
    }
}

/// Candidates from the built-in rules, with no exception lists.
pub fn lemmatize(token: &str) -> Vec<String> {
    Lemmatizer::new().candidates(token)
}

/// Value summed in place of the stored unreachable sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum UnreachablePolicy {
    /// One more than the largest finite distance in the matrix.
    #[default]
    MaxPlusOne,
    Fixed(u64),
}

impl UnreachablePolicy {
    pub fn substitute(self, matrix: &DistanceMatrix) -> u64 {
        match self {
            UnreachablePolicy::MaxPlusOne => matrix.max_distance() as u64 + 1,
            UnreachablePolicy::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentVector {
    pub values: Vec<u64>,
    /// Number of token occurrences that resolved to a vocabulary lemma.
    pub matched_lemma_count: u64,
}

impl DocumentVector {
    pub fn zero(n: usize) -> Self {
        DocumentVector {
            values: vec![0; n],
            matched_lemma_count: 0,
        }
    }

    pub fn add(&self, other: &DocumentVector) -> DocumentVector {
        DocumentVector {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            matched_lemma_count: self.matched_lemma_count + other.matched_lemma_count,
        }
    }
}

/// Resolves tokens against one matrix and sums rows.
#[derive(Debug)]
pub struct Vectorizer<'m> {
    matrix: &'m DistanceMatrix,
    lemmatizer: Lemmatizer,
    policy: UnreachablePolicy,
    pre_lemmatized: bool,
}

impl<'m> Vectorizer<'m> {
    pub fn new(matrix: &'m DistanceMatrix) -> Self {
        Vectorizer {
            matrix,
            lemmatizer: Lemmatizer::new(),
            policy: UnreachablePolicy::default(),
            pre_lemmatized: false,
        }
    }

    pub fn with_lemmatizer(mut self, lemmatizer: Lemmatizer) -> Self {
        self.lemmatizer = lemmatizer;
        self
    }

    pub fn with_policy(mut self, policy: UnreachablePolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Treat document text as whitespace-separated lemmas and skip
    /// segmentation and lemmatization.
    pub fn pre_lemmatized(mut self, yes: bool) -> Self {
        self.pre_lemmatized = yes;
        self
    }

    /// Matrix row indices for each resolved token, in text order.
    pub fn resolve(&self, text: &str) -> Vec<u32> {
        if self.pre_lemmatized {
            return text
                .split_whitespace()
                .filter_map(|l| self.matrix.index_of(&normalize_lemma(l)))
                .collect();
        }
        segment(text)
            .iter()
            .filter_map(|tok| {
                self.lemmatizer
                    .candidates(tok)
                    .iter()
                    .find_map(|c| self.matrix.index_of(c))
            })
            .collect()
    }

    pub fn vectorize(&self, doc: &Document) -> Result<DocumentVector, MatrixError> {
        let n = self.matrix.node_count();
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for idx in self.resolve(&doc.text) {
            *counts.entry(idx).or_insert(0) += 1;
        }
        let fill = self.policy.substitute(self.matrix);
        let mut out = DocumentVector::zero(n);
        let mut row = vec![0u8; n];
        for (&idx, &count) in &counts {
            self.matrix.read_row_into(idx, &mut row)?;
            for (acc, &d) in out.values.iter_mut().zip(&row) {
                let d = if d == UNREACHABLE { fill } else { d as u64 };
                *acc += count * d;
            }
            out.matched_lemma_count += count;
        }
        Ok(out)
    }

    /// Vectorizes documents in parallel; output order matches input order.
    pub fn vectorize_all(&self, docs: &[Document]) -> Result<Vec<DocumentVector>, MatrixError> {
        docs.par_iter().map(|d| self.vectorize(d)).collect()
    }
}

/// Sum of word vectors over the document's resolved tokens, using the built-in
/// lemmatizer.
pub fn vectorize_document(
    doc: &Document,
    m: &DistanceMatrix,
    policy: UnreachablePolicy,
) -> Result<DocumentVector, MatrixError> {
    Vectorizer::new(m).with_policy(policy).vectorize(doc)
}
