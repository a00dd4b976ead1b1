//! Reference records, keyword retrieval, target labeling and task difficulty.
//!
//! Only the title and abstract of a reference are "free" metadata. The body
//! is carried along for target labeling and for the environment to reveal
//! on visit; nothing in retrieval or similarity ever looks at it.

mod synthetic;
mod vocab;

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{self, domain, Error, Result};

pub use synthetic::{generate_synthetic_collection, generate_synthetic_corpus, SyntheticConfig};
pub use vocab::{Vocabulary, UNKNOWN_INDEX};

/// One document of the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
}

impl Reference {
    /// Title and abstract, the text every component may look at.
    pub fn metadata(&self) -> String {
        format!("{}\n{}", self.title, self.abstract_text)
    }

    /// Title, abstract and body concatenated.
    pub fn full_text(&self) -> String {
        match &self.body {
            Some(body) => format!("{}\n{}\n{}", self.title, self.abstract_text, body),
            None => self.metadata(),
        }
    }
}

/// A set of lowercase alphanumeric tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    /// Tokens in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_subset(&self, other: &TokenSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &TokenSet) -> TokenSet {
        TokenSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection_len(&self, other: &TokenSet) -> usize {
        self.0.intersection(&other.0).count()
    }

    /// Space-joined tokens; tokenizing the result gives back the same set.
    pub fn joined(&self) -> String {
        self.iter().collect::<Vec<_>>().join(" ")
    }
}

impl FromIterator<String> for TokenSet {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        TokenSet(iter.into_iter().filter(|t| !t.is_empty()).collect())
    }
}

/// Lowercases, splits on every non-alphanumeric character, drops empty
/// fragments and deduplicates.
pub fn tokenize(text: &str) -> TokenSet {
    tokenize_sequence(text).into_iter().collect()
}

/// Same splitting rule as [`tokenize`] but keeps order and repeats.
pub fn tokenize_sequence(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits text into sentences. A sentence ends at '.', '?' or '!' when the
/// next character is whitespace or the end of the text.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '?' | '!') {
            let boundary = match chars.peek() {
                None => true,
                Some(&(_, next)) => next.is_whitespace(),
            };
            if boundary {
                let end = i + c.len_utf8();
                sentences.push(&text[start..end]);
                start = end;
            }
        }
    }
    if start < text.len() {
        sentences.push(&text[start..]);
    }
    sentences
}

/// An id-indexed collection of references in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    references: Vec<Reference>,
    index: HashMap<String, usize>,
    metadata_tokens: Vec<TokenSet>,
}

impl Corpus {
    pub fn new(references: Vec<Reference>) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (i, reference) in references.into_iter().enumerate() {
            corpus.push(reference, i + 1)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, reference: Reference, line: usize) -> Result<()> {
        if reference.id.is_empty() {
            return Err(Error::Ingest {
                line,
                message: "missing id".into(),
            });
        }
        if reference.title.trim().is_empty() {
            return Err(Error::Ingest {
                line,
                message: format!("reference {:?} has an empty title", reference.id),
            });
        }
        if self.index.contains_key(&reference.id) {
            return Err(Error::DuplicateId {
                id: reference.id,
                line,
            });
        }
        self.index
            .insert(reference.id.clone(), self.references.len());
        self.metadata_tokens.push(tokenize(&reference.metadata()));
        self.references.push(reference);
        Ok(())
    }

    /// Reads JSON-lines records from a reader. Blank lines are skipped.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| Error::Ingest {
                    line: line_no,
                    message: format!("malformed record: {e}"),
                })?;
            if value.get("id").and_then(|v| v.as_str()).is_none() {
                return Err(Error::Ingest {
                    line: line_no,
                    message: "missing id".into(),
                });
            }
            let reference: Reference =
                serde_json::from_value(value).map_err(|e| Error::Ingest {
                    line: line_no,
                    message: format!("malformed record: {e}"),
                })?;
            corpus.push(reference, line_no)?;
        }
        Ok(corpus)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for reference in &self.references {
            serde_json::to_writer(&mut out, reference)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(error::create(path)?);
        self.write_jsonl(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Concatenates corpora; ids must stay unique.
    pub fn merge(parts: impl IntoIterator<Item = Corpus>) -> Result<Self> {
        let mut corpus = Corpus::default();
        let mut line = 0;
        for part in parts {
            for reference in part.references {
                line += 1;
                corpus.push(reference, line)?;
            }
        }
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Reference> {
        self.index.get(id).map(|&i| &self.references[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn references(&self) -> &[Reference] {
        &self.references
    }

    /// Metadata tokens of a reference, or `None` for an unknown id.
    pub fn metadata_tokens(&self, id: &str) -> Option<&TokenSet> {
        self.index.get(id).map(|&i| &self.metadata_tokens[i])
    }

    /// Vocabulary over every reference's title and abstract.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_token_sets(self.metadata_tokens.iter())
    }
}

/// Loads a JSON-lines corpus file.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    Corpus::from_reader(BufReader::new(error::open(path)?))
}

/// A query as written in a task file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub drug: String,
    pub genes: Vec<String>,
}

pub fn load_task_specs(path: &Path) -> Result<Vec<TaskSpec>> {
    let reader = BufReader::new(error::open(path)?);
    let mut specs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let spec: TaskSpec = serde_json::from_str(&line).map_err(|e| Error::Ingest {
            line: i + 1,
            message: format!("malformed task: {e}"),
        })?;
        if spec.drug.trim().is_empty() || spec.genes.is_empty() {
            return Err(Error::Ingest {
                line: i + 1,
                message: "task needs a drug and at least one gene".into(),
            });
        }
        specs.push(spec);
    }
    Ok(specs)
}

pub fn save_task_specs(specs: &[TaskSpec], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(error::create(path)?);
    for spec in specs {
        serde_json::to_writer(&mut out, spec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// A posed query: the drug, its genes, the candidate set and its targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub drug: String,
    pub genes: Vec<String>,
    pub candidate_ids: Vec<String>,
    pub target_ids: BTreeSet<String>,
}

impl Task {
    /// Retrieves candidates and labels targets for a query. Fails when the
    /// candidate set is empty or contains no target.
    pub fn pose(corpus: &Corpus, spec: &TaskSpec) -> Result<Self> {
        if spec.genes.is_empty() {
            return Err(domain(format!("task {:?} has no genes", spec.drug)));
        }
        let candidate_ids = retrieve_candidates(corpus, &spec.drug)?;
        let target_ids = label_targets(corpus, &candidate_ids, &spec.drug, &spec.genes)?;
        if target_ids.is_empty() {
            return Err(domain(format!(
                "no target reference for {:?} among {} candidates",
                spec.drug,
                candidate_ids.len()
            )));
        }
        Ok(Task {
            drug: spec.drug.clone(),
            genes: spec.genes.clone(),
            candidate_ids,
            target_ids,
        })
    }

    pub fn spec(&self) -> TaskSpec {
        TaskSpec {
            drug: self.drug.clone(),
            genes: self.genes.clone(),
        }
    }

    pub fn n_candidates(&self) -> usize {
        self.candidate_ids.len()
    }

    pub fn n_targets(&self) -> usize {
        self.target_ids.len()
    }

    pub fn is_target(&self, id: &str) -> bool {
        self.target_ids.contains(id)
    }

    pub fn hardness(&self) -> f64 {
        hardness_of_find(self.n_candidates(), self.n_targets())
            .expect("a posed task has 0 < targets <= candidates")
    }

    /// Tokens of the query: the drug and every gene.
    pub fn query_tokens(&self) -> TokenSet {
        let mut text = self.drug.clone();
        for gene in &self.genes {
            text.push(' ');
            text.push_str(gene);
        }
        tokenize(&text)
    }
}

/// Ids of every reference whose title or abstract contains `drug` as a
/// case-insensitive substring, in corpus order.
pub fn retrieve_candidates(corpus: &Corpus, drug: &str) -> Result<Vec<String>> {
    let needle = drug.trim().to_lowercase();
    if needle.is_empty() {
        return Err(domain("drug name is empty"));
    }
    let ids: Vec<String> = corpus
        .references()
        .iter()
        .filter(|r| {
            r.title.to_lowercase().contains(&needle)
                || r.abstract_text.to_lowercase().contains(&needle)
        })
        .map(|r| r.id.clone())
        .collect();
    if ids.is_empty() {
        return Err(Error::NoCandidates {
            drug: drug.to_string(),
        });
    }
    Ok(ids)
}

/// Candidates whose full text has a sentence mentioning the drug and at
/// least one gene, by exact case-insensitive token match.
pub fn label_targets(
    corpus: &Corpus,
    candidate_ids: &[String],
    drug: &str,
    genes: &[String],
) -> Result<BTreeSet<String>> {
    if candidate_ids.is_empty() {
        return Err(domain("candidate set is empty"));
    }
    let drug_tokens = tokenize(drug);
    if drug_tokens.is_empty() {
        return Err(domain("drug name has no tokens"));
    }
    let gene_tokens: Vec<TokenSet> = genes
        .iter()
        .map(|g| tokenize(g))
        .filter(|t| !t.is_empty())
        .collect();
    let mut targets = BTreeSet::new();
    for id in candidate_ids {
        let reference = corpus
            .get(id)
            .ok_or_else(|| domain(format!("unknown candidate id {id:?}")))?;
        let text = reference.full_text();
        let hit = split_sentences(&text).into_iter().any(|sentence| {
            let tokens = tokenize(sentence);
            drug_tokens.is_subset(&tokens) && gene_tokens.iter().any(|g| g.is_subset(&tokens))
        });
        if hit {
            targets.insert(id.clone());
        }
    }
    Ok(targets)
}

/// Hardness of Find: the fraction of candidates that are not targets.
pub fn hardness_of_find(n_candidates: usize, n_targets: usize) -> Result<f64> {
    if n_targets == 0 || n_targets > n_candidates {
        return Err(domain(format!(
            "hardness needs 0 < targets <= candidates, got {n_targets} of {n_candidates}"
        )));
    }
    Ok(1.0 - n_targets as f64 / n_candidates as f64)
}
