//! Seeded synthetic corpora standing in for real literature.
//!
//! Each corpus is one query: every document mentions the drug in its title
//! or abstract, and exactly `n_targets` bodies contain a sentence with the
//! drug and a gene. A small set of "signal" words leaks into metadata: every
//! target carries several of them, and non-targets carry them with a
//! probability that decays steeply with a hidden relevance score. Some
//! non-targets mention a gene and the drug in different body sentences.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Corpus, Reference, Task, TaskSpec};
use crate::error::{domain, Result};

/// Token placed in every target's abstract when `label_marker` is set.
pub const LABEL_MARKER: &str = "readmark";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    pub n_targets: usize,
    pub vocab_size: usize,
    pub seed: u64,
    /// Seed choosing the signal words; defaults to `seed`. Corpora sharing
    /// a signal seed share their signal words.
    pub signal_seed: Option<u64>,
    pub signal_words: usize,
    pub signal_slots: usize,
    pub target_signal_rate: f64,
    pub distractor_rate: f64,
    pub label_marker: bool,
}

impl SyntheticConfig {
    pub fn new(n_docs: usize, n_targets: usize, vocab_size: usize, seed: u64) -> Self {
        SyntheticConfig {
            n_docs,
            n_targets,
            vocab_size,
            seed,
            signal_seed: None,
            signal_words: 12,
            signal_slots: 6,
            target_signal_rate: 0.6,
            distractor_rate: 0.3,
            label_marker: false,
        }
    }

    pub fn drug(&self) -> String {
        format!("syn{}mab", self.seed)
    }

    pub fn genes(&self) -> Vec<String> {
        vec![format!("gsyn{}a", self.seed), format!("gsyn{}b", self.seed)]
    }

    pub fn task_spec(&self) -> TaskSpec {
        TaskSpec {
            drug: self.drug(),
            genes: self.genes(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_targets == 0 || self.n_targets >= self.n_docs {
            return Err(domain(format!(
                "synthetic corpus needs 0 < n_targets < n_docs, got {} and {}",
                self.n_targets, self.n_docs
            )));
        }
        if self.vocab_size < 50 {
            return Err(domain(format!(
                "synthetic vocabulary needs at least 50 words, got {}",
                self.vocab_size
            )));
        }
        if self.signal_words >= self.vocab_size / 2 {
            return Err(domain("too many signal words for the vocabulary"));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<(Corpus, Task)> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut signal_rng = ChaCha8Rng::seed_from_u64(self.signal_seed.unwrap_or(self.seed));

        let words: Vec<String> = (0..self.vocab_size).map(|i| format!("w{i:04}")).collect();
        let mut order: Vec<usize> = (0..self.vocab_size).collect();
        order.shuffle(&mut signal_rng);
        let signal: Vec<&str> = order[..self.signal_words]
            .iter()
            .map(|&i| words[i].as_str())
            .collect();
        let mut filler: Vec<&str> = order[self.signal_words..]
            .iter()
            .map(|&i| words[i].as_str())
            .collect();
        filler.sort_unstable();

        let mut is_target = vec![false; self.n_docs];
        for i in rand::seq::index::sample(&mut rng, self.n_docs, self.n_targets).iter() {
            is_target[i] = true;
        }

        let drug = self.drug();
        let genes = self.genes();
        let mut references = Vec::with_capacity(self.n_docs);
        for (i, &target) in is_target.iter().enumerate() {
            let pick = |n: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
                (0..n)
                    .map(|_| filler[rng.gen_range(0..filler.len())].to_string())
                    .collect()
            };
            let mut title = pick(6, &mut rng);
            let mut sentences: Vec<Vec<String>> = (0..3).map(|_| pick(10, &mut rng)).collect();

            if rng.gen_bool(0.5) {
                insert_random(&mut title, drug.clone(), &mut rng);
            } else {
                insert_random(&mut sentences[0], drug.clone(), &mut rng);
            }

            let rate = if target {
                self.target_signal_rate
            } else {
                let relevance: f64 = rng.gen::<f64>().powi(3);
                self.target_signal_rate * relevance
            };
            let mut n_signal = (0..self.signal_slots)
                .filter(|_| rng.gen_bool(rate))
                .count();
            if target {
                n_signal = n_signal.max(1);
            }
            for word in signal.choose_multiple(&mut rng, n_signal) {
                let s = rng.gen_range(0..sentences.len());
                insert_random(&mut sentences[s], word.to_string(), &mut rng);
            }
            if target && self.label_marker {
                let s = rng.gen_range(0..sentences.len());
                insert_random(&mut sentences[s], LABEL_MARKER.to_string(), &mut rng);
            }

            let mut body: Vec<Vec<String>> = (0..4).map(|_| pick(12, &mut rng)).collect();
            let gene = genes[rng.gen_range(0..genes.len())].clone();
            if target {
                let s = rng.gen_range(0..body.len());
                insert_random(&mut body[s], drug.clone(), &mut rng);
                insert_random(&mut body[s], gene, &mut rng);
            } else if rng.gen_bool(self.distractor_rate) {
                let a = rng.gen_range(0..body.len());
                let b = (a + 1 + rng.gen_range(0..body.len() - 1)) % body.len();
                insert_random(&mut body[a], drug.clone(), &mut rng);
                insert_random(&mut body[b], gene, &mut rng);
            }

            references.push(Reference {
                id: format!("syn{}-{:05}", self.seed, i),
                title: capitalize(&title.join(" ")),
                abstract_text: render(&sentences),
                body: Some(render(&body)),
            });
        }

        let corpus = Corpus::new(references)?;
        let task = Task::pose(&corpus, &self.task_spec())?;
        if task.n_targets() != self.n_targets || task.n_candidates() != self.n_docs {
            return Err(domain("synthetic corpus violated its own construction"));
        }
        Ok((corpus, task))
    }
}

fn insert_random(words: &mut Vec<String>, word: String, rng: &mut ChaCha8Rng) {
    let at = rng.gen_range(0..=words.len());
    words.insert(at, word);
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn render(sentences: &[Vec<String>]) -> String {
    sentences
        .iter()
        .map(|s| format!("{}.", capitalize(&s.join(" "))))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One synthetic query with default knobs.
pub fn generate_synthetic_corpus(
    n_docs: usize,
    n_targets: usize,
    vocab_size: usize,
    seed: u64,
) -> Result<(Corpus, Task)> {
    SyntheticConfig::new(n_docs, n_targets, vocab_size, seed).generate()
}

/// Several synthetic queries merged into one corpus, in config order.
pub fn generate_synthetic_collection(configs: &[SyntheticConfig]) -> Result<(Corpus, Vec<Task>)> {
    let mut parts = Vec::with_capacity(configs.len());
    let mut specs = Vec::with_capacity(configs.len());
    for config in configs {
        let (corpus, task) = config.generate()?;
        parts.push(corpus);
        specs.push(task.spec());
    }
    let corpus = Corpus::merge(parts)?;
    let tasks = specs
        .iter()
        .map(|spec| Task::pose(&corpus, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok((corpus, tasks))
}
