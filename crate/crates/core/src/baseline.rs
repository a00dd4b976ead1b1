//! Convolutional read/skip classifier over titles and abstracts.
//!
//! Token embeddings feed feature maps of widths 3, 4 and 5; each map is
//! max-pooled over time after a ReLU, the pooled features are concatenated
//! and a single logistic unit gives the probability that a reference is
//! worth reading in full. The ranked candidates give the baseline's reads
//! and the first reference for the agents.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize_sequence, Corpus, Task, Vocabulary};
use crate::error::{self, domain, Error, Result};
use crate::nn::{
    sigmoid, Adam, Checkpoint, Gradients, ParamId, ParamStore, Tape, Tensor, INIT_BOUND,
};
use crate::seeds;

const INIT_STREAM: u64 = 0xc1a5;
const SHUFFLE_STREAM: u64 = 0x5bff;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub embedding_dim: usize,
    pub feature_maps: usize,
    pub widths: Vec<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            epochs: 5,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            embedding_dim: 64,
            feature_maps: 32,
            widths: vec![3, 4, 5],
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(domain("epochs and batch size must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(domain("learning rate must be positive"));
        }
        if self.embedding_dim == 0 || self.feature_maps == 0 {
            return Err(domain("classifier dimensions must be positive"));
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(domain("window widths must be positive"));
        }
        let distinct: BTreeSet<_> = self.widths.iter().collect();
        if distinct.len() != self.widths.len() {
            return Err(domain("window widths must be distinct"));
        }
        Ok(())
    }
}

/// A candidate of one task with its read/skip label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub task: String,
    pub id: String,
    /// Title and abstract tokens in reading order.
    pub tokens: Vec<String>,
    /// True when the reference is a target of `task`.
    pub read_full_text: bool,
}

/// Candidates of every task, labeled against that task's own targets.
pub fn labeled_examples(corpus: &Corpus, tasks: &[Task]) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for task in tasks {
        for id in &task.candidate_ids {
            let reference = corpus
                .get(id)
                .ok_or_else(|| domain(format!("unknown candidate id {id:?}")))?;
            out.push(LabeledExample {
                task: task.drug.clone(),
                id: id.clone(),
                tokens: tokenize_sequence(&reference.metadata()),
                read_full_text: task.is_target(id),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    embedding: ParamId,
    convs: Vec<(usize, ParamId, ParamId)>,
    out_w: ParamId,
    out_b: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    layout: Layout,
    pub params: ParamStore,
}

impl Classifier {
    pub fn new(table_rows: usize, config: &BaselineConfig) -> Result<Self> {
        config.validate()?;
        if table_rows == 0 {
            return Err(domain("embedding table needs at least one row"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(config.seed, &[INIT_STREAM]));
        let e = config.embedding_dim;
        let maps = config.feature_maps;
        let mut params = ParamStore::new();
        let embedding = params.add(
            "embedding",
            Tensor::uniform(&[table_rows, e], INIT_BOUND, &mut rng),
        )?;
        // Ascending widths, the order a checkpoint reload recovers.
        let mut widths = config.widths.clone();
        widths.sort_unstable();
        let mut convs = Vec::new();
        for &w in &widths {
            let f = params.add(
                &format!("conv{w}.w"),
                Tensor::uniform(&[maps, w * e], INIT_BOUND, &mut rng),
            )?;
            let b = params.add(&format!("conv{w}.b"), Tensor::zeros(&[maps]))?;
            convs.push((w, f, b));
        }
        let out_w = params.add(
            "out.w",
            Tensor::uniform(&[maps * config.widths.len()], INIT_BOUND, &mut rng),
        )?;
        let out_b = params.add("out.b", Tensor::zeros(&[1]))?;
        Ok(Classifier {
            layout: Layout {
                embedding,
                convs,
                out_w,
                out_b,
            },
            params,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.params.get(self.layout.embedding).shape[1]
    }

    pub fn to_checkpoint(&self, vocab: &Vocabulary) -> Checkpoint {
        Checkpoint::from_store(&self.params, self.embedding_dim(), &vocab.hash())
    }

    pub fn from_checkpoint(checkpoint: &Checkpoint, vocab: &Vocabulary) -> Result<Self> {
        checkpoint.check_vocab(&vocab.hash())?;
        let params = checkpoint.to_store()?;
        let e = checkpoint.d;
        let embedding = params.expect("embedding", &[vocab.table_rows(), e])?;
        let mut widths: Vec<usize> = params
            .iter()
            .filter_map(|(name, _)| name.strip_prefix("conv")?.strip_suffix(".w")?.parse().ok())
            .collect();
        widths.sort_unstable();
        if widths.is_empty() {
            return Err(Error::Checkpoint(
                "classifier has no convolution filters".into(),
            ));
        }
        let maps = params
            .by_name(&format!("conv{}.w", widths[0]))
            .map(|t| t.shape[0])
            .unwrap_or(0);
        let mut convs = Vec::new();
        for &w in &widths {
            let f = params.expect(&format!("conv{w}.w"), &[maps, w * e])?;
            let b = params.expect(&format!("conv{w}.b"), &[maps])?;
            convs.push((w, f, b));
        }
        let out_w = params.expect("out.w", &[maps * widths.len()])?;
        let out_b = params.expect("out.b", &[1])?;
        Ok(Classifier {
            layout: Layout {
                embedding,
                convs,
                out_w,
                out_b,
            },
            params,
        })
    }

    fn logit(&self, tape: &mut Tape<'_>, rows: &[usize]) -> crate::nn::Var {
        let l = &self.layout;
        let mut pooled = None;
        for &(w, f, b) in &l.convs {
            let p = tape.conv_max_pool(l.embedding, rows, f, b, w);
            pooled = Some(match pooled {
                None => p,
                Some(acc) => tape.concat(acc, p),
            });
        }
        let features = pooled.expect("at least one width");
        let w = tape.param(l.out_w);
        let b = tape.param(l.out_b);
        let z = tape.dot(w, features);
        tape.add(z, b)
    }

    /// Probability of "read full text" for a sequence of embedding rows.
    pub fn predict_rows(&self, rows: &[usize]) -> f64 {
        let mut tape = Tape::new(&self.params);
        let z = self.logit(&mut tape, rows);
        sigmoid(tape.scalar(z))
    }

    pub fn predict_tokens(&self, vocab: &Vocabulary, tokens: &[String]) -> f64 {
        self.predict_rows(&vocab.sequence_indices(tokens))
    }

    /// Loss and gradient of one example.
    fn example_gradient(&self, rows: &[usize], label: bool) -> (f64, Gradients) {
        let mut tape = Tape::new(&self.params);
        let z = self.logit(&mut tape, rows);
        let loss = tape.bce_with_logits(z, if label { 1.0 } else { 0.0 });
        (tape.scalar(loss), tape.backward(loss))
    }

    /// Fraction of examples classified correctly at probability 0.5.
    pub fn accuracy(&self, vocab: &Vocabulary, examples: &[LabeledExample]) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        let correct = examples
            .par_iter()
            .filter(|ex| (self.predict_tokens(vocab, &ex.tokens) >= 0.5) == ex.read_full_text)
            .count();
        correct as f64 / examples.len() as f64
    }
}

/// One epoch of example indices: every negative once and as many positives
/// drawn with replacement, shuffled.
pub fn balanced_epoch<R: Rng>(positives: &[usize], negatives: &[usize], rng: &mut R) -> Vec<usize> {
    let mut epoch: Vec<usize> = negatives.to_vec();
    if !positives.is_empty() {
        epoch.extend((0..negatives.len()).map(|_| positives[rng.gen_range(0..positives.len())]));
    }
    epoch.shuffle(rng);
    epoch
}

/// Loss after each epoch of classifier training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub classifier: Classifier,
    pub epoch_losses: Vec<f64>,
}

/// Each epoch keeps every negative and draws as many positives with
/// replacement, then shuffles and takes one optimizer step per batch.
pub fn train_classifier(
    tasks: &[Task],
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &BaselineConfig,
) -> Result<TrainedClassifier> {
    config.validate()?;
    let examples = labeled_examples(corpus, tasks)?;
    let rows: Vec<Vec<usize>> = examples
        .iter()
        .map(|ex| vocab.sequence_indices(&ex.tokens))
        .collect();
    let positives: Vec<usize> = (0..examples.len())
        .filter(|&i| examples[i].read_full_text)
        .collect();
    let negatives: Vec<usize> = (0..examples.len())
        .filter(|&i| !examples[i].read_full_text)
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Training {
            step: 0,
            message: format!(
                "classifier needs both labels, got {} positive and {} negative examples",
                positives.len(),
                negatives.len()
            ),
        });
    }

    let mut classifier = Classifier::new(vocab.table_rows(), config)?;
    let mut adam = Adam::new(&classifier.params, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(config.seed, &[SHUFFLE_STREAM]));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let epoch = balanced_epoch(&positives, &negatives, &mut rng);

        let mut total = 0.0;
        for batch in epoch.chunks(config.batch_size) {
            let parts: Vec<(f64, Gradients)> = batch
                .par_iter()
                .map(|&i| classifier.example_gradient(&rows[i], examples[i].read_full_text))
                .collect();
            let mut grads = Gradients::zeros_like(&classifier.params);
            for (loss, g) in &parts {
                total += loss;
                grads.add_assign(g);
            }
            grads.scale(1.0 / batch.len() as f64);
            if !grads.all_finite() {
                return Err(Error::Training {
                    step: adam.steps() as usize,
                    message: "non-finite classifier gradient".into(),
                });
            }
            adam.step(&mut classifier.params, &grads);
        }
        epoch_losses.push(total / epoch.len() as f64);
    }
    Ok(TrainedClassifier {
        classifier,
        epoch_losses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub id: String,
    pub probability: f64,
}

/// Orders by descending probability, ties by ascending id.
pub fn order_by_probability(scored: Vec<RankedCandidate>) -> Vec<RankedCandidate> {
    let mut scored = scored;
    scored.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then_with(|| a.id.cmp(&b.id))
    });
    scored
}

pub fn rank_candidates(
    classifier: &Classifier,
    corpus: &Corpus,
    vocab: &Vocabulary,
    candidate_ids: &[String],
) -> Result<Vec<RankedCandidate>> {
    let scored = candidate_ids
        .par_iter()
        .map(|id| {
            let reference = corpus
                .get(id)
                .ok_or_else(|| domain(format!("unknown candidate id {id:?}")))?;
            let tokens = tokenize_sequence(&reference.metadata());
            Ok(RankedCandidate {
                id: id.clone(),
                probability: classifier.predict_tokens(vocab, &tokens),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(order_by_probability(scored))
}

/// 1-based position of the first target in a ranking.
pub fn reads_until_target<S: AsRef<str>>(
    ranking: &[S],
    targets: &BTreeSet<String>,
) -> Result<usize> {
    if targets.is_empty() {
        return Err(domain("no targets to look for"));
    }
    ranking
        .iter()
        .position(|id| targets.contains(id.as_ref()))
        .map(|p| p + 1)
        .ok_or_else(|| domain("no target appears in the ranking"))
}

pub fn write_rankings_csv<W: Write>(
    rankings: &[(String, Vec<RankedCandidate>)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["task", "rank", "id", "probability"])?;
    for (task, ranking) in rankings {
        for (rank, c) in ranking.iter().enumerate() {
            w.write_record([
                task.clone(),
                (rank + 1).to_string(),
                c.id.clone(),
                c.probability.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_rankings(rankings: &[(String, Vec<RankedCandidate>)], path: &Path) -> Result<()> {
    write_rankings_csv(rankings, error::create(path)?)
}
