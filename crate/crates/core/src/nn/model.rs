//! Reference encoder, recurrent observation update, policy scorer and value
//! head.
//!
//! ```text
//! feature(P, q) = M · [mean E[P]; mean E[q]]
//! z             = σ(W_z f + U_z o + b_z)
//! O_t           = z ⊙ O_{t-1} + (1 - z) ⊙ tanh(W f + U o + b)
//! logit_j       = O_t · (G feature_j)     (optionally times w_j)
//! v(O_t)        = w_v · O_t + b_v
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{Checkpoint, ParamId, ParamStore, Tensor};
use super::tape::{Tape, Var};
use crate::corpus::{TokenSet, Vocabulary};
use crate::error::{domain, Result};

pub const DEFAULT_DIM: usize = 64;
pub const INIT_BOUND: f64 = 0.08;

/// How neighbor distances enter the policy logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceWeighting {
    /// Plain softmax over the scores.
    #[default]
    None,
    /// Logits multiplied by the Jaccard distance.
    Distance,
    /// Logits multiplied by `1 - distance`.
    Similarity,
}

impl DistanceWeighting {
    pub fn weights(self, distances: &[f64]) -> Option<Vec<f64>> {
        match self {
            DistanceWeighting::None => None,
            DistanceWeighting::Distance => Some(distances.to_vec()),
            DistanceWeighting::Similarity => Some(distances.iter().map(|d| 1.0 - d).collect()),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(DistanceWeighting::None),
            "distance" => Some(DistanceWeighting::Distance),
            "similarity" => Some(DistanceWeighting::Similarity),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceWeighting::None => "none",
            DistanceWeighting::Distance => "distance",
            DistanceWeighting::Similarity => "similarity",
        }
    }
}

/// Parameter handles of the policy network inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyLayout {
    pub d: usize,
    pub embedding: ParamId,
    pub projection: ParamId,
    pub cell_w: ParamId,
    pub cell_u: ParamId,
    pub cell_b: ParamId,
    pub gate_w: ParamId,
    pub gate_u: ParamId,
    pub gate_b: ParamId,
    pub policy: ParamId,
    pub value_w: ParamId,
    pub value_b: ParamId,
}

impl PolicyLayout {
    /// Registers freshly initialized parameters.
    pub fn init(store: &mut ParamStore, table_rows: usize, d: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut add = |name: &str, shape: &[usize]| {
            store.add(name, Tensor::uniform(shape, INIT_BOUND, &mut rng))
        };
        Ok(PolicyLayout {
            d,
            embedding: add("embedding", &[table_rows, d])?,
            projection: add("encoder.projection", &[d, 2 * d])?,
            cell_w: add("cell.w", &[d, d])?,
            cell_u: add("cell.u", &[d, d])?,
            cell_b: add("cell.b", &[d])?,
            gate_w: add("gate.w", &[d, d])?,
            gate_u: add("gate.u", &[d, d])?,
            gate_b: add("gate.b", &[d])?,
            policy: add("policy.w", &[d, d])?,
            value_w: add("value.w", &[d])?,
            value_b: add("value.b", &[1])?,
        })
    }

    /// Finds the parameters of a loaded store and checks their shapes.
    pub fn resolve(store: &ParamStore, d: usize) -> Result<Self> {
        let table = store
            .by_name("embedding")
            .ok_or_else(|| domain("checkpoint has no embedding table"))?;
        let rows = table.shape.first().copied().unwrap_or(0);
        Ok(PolicyLayout {
            d,
            embedding: store.expect("embedding", &[rows, d])?,
            projection: store.expect("encoder.projection", &[d, 2 * d])?,
            cell_w: store.expect("cell.w", &[d, d])?,
            cell_u: store.expect("cell.u", &[d, d])?,
            cell_b: store.expect("cell.b", &[d])?,
            gate_w: store.expect("gate.w", &[d, d])?,
            gate_u: store.expect("gate.u", &[d, d])?,
            gate_b: store.expect("gate.b", &[d])?,
            policy: store.expect("policy.w", &[d, d])?,
            value_w: store.expect("value.w", &[d])?,
            value_b: store.expect("value.b", &[1])?,
        })
    }

    pub fn encode(&self, tape: &mut Tape, reference: &[usize], query: &[usize]) -> Var {
        let q = self.query_mean(tape, query);
        self.encode_with(tape, reference, q)
    }

    /// Mean query embedding, shared by every encoding within an episode.
    pub fn query_mean(&self, tape: &mut Tape, query: &[usize]) -> Var {
        tape.embed_mean(self.embedding, query)
    }

    pub fn encode_with(&self, tape: &mut Tape, reference: &[usize], query_mean: Var) -> Var {
        let r = tape.embed_mean(self.embedding, reference);
        let joined = tape.concat(r, query_mean);
        tape.matvec(self.projection, joined)
    }

    pub fn update(&self, tape: &mut Tape, prev: Var, feature: Var) -> Var {
        let gate = {
            let a = tape.matvec(self.gate_w, feature);
            let b = tape.matvec(self.gate_u, prev);
            let bias = tape.param(self.gate_b);
            let s = tape.add(a, b);
            let s = tape.add(s, bias);
            tape.sigmoid(s)
        };
        let candidate = {
            let a = tape.matvec(self.cell_w, feature);
            let b = tape.matvec(self.cell_u, prev);
            let bias = tape.param(self.cell_b);
            let s = tape.add(a, b);
            let s = tape.add(s, bias);
            tape.tanh(s)
        };
        let keep = tape.mul(gate, prev);
        let open = tape.affine(gate, -1.0, 1.0);
        let fresh = tape.mul(open, candidate);
        tape.add(keep, fresh)
    }

    /// Log-probabilities over the candidates.
    pub fn log_policy(
        &self,
        tape: &mut Tape,
        obs: Var,
        candidates: &[Var],
        weights: Option<&[f64]>,
    ) -> Var {
        let query = tape.matvec_t(self.policy, obs);
        let scores: Vec<Var> = candidates.iter().map(|&c| tape.dot(query, c)).collect();
        let mut logits = tape.stack(&scores);
        if let Some(w) = weights {
            logits = tape.scale_const(logits, w);
        }
        tape.log_softmax(logits)
    }

    pub fn value(&self, tape: &mut Tape, obs: Var) -> Var {
        let w = tape.param(self.value_w);
        let b = tape.param(self.value_b);
        let v = tape.dot(w, obs);
        tape.add(v, b)
    }
}

/// Policy parameters together with their layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub layout: PolicyLayout,
    pub params: ParamStore,
}

impl PolicyNet {
    pub fn new(table_rows: usize, d: usize, seed: u64) -> Result<Self> {
        if d == 0 || table_rows == 0 {
            return Err(domain("policy dimensions must be positive"));
        }
        let mut params = ParamStore::new();
        let layout = PolicyLayout::init(&mut params, table_rows, d, seed)?;
        Ok(PolicyNet { layout, params })
    }

    pub fn d(&self) -> usize {
        self.layout.d
    }

    pub fn to_checkpoint(&self, vocab: &Vocabulary) -> Checkpoint {
        Checkpoint::from_store(&self.params, self.layout.d, &vocab.hash())
    }

    pub fn from_checkpoint(checkpoint: &Checkpoint, vocab: &Vocabulary) -> Result<Self> {
        checkpoint.check_vocab(&vocab.hash())?;
        let params = checkpoint.to_store()?;
        let layout = PolicyLayout::resolve(&params, checkpoint.d)?;
        if params.get(layout.embedding).shape[0] != vocab.table_rows() {
            return Err(domain("embedding table does not match the vocabulary"));
        }
        Ok(PolicyNet { layout, params })
    }

    fn check_dim(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.layout.d {
            return Err(domain(format!(
                "{what} has dimension {}, expected {}",
                v.len(),
                self.layout.d
            )));
        }
        Ok(())
    }

    /// Feature vector of a reference in the context of a query, from
    /// embedding-row indices.
    pub fn encode_reference(&self, reference: &[usize], query: &[usize]) -> Vec<f64> {
        let mut tape = Tape::new(&self.params);
        let v = self.layout.encode(&mut tape, reference, query);
        tape.value(v).to_vec()
    }

    pub fn encode_tokens(
        &self,
        vocab: &Vocabulary,
        reference: &TokenSet,
        query: &TokenSet,
    ) -> Vec<f64> {
        self.encode_reference(&vocab.indices(reference), &vocab.indices(query))
    }

    pub fn update_observation(&self, prev: &[f64], feature: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(prev, "previous observation")?;
        self.check_dim(feature, "feature")?;
        let mut tape = Tape::new(&self.params);
        let p = tape.constant(prev.to_vec());
        let f = tape.constant(feature.to_vec());
        let o = self.layout.update(&mut tape, p, f);
        Ok(tape.value(o).to_vec())
    }

    /// Action probabilities over candidate features.
    pub fn score_actions(
        &self,
        obs: &[f64],
        candidates: &[Vec<f64>],
        weights: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        self.check_dim(obs, "observation")?;
        if candidates.is_empty() {
            return Err(domain("no candidates to score"));
        }
        for c in candidates {
            self.check_dim(c, "candidate feature")?;
        }
        if let Some(w) = weights {
            if w.len() != candidates.len() {
                return Err(domain(format!(
                    "{} weights for {} candidates",
                    w.len(),
                    candidates.len()
                )));
            }
        }
        let mut tape = Tape::new(&self.params);
        let o = tape.constant(obs.to_vec());
        let feats: Vec<Var> = candidates
            .iter()
            .map(|c| tape.constant(c.clone()))
            .collect();
        let lp = self.layout.log_policy(&mut tape, o, &feats, weights);
        Ok(tape.value(lp).iter().map(|x| x.exp()).collect())
    }

    pub fn value_estimate(&self, obs: &[f64]) -> Result<f64> {
        self.check_dim(obs, "observation")?;
        let mut tape = Tape::new(&self.params);
        let o = tape.constant(obs.to_vec());
        let v = self.layout.value(&mut tape, o);
        Ok(tape.scalar(v))
    }
}
