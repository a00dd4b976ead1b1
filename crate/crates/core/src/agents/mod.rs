//! Episode rollouts and the two policy-gradient learners.

mod a2c;
mod reinforce;
mod rollout;
mod train;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Task, Vocabulary};
use crate::env::{Environment, RewardConfig, StepRecord};
use crate::error::{domain, Result};
use crate::eval::ctn;
use crate::nn::{DistanceWeighting, DEFAULT_DIM};
use crate::recsys::{build_neighbor_graph, NeighborGraph};

pub use a2c::{a2c_objective, a2c_update, A2cLosses};
pub use reinforce::{
    reinforce_objective, reinforce_update, running_baseline, BaselineState, ReinforceLoss,
};
pub use rollout::{replay, rollout, Behavior, Replay};
pub use train::{
    continue_training, initial_policy, save_training_log, train_agent, write_training_log,
    TrainLogRow, TrainedAgent,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Reinforce,
    A2c,
}

impl Algo {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reinforce" => Some(Algo::Reinforce),
            "a2c" => Some(Algo::A2c),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Reinforce => "reinforce",
            Algo::A2c => "a2c",
        }
    }

    /// A2C weights its logits by neighbor distance; REINFORCE does not.
    pub fn default_weighting(self) -> DistanceWeighting {
        match self {
            Algo::Reinforce => DistanceWeighting::None,
            Algo::A2c => DistanceWeighting::Distance,
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Learner hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub algo: Algo,
    pub d: usize,
    pub learning_rate: f64,
    /// Running-baseline mixing rate β (REINFORCE).
    pub beta: f64,
    /// Entropy bonus δ (REINFORCE).
    pub delta: f64,
    /// Policy/value loss mix λ (A2C).
    pub lambda: f64,
    pub episodes_per_task: usize,
    pub seed: u64,
    pub weighting: DistanceWeighting,
}

impl AgentConfig {
    pub fn new(algo: Algo) -> Self {
        AgentConfig {
            algo,
            d: DEFAULT_DIM,
            learning_rate: 1e-3,
            beta: 0.5,
            delta: 1e-4,
            lambda: 0.5,
            episodes_per_task: 24,
            seed: 0,
            weighting: algo.default_weighting(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(domain("observation dimension must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(domain("learning rate must be positive"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(domain(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if !(self.delta >= 0.0) {
            return Err(domain("entropy coefficient must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(domain(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// A task prepared for rollouts: its neighbor graph and the embedding rows
/// of every candidate and of the query.
#[derive(Debug, Clone)]
pub struct TaskContext<'c> {
    pub corpus: &'c Corpus,
    pub task: Task,
    pub graph: NeighborGraph,
    pub rewards: RewardConfig,
    candidate_rows: Vec<Vec<usize>>,
    query_rows: Vec<usize>,
}

impl<'c> TaskContext<'c> {
    pub fn new(
        corpus: &'c Corpus,
        vocab: &Vocabulary,
        task: Task,
        k: usize,
        rewards: RewardConfig,
    ) -> Result<Self> {
        let graph = build_neighbor_graph(corpus, &task.candidate_ids, k)?;
        Self::with_graph(corpus, vocab, task, graph, rewards)
    }

    pub fn with_graph(
        corpus: &'c Corpus,
        vocab: &Vocabulary,
        task: Task,
        graph: NeighborGraph,
        rewards: RewardConfig,
    ) -> Result<Self> {
        rewards.validate()?;
        if task.n_targets() == 0 {
            return Err(domain(format!("task {:?} has no target", task.drug)));
        }
        if task.n_candidates() < 2 {
            return Err(domain(format!(
                "task {:?} has fewer than 2 candidates",
                task.drug
            )));
        }
        let candidate_rows = graph
            .ids()
            .iter()
            .map(|id| {
                corpus
                    .metadata_tokens(id)
                    .map(|t| vocab.indices(t))
                    .ok_or_else(|| domain(format!("unknown candidate id {id:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let query_rows = vocab.indices(&task.query_tokens());
        let ctx = TaskContext {
            corpus,
            task,
            graph,
            rewards,
            candidate_rows,
            query_rows,
        };
        ctx.environment()?;
        Ok(ctx)
    }

    pub fn environment(&self) -> Result<Environment<'_>> {
        Environment::new(self.corpus, &self.task, &self.graph, self.rewards)
    }

    pub fn ctn(&self) -> usize {
        ctn(self.task.n_candidates(), self.task.n_targets()).expect("validated task")
    }

    pub fn hardness(&self) -> f64 {
        self.task.hardness()
    }

    /// Embedding rows of the candidate at a graph position.
    pub fn candidate_rows(&self, index: usize) -> &[usize] {
        &self.candidate_rows[index]
    }

    pub fn query_rows(&self) -> &[usize] {
        &self.query_rows
    }
}

/// One move of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub from_id: String,
    /// Graph positions of the offered neighbors, in list order.
    pub candidates: Vec<usize>,
    pub distances: Vec<f64>,
    pub chosen: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub observation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub start_id: String,
    pub steps: Vec<TraceStep>,
    /// Reward granted by reset when the start is already a target.
    pub initial_reward: Option<f64>,
    pub succeeded: bool,
    pub unique_reads: usize,
    pub visited: Vec<String>,
}

impl EpisodeTrace {
    /// Episode length `T`; a start on a target counts as one.
    pub fn len(&self) -> usize {
        self.steps.len().max(1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rewards(&self) -> Vec<f64> {
        match self.initial_reward {
            Some(r) if self.steps.is_empty() => vec![r],
            _ => self.steps.iter().map(|s| s.reward).collect(),
        }
    }

    /// Papers read for evaluation: unique reads on success, CTN on failure.
    pub fn reads(&self, ctn: usize) -> usize {
        if self.succeeded {
            self.unique_reads
        } else {
            ctn
        }
    }

    pub fn step_records(&self, graph: &NeighborGraph) -> Vec<StepRecord> {
        let n = self.steps.len();
        self.steps
            .iter()
            .enumerate()
            .map(|(t, s)| StepRecord {
                t: t + 1,
                from_id: s.from_id.clone(),
                to_id: graph.id(s.candidates[s.chosen]).to_string(),
                reward: s.reward,
                done: t + 1 == n,
            })
            .collect()
    }
}
