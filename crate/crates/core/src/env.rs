//! The episodic reading environment.
//!
//! A state is the reference currently open. Moving to a neighbor costs the
//! step penalty unless the neighbor is a target, in which case the episode
//! ends with reward `terminal_scale / T`, `T` being the number of moves made.
//! An episode that starts on a target ends immediately with `T = 1`.
//! Episodes that run `CTN` moves without success end as failures.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Reference, Task};
use crate::error::{self, domain, Error, Result};
use crate::eval::ctn;
use crate::recsys::NeighborGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Reward for opening a non-target, `c_P`.
    pub step_penalty: f64,
    /// Discount factor γ.
    pub discount: f64,
    pub terminal_scale: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            step_penalty: -0.3,
            discount: 0.9,
            terminal_scale: 1.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_penalty < 0.0) {
            return Err(domain(format!(
                "step penalty must be negative, got {}",
                self.step_penalty
            )));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(domain(format!(
                "discount must lie in (0, 1], got {}",
                self.discount
            )));
        }
        if !(self.terminal_scale > 0.0) {
            return Err(domain("terminal scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeState {
    pub current_id: String,
    pub step_index: usize,
    /// Every reference opened, in order, revisits included.
    pub visited_ids: Vec<String>,
    visited: BTreeSet<String>,
    pub done: bool,
    pub succeeded: bool,
}

impl EpisodeState {
    /// Distinct references opened so far; what the reader paid for.
    pub fn unique_reads(&self) -> usize {
        self.visited.len()
    }

    pub fn has_visited(&self, id: &str) -> bool {
        self.visited.contains(id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: EpisodeState,
    pub reward: f64,
    pub done: bool,
}

/// Environment over one task and its neighbor graph.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    corpus: &'a Corpus,
    task: &'a Task,
    graph: &'a NeighborGraph,
    rewards: RewardConfig,
    step_cap: usize,
}

impl<'a> Environment<'a> {
    pub fn new(
        corpus: &'a Corpus,
        task: &'a Task,
        graph: &'a NeighborGraph,
        rewards: RewardConfig,
    ) -> Result<Self> {
        rewards.validate()?;
        if graph.ids() != task.candidate_ids.as_slice() {
            return Err(domain(format!(
                "neighbor graph was not built over the candidates of {:?}",
                task.drug
            )));
        }
        Ok(Environment {
            corpus,
            task,
            graph,
            rewards,
            step_cap: ctn(task.n_candidates(), task.n_targets())?,
        })
    }

    pub fn task(&self) -> &'a Task {
        self.task
    }

    pub fn graph(&self) -> &'a NeighborGraph {
        self.graph
    }

    pub fn rewards(&self) -> RewardConfig {
        self.rewards
    }

    pub fn step_cap(&self) -> usize {
        self.step_cap
    }

    /// Opens the start reference. The reward is `Some` only when the start
    /// is already a target.
    pub fn reset(&self, start_id: &str) -> Result<(EpisodeState, Option<f64>)> {
        if self.graph.position(start_id).is_none() {
            return Err(domain(format!(
                "start {start_id:?} is not a candidate of {:?}",
                self.task.drug
            )));
        }
        let hit = self.task.is_target(start_id);
        let state = EpisodeState {
            current_id: start_id.to_string(),
            step_index: 0,
            visited_ids: vec![start_id.to_string()],
            visited: BTreeSet::from([start_id.to_string()]),
            done: hit,
            succeeded: hit,
        };
        Ok((state, hit.then_some(self.rewards.terminal_scale)))
    }

    pub fn step(&self, mut state: EpisodeState, action_id: &str) -> Result<Transition> {
        if state.done {
            return Err(Error::EpisodeFinished);
        }
        let legal = self
            .graph
            .neighbors(&state.current_id)
            .map(|list| list.iter().any(|n| self.graph.id(n.index) == action_id))
            .unwrap_or(false);
        if !legal {
            return Err(Error::IllegalAction {
                from: state.current_id,
                to: action_id.to_string(),
            });
        }

        state.step_index += 1;
        state.current_id = action_id.to_string();
        state.visited_ids.push(action_id.to_string());
        state.visited.insert(action_id.to_string());

        let reward = if self.task.is_target(action_id) {
            state.done = true;
            state.succeeded = true;
            self.rewards.terminal_scale / state.step_index as f64
        } else {
            if state.step_index >= self.step_cap {
                state.done = true;
            }
            self.rewards.step_penalty
        };
        let done = state.done;
        Ok(Transition {
            state,
            reward,
            done,
        })
    }

    /// Free metadata of any candidate.
    pub fn metadata(&self, id: &str) -> Option<&'a Reference> {
        self.graph.position(id)?;
        self.corpus.get(id)
    }

    /// Full text of a reference, available only once it has been opened.
    pub fn full_text(&self, state: &EpisodeState, id: &str) -> Result<Option<&'a str>> {
        if !state.has_visited(id) {
            return Err(domain(format!("{id:?} has not been opened yet")));
        }
        Ok(self.corpus.get(id).and_then(|r| r.body.as_deref()))
    }
}

/// `G_t = r_t + γ G_{t+1}`, with the last return equal to the last reward.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(domain("cannot discount an empty reward list"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(domain(format!("discount must lie in (0, 1], got {gamma}")));
    }
    let mut returns = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        returns[t] = acc;
    }
    Ok(returns)
}

/// One line of an exported episode trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub from_id: String,
    pub to_id: String,
    pub reward: f64,
    pub done: bool,
}

pub fn write_trace_jsonl<W: Write>(records: &[StepRecord], mut out: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_trace(records: &[StepRecord], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(error::create(path)?);
    write_trace_jsonl(records, &mut out)?;
    out.flush()?;
    Ok(())
}
