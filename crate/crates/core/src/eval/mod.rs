//! Cost metrics and the seeded median evaluation protocol.
//!
//! `CTN = 1 + (candidates - targets)` is the worst case number of reads, and
//! `EI = HoF * reads / CTN` is the fraction of that worst case actually
//! paid, scaled by how hard the task was. Lower is better.

mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{rollout, Behavior, TaskContext};
use crate::error::{domain, Result};
use crate::seeds;

pub use report::{emit_report, render_table, ReportFiles};

pub const DEFAULT_EPISODES: usize = 30;

pub fn ctn(n_candidates: usize, n_targets: usize) -> Result<usize> {
    if n_targets == 0 || n_targets > n_candidates {
        return Err(domain(format!(
            "need 0 < targets <= candidates, got {n_targets} of {n_candidates}"
        )));
    }
    Ok(1 + n_candidates - n_targets)
}

/// `hof * reads / ctn`. Reads may be fractional so that medians
/// of even-sized samples, which average two reads, are accepted.
pub fn evaluation_index(hof: f64, reads: f64, ctn: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&hof) {
        return Err(domain(format!("hardness must lie in [0, 1), got {hof}")));
    }
    if ctn == 0 || !(reads >= 1.0 && reads <= ctn as f64) {
        return Err(domain(format!("reads must lie in [1, {ctn}], got {reads}")));
    }
    Ok(hof * reads / ctn as f64)
}

/// Median of a sample; the lower of the two middle elements when the count
/// is even.
pub fn median_lower(values: &[usize]) -> Result<usize> {
    if values.is_empty() {
        return Err(domain("median of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    Ok(sorted[(sorted.len() - 1) / 2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Reinforce,
    A2c,
    Random,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Reinforce => "reinforce",
            Method::A2c => "a2c",
            Method::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "baseline" => Some(Method::Baseline),
            "reinforce" => Some(Method::Reinforce),
            "a2c" => Some(Method::A2c),
            "random" => Some(Method::Random),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    pub method: Method,
    /// Reads of each episode, in episode order.
    pub reads: Vec<usize>,
    /// Seed of each episode; empty for deterministic methods.
    pub seeds: Vec<u64>,
    pub median_reads: usize,
    pub hof: f64,
    pub ctn: usize,
    pub ei: f64,
}

impl TaskResult {
    pub fn new(
        task: &str,
        method: Method,
        reads: Vec<usize>,
        seeds: Vec<u64>,
        hof: f64,
        ctn: usize,
    ) -> Result<Self> {
        if !seeds.is_empty() && seeds.len() != reads.len() {
            return Err(domain("one seed per episode expected"));
        }
        let median_reads = median_lower(&reads)?;
        if let Some(&r) = reads.iter().find(|&&r| r == 0 || r > ctn) {
            return Err(domain(format!("reads {r} outside [1, {ctn}]")));
        }
        let ei = evaluation_index(hof, median_reads as f64, ctn)?;
        Ok(TaskResult {
            task: task.to_string(),
            method,
            reads,
            seeds,
            median_reads,
            hof,
            ctn,
            ei,
        })
    }
}

/// Seed of evaluation episode `episode` on the task at `task_index`. Every
/// method sees the same seeds.
pub fn episode_seed(base_seed: u64, task_index: usize, episode: usize) -> u64 {
    seeds::derive(base_seed, &[task_index as u64, episode as u64])
}

/// Runs `n_episodes` seeded rollouts per task from the given start papers
/// and summarizes them. Episodes run in parallel; results do not depend on
/// scheduling.
pub fn evaluate_agent(
    contexts: &[TaskContext<'_>],
    starts: &[String],
    behavior: &Behavior<'_>,
    method: Method,
    n_episodes: usize,
    base_seed: u64,
) -> Result<Vec<TaskResult>> {
    if n_episodes == 0 {
        return Err(domain("at least one evaluation episode is needed"));
    }
    if starts.len() != contexts.len() {
        return Err(domain(format!(
            "{} start papers for {} tasks",
            starts.len(),
            contexts.len()
        )));
    }
    contexts
        .iter()
        .zip(starts)
        .enumerate()
        .map(|(task_index, (ctx, start))| {
            let ctn = ctx.ctn();
            let seeds: Vec<u64> = (0..n_episodes)
                .map(|e| episode_seed(base_seed, task_index, e))
                .collect();
            let reads = seeds
                .par_iter()
                .map(|&seed| rollout(ctx, behavior, start, seed).map(|t| t.reads(ctn)))
                .collect::<Result<Vec<usize>>>()?;
            TaskResult::new(&ctx.task.drug, method, reads, seeds, ctx.hardness(), ctn)
        })
        .collect()
}
