use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{a2c_update, reinforce_update, rollout, AgentConfig, Algo, Behavior, TaskContext};
use crate::corpus::Vocabulary;
use crate::error::{self, Error, Result};
use crate::nn::{Adam, PolicyNet};
use crate::seeds;

const INIT_STREAM: u64 = 0x1417;
const EPISODE_STREAM: u64 = 0x7e91;

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub episode: usize,
    pub task: String,
    pub algo: Algo,
    #[serde(rename = "T")]
    pub t: usize,
    pub succeeded: bool,
    pub loss_pi: f64,
    pub loss_v: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrainedAgent {
    pub net: PolicyNet,
    pub log: Vec<TrainLogRow>,
}

/// The network a training run starts from.
pub fn initial_policy(vocab: &Vocabulary, config: &AgentConfig) -> Result<PolicyNet> {
    PolicyNet::new(
        vocab.table_rows(),
        config.d,
        seeds::derive(config.seed, &[INIT_STREAM]),
    )
}

fn check_preconditions(
    contexts: &[TaskContext<'_>],
    starts: &[String],
    vocab: &Vocabulary,
    config: &AgentConfig,
) -> Result<()> {
    config
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    if contexts.is_empty() {
        return Err(Error::Config("no training tasks".into()));
    }
    if starts.len() != contexts.len() {
        return Err(Error::Config(format!(
            "{} start papers for {} tasks",
            starts.len(),
            contexts.len()
        )));
    }
    for (ctx, start) in contexts.iter().zip(starts) {
        let drug = &ctx.task.drug;
        if ctx.task.n_targets() == 0 {
            return Err(Error::Config(format!("task {drug:?} has no target")));
        }
        if ctx.task.n_candidates() < 2 {
            return Err(Error::Config(format!(
                "task {drug:?} has fewer than 2 candidates"
            )));
        }
        if ctx.graph.position(start).is_none() {
            return Err(Error::Config(format!(
                "start {start:?} is not a candidate of {drug:?}"
            )));
        }
        let rows = vocab.table_rows();
        let out_of_table = (0..ctx.graph.len())
            .flat_map(|i| ctx.candidate_rows(i).iter())
            .chain(ctx.query_rows())
            .any(|&r| r >= rows);
        if out_of_table {
            return Err(Error::Config(format!(
                "task {drug:?} was prepared with a different vocabulary"
            )));
        }
    }
    Ok(())
}

/// Trains from the seeded initial network, visiting tasks round-robin with
/// one update per episode.
pub fn train_agent(
    contexts: &[TaskContext<'_>],
    starts: &[String],
    vocab: &Vocabulary,
    config: &AgentConfig,
) -> Result<TrainedAgent> {
    check_preconditions(contexts, starts, vocab, config)?;
    let net = initial_policy(vocab, config)?;
    continue_training(net, contexts, starts, vocab, config)
}

/// Same loop as [`train_agent`] from an existing network.
pub fn continue_training(
    mut net: PolicyNet,
    contexts: &[TaskContext<'_>],
    starts: &[String],
    vocab: &Vocabulary,
    config: &AgentConfig,
) -> Result<TrainedAgent> {
    check_preconditions(contexts, starts, vocab, config)?;
    if net.d() != config.d {
        return Err(Error::Config(format!(
            "network has dimension {}, config asks for {}",
            net.d(),
            config.d
        )));
    }
    let mut adam = Adam::new(&net.params, config.learning_rate);
    let mut log = Vec::with_capacity(config.episodes_per_task * contexts.len());
    for round in 0..config.episodes_per_task {
        for (task_index, (ctx, start)) in contexts.iter().zip(starts).enumerate() {
            let seed = seeds::derive(
                config.seed,
                &[EPISODE_STREAM, round as u64, task_index as u64],
            );
            let behavior = Behavior::Sample {
                net: &net,
                weighting: config.weighting,
            };
            let trace = rollout(ctx, &behavior, start, seed)?;
            let (loss_pi, loss_v) = match config.algo {
                Algo::Reinforce => {
                    let l = reinforce_update(
                        &mut net,
                        &mut adam,
                        ctx,
                        &trace,
                        config.beta,
                        config.delta,
                        config.weighting,
                    )?;
                    (l.loss, 0.0)
                }
                Algo::A2c => {
                    let l = a2c_update(
                        &mut net,
                        &mut adam,
                        ctx,
                        &trace,
                        config.lambda,
                        config.weighting,
                    )?;
                    (l.loss_pi, l.loss_v)
                }
            };
            log.push(TrainLogRow {
                episode: log.len() + 1,
                task: ctx.task.drug.clone(),
                algo: config.algo,
                t: trace.len(),
                succeeded: trace.succeeded,
                loss_pi,
                loss_v,
                seed,
            });
        }
    }
    if !net.params.all_finite() {
        return Err(Error::Training {
            step: log.len(),
            message: "parameters became non-finite".into(),
        });
    }
    Ok(TrainedAgent { net, log })
}

pub fn write_training_log<W: Write>(rows: &[TrainLogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_training_log(rows: &[TrainLogRow], path: &Path) -> Result<()> {
    write_training_log(rows, error::create(path)?)
}
