use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EpisodeTrace, TaskContext, TraceStep};
use crate::error::{domain, Result};
use crate::nn::{DistanceWeighting, PolicyLayout, PolicyNet, Tape, Var};

/// How actions are chosen during a rollout.
#[derive(Debug, Clone, Copy)]
pub enum Behavior<'n> {
    /// Sample from the policy.
    Sample {
        net: &'n PolicyNet,
        weighting: DistanceWeighting,
    },
    /// Take the most probable action; ties go to the earlier neighbor.
    Argmax {
        net: &'n PolicyNet,
        weighting: DistanceWeighting,
    },
    /// Uniform over the current neighbors.
    Uniform,
}

/// Per-episode feature cache for a frozen network.
struct Features<'a> {
    net: &'a PolicyNet,
    ctx: &'a TaskContext<'a>,
    query_mean: Vec<f64>,
    cache: HashMap<usize, Vec<f64>>,
}

impl<'a> Features<'a> {
    fn new(net: &'a PolicyNet, ctx: &'a TaskContext<'a>) -> Self {
        let mut tape = Tape::new(&net.params);
        let q = net.layout.query_mean(&mut tape, ctx.query_rows());
        Features {
            net,
            ctx,
            query_mean: tape.value(q).to_vec(),
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, index: usize) -> &[f64] {
        let (net, ctx, query_mean) = (self.net, self.ctx, &self.query_mean);
        self.cache.entry(index).or_insert_with(|| {
            let mut tape = Tape::new(&net.params);
            let q = tape.constant(query_mean.clone());
            let f = net
                .layout
                .encode_with(&mut tape, ctx.candidate_rows(index), q);
            tape.value(f).to_vec()
        })
    }
}

/// Log-probabilities and value at one observation.
fn evaluate_step(
    net: &PolicyNet,
    obs: &[f64],
    feats: &[Vec<f64>],
    weights: Option<&[f64]>,
) -> (Vec<f64>, f64) {
    let mut tape = Tape::new(&net.params);
    let o = tape.constant(obs.to_vec());
    let vars: Vec<Var> = feats.iter().map(|f| tape.constant(f.clone())).collect();
    let lp = net.layout.log_policy(&mut tape, o, &vars, weights);
    let v = net.layout.value(&mut tape, o);
    (tape.value(lp).to_vec(), tape.scalar(v))
}

fn next_observation(net: &PolicyNet, prev: &[f64], feature: &[f64]) -> Vec<f64> {
    let mut tape = Tape::new(&net.params);
    let p = tape.constant(prev.to_vec());
    let f = tape.constant(feature.to_vec());
    let o = net.layout.update(&mut tape, p, f);
    tape.value(o).to_vec()
}

/// Runs one episode from `start_id`, fully determined by `seed`.
pub fn rollout(
    ctx: &TaskContext<'_>,
    behavior: &Behavior<'_>,
    start_id: &str,
    seed: u64,
) -> Result<EpisodeTrace> {
    let env = ctx.environment()?;
    let (mut state, initial_reward) = env.reset(start_id)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let net = match behavior {
        Behavior::Sample { net, .. } | Behavior::Argmax { net, .. } => Some(*net),
        Behavior::Uniform => None,
    };
    let weighting = match behavior {
        Behavior::Sample { weighting, .. } | Behavior::Argmax { weighting, .. } => *weighting,
        Behavior::Uniform => DistanceWeighting::None,
    };
    let mut features = net.map(|n| Features::new(n, ctx));
    let mut current = ctx
        .graph
        .position(start_id)
        .expect("reset checked the start");
    let mut obs = match &mut features {
        Some(f) => f.get(current).to_vec(),
        None => Vec::new(),
    };

    let mut steps = Vec::new();
    while !state.done {
        let neighbors = ctx.graph.neighbors_at(current);
        if neighbors.is_empty() {
            return Err(domain(format!("{:?} has no neighbors", state.current_id)));
        }
        let candidates: Vec<usize> = neighbors.iter().map(|n| n.index).collect();
        let distances: Vec<f64> = neighbors.iter().map(|n| n.distance).collect();

        let (chosen, log_prob, value) = match (net, &mut features) {
            (Some(net), Some(f)) => {
                let feats: Vec<Vec<f64>> = candidates.iter().map(|&i| f.get(i).to_vec()).collect();
                let weights = weighting.weights(&distances);
                let (lp, value) = evaluate_step(net, &obs, &feats, weights.as_deref());
                let chosen = match behavior {
                    Behavior::Argmax { .. } => argmax(&lp),
                    _ => {
                        let probs: Vec<f64> = lp.iter().map(|x| x.exp()).collect();
                        WeightedIndex::new(&probs)
                            .map_err(|e| domain(format!("cannot sample from policy: {e}")))?
                            .sample(&mut rng)
                    }
                };
                (chosen, lp[chosen], value)
            }
            _ => {
                let k = candidates.len();
                (rng.gen_range(0..k), -(k as f64).ln(), 0.0)
            }
        };

        let from_id = state.current_id.clone();
        let next = candidates[chosen];
        let transition = env.step(state, ctx.graph.id(next))?;
        state = transition.state;
        steps.push(TraceStep {
            from_id,
            candidates,
            distances,
            chosen,
            log_prob,
            reward: transition.reward,
            value,
            observation: obs.clone(),
        });
        current = next;
        if let (Some(net), Some(f)) = (net, &mut features) {
            obs = next_observation(net, &obs, f.get(current));
        }
    }

    Ok(EpisodeTrace {
        start_id: start_id.to_string(),
        steps,
        initial_reward,
        succeeded: state.succeeded,
        unique_reads: state.unique_reads(),
        visited: state.visited_ids,
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Differentiable quantities of a recorded trace.
#[derive(Debug, Clone, Default)]
pub struct Replay {
    pub log_probs: Vec<Var>,
    pub entropies: Vec<Var>,
    pub values: Vec<Var>,
}

/// Rebuilds the forward pass of `trace` on `tape`, step by step.
pub fn replay(
    tape: &mut Tape<'_>,
    layout: &PolicyLayout,
    ctx: &TaskContext<'_>,
    trace: &EpisodeTrace,
    weighting: DistanceWeighting,
) -> Result<Replay> {
    let start = ctx.graph.position(&trace.start_id).ok_or_else(|| {
        domain(format!(
            "trace starts outside the task at {:?}",
            trace.start_id
        ))
    })?;
    let q = layout.query_mean(tape, ctx.query_rows());
    let mut cache: HashMap<usize, Var> = HashMap::new();
    let mut feature = |tape: &mut Tape<'_>, index: usize| -> Var {
        *cache
            .entry(index)
            .or_insert_with(|| layout.encode_with(tape, ctx.candidate_rows(index), q))
    };

    let mut out = Replay::default();
    let mut obs = feature(tape, start);
    for step in &trace.steps {
        if step.chosen >= step.candidates.len() || step.candidates.len() != step.distances.len() {
            return Err(domain("malformed trace step"));
        }
        let feats: Vec<Var> = step.candidates.iter().map(|&i| feature(tape, i)).collect();
        let weights = weighting.weights(&step.distances);
        let lp = layout.log_policy(tape, obs, &feats, weights.as_deref());
        out.log_probs.push(tape.index(lp, step.chosen));

        let p = tape.exp(lp);
        let plogp = tape.mul(p, lp);
        let s = tape.sum(plogp);
        out.entropies.push(tape.affine(s, -1.0, 0.0));
        out.values.push(layout.value(tape, obs));

        let next = feature(tape, step.candidates[step.chosen]);
        obs = layout.update(tape, obs, next);
    }
    Ok(out)
}
