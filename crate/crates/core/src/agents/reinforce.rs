//! Monte Carlo policy gradient with a running-sum baseline and an entropy
//! bonus.

use super::rollout::replay;
use super::{EpisodeTrace, TaskContext};
use crate::env::discounted_returns;
use crate::error::{domain, Error, Result};
use crate::nn::{Adam, DistanceWeighting, Gradients, PolicyNet, Tape};

/// Running-sum baseline `b_t = (1 - β) b_{t-1} + β CR_t`, with `b_{-1} = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineState {
    pub b: f64,
    pub beta: f64,
}

impl BaselineState {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(domain(format!("beta must lie in (0, 1], got {beta}")));
        }
        Ok(BaselineState { b: 0.0, beta })
    }

    /// Folds in the cumulative reward of the next step and returns the new `b`.
    pub fn advance(&mut self, cumulative_reward: f64) -> f64 {
        self.b = (1.0 - self.beta) * self.b + self.beta * cumulative_reward;
        self.b
    }
}

/// Baselines for every step of an episode; `CR_t` is the undiscounted sum of
/// rewards up to and including step `t`.
pub fn running_baseline(rewards: &[f64], beta: f64) -> Result<Vec<f64>> {
    let mut state = BaselineState::new(beta)?;
    let mut cumulative = 0.0;
    Ok(rewards
        .iter()
        .map(|r| {
            cumulative += r;
            state.advance(cumulative)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReinforceLoss {
    pub loss: f64,
    pub returns: Vec<f64>,
    pub baselines: Vec<f64>,
    pub final_baseline: BaselineState,
}

/// Loss and gradients of one trace. A trace without moves (started on a
/// target) has zero loss and zero gradient.
pub fn reinforce_objective(
    net: &PolicyNet,
    ctx: &TaskContext<'_>,
    trace: &EpisodeTrace,
    beta: f64,
    delta: f64,
    weighting: DistanceWeighting,
) -> Result<(ReinforceLoss, Gradients)> {
    let mut final_baseline = BaselineState::new(beta)?;
    if trace.steps.is_empty() {
        let loss = ReinforceLoss {
            loss: 0.0,
            returns: Vec::new(),
            baselines: Vec::new(),
            final_baseline,
        };
        return Ok((loss, Gradients::zeros_like(&net.params)));
    }
    let rewards = trace.rewards();
    let returns = discounted_returns(&rewards, ctx.rewards.discount)?;
    let baselines = running_baseline(&rewards, beta)?;
    final_baseline.b = *baselines.last().expect("non-empty");

    let mut tape = Tape::new(&net.params);
    let r = replay(&mut tape, &net.layout, ctx, trace, weighting)?;
    let mut terms = Vec::with_capacity(trace.steps.len());
    for t in 0..trace.steps.len() {
        let advantage = returns[t] - baselines[t];
        let pg = tape.scale_const(r.log_probs[t], &[-advantage]);
        let bonus = tape.scale_const(r.entropies[t], &[-delta]);
        let term = tape.add(pg, bonus);
        if !tape.scalar(term).is_finite() {
            return Err(Error::Training {
                step: t,
                message: "non-finite REINFORCE loss".into(),
            });
        }
        terms.push(term);
    }
    let stacked = tape.stack(&terms);
    let total = tape.sum(stacked);
    let grads = tape.backward(total);
    let loss = ReinforceLoss {
        loss: tape.scalar(total),
        returns,
        baselines,
        final_baseline,
    };
    Ok((loss, grads))
}

/// One optimizer step on a trace.
pub fn reinforce_update(
    net: &mut PolicyNet,
    adam: &mut Adam,
    ctx: &TaskContext<'_>,
    trace: &EpisodeTrace,
    beta: f64,
    delta: f64,
    weighting: DistanceWeighting,
) -> Result<ReinforceLoss> {
    let (loss, grads) = reinforce_objective(net, ctx, trace, beta, delta, weighting)?;
    if !grads.all_finite() {
        return Err(Error::Training {
            step: trace.steps.len(),
            message: "non-finite REINFORCE gradient".into(),
        });
    }
    if !trace.steps.is_empty() {
        adam.step(&mut net.params, &grads);
    }
    Ok(loss)
}
