//! Advantage actor-critic on full Monte Carlo returns.

use super::rollout::replay;
use super::{EpisodeTrace, TaskContext};
use crate::env::discounted_returns;
use crate::error::{Error, Result};
use crate::nn::{Adam, DistanceWeighting, Gradients, PolicyNet, Tape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A2cLosses {
    /// `Σ -log π(a_t) (R_t - v_t)`, advantage held constant.
    pub loss_pi: f64,
    /// `Σ |R_t - v_t|`.
    pub loss_v: f64,
    /// `λ loss_pi + (1 - λ) loss_v`.
    pub combined: f64,
}

pub fn a2c_objective(
    net: &PolicyNet,
    ctx: &TaskContext<'_>,
    trace: &EpisodeTrace,
    lambda: f64,
    weighting: DistanceWeighting,
) -> Result<(A2cLosses, Gradients)> {
    if trace.steps.is_empty() {
        let zero = A2cLosses {
            loss_pi: 0.0,
            loss_v: 0.0,
            combined: 0.0,
        };
        return Ok((zero, Gradients::zeros_like(&net.params)));
    }
    let returns = discounted_returns(&trace.rewards(), ctx.rewards.discount)?;

    let mut tape = Tape::new(&net.params);
    let r = replay(&mut tape, &net.layout, ctx, trace, weighting)?;
    let mut pi_terms = Vec::with_capacity(returns.len());
    let mut v_terms = Vec::with_capacity(returns.len());
    for (t, &ret) in returns.iter().enumerate() {
        let advantage = ret - tape.scalar(r.values[t]);
        pi_terms.push(tape.scale_const(r.log_probs[t], &[-advantage]));
        let target = tape.constant(vec![ret]);
        let diff = tape.sub(target, r.values[t]);
        v_terms.push(tape.abs(diff));
    }
    let pi = tape.stack(&pi_terms);
    let loss_pi = tape.sum(pi);
    let v = tape.stack(&v_terms);
    let loss_v = tape.sum(v);
    let a = tape.affine(loss_pi, lambda, 0.0);
    let b = tape.affine(loss_v, 1.0 - lambda, 0.0);
    let combined = tape.add(a, b);

    let losses = A2cLosses {
        loss_pi: tape.scalar(loss_pi),
        loss_v: tape.scalar(loss_v),
        combined: tape.scalar(combined),
    };
    if !losses.combined.is_finite() {
        let step = pi_terms
            .iter()
            .zip(&v_terms)
            .position(|(p, v)| !(tape.scalar(*p) + tape.scalar(*v)).is_finite())
            .unwrap_or(0);
        return Err(Error::Training {
            step,
            message: "non-finite A2C loss".into(),
        });
    }
    Ok((losses, tape.backward(combined)))
}

pub fn a2c_update(
    net: &mut PolicyNet,
    adam: &mut Adam,
    ctx: &TaskContext<'_>,
    trace: &EpisodeTrace,
    lambda: f64,
    weighting: DistanceWeighting,
) -> Result<A2cLosses> {
    let (losses, grads) = a2c_objective(net, ctx, trace, lambda, weighting)?;
    if !grads.all_finite() {
        return Err(Error::Training {
            step: trace.steps.len(),
            message: "non-finite A2C gradient".into(),
        });
    }
    if !trace.steps.is_empty() {
        adam.step(&mut net.params, &grads);
    }
    Ok(losses)
}
