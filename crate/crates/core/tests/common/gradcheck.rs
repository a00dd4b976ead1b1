//! Central finite differences against the tape's analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refnav::agents::{a2c_objective, reinforce_objective, rollout, Behavior, TaskContext};
use refnav::env::RewardConfig;
use refnav::nn::{DistanceWeighting, Gradients, ParamStore, PolicyNet, Tape, Tensor};

pub const EPS: f64 = 1e-5;
pub const COMPONENT_TOL: f64 = 1e-4;
pub const LOSS_TOL: f64 = 1e-3;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error over every parameter entry.
pub fn max_error(store: &ParamStore, grads: &Gradients, f: impl Fn(&ParamStore) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut probe = store.clone();
    for id in store.ids() {
        for i in 0..store.get(id).len() {
            let base = store.get(id).data[i];
            probe.get_mut(id).data[i] = base + EPS;
            let up = f(&probe);
            probe.get_mut(id).data[i] = base - EPS;
            let down = f(&probe);
            probe.get_mut(id).data[i] = base;
            let numeric = (up - down) / (2.0 * EPS);
            worst = worst.max(relative_error(grads.get(id)[i], numeric));
        }
    }
    worst
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn small_net(rows: usize, seed: u64) -> PolicyNet {
    let mut net = PolicyNet::new(rows, 5, seed).unwrap();
    // Larger weights than the initializer so every nonlinearity is exercised.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    for id in net.params.ids().collect::<Vec<_>>() {
        for x in net.params.get_mut(id).data.iter_mut() {
            *x = rng.gen_range(-0.6..0.6);
        }
    }
    net
}

fn with_params(net: &PolicyNet, params: &ParamStore) -> PolicyNet {
    PolicyNet {
        layout: net.layout,
        params: params.clone(),
    }
}

/// Worst relative error of each component for one seed: encoder,
/// recurrent update, policy score, value head.
pub fn component_errors(seed: u64) -> [(&'static str, f64); 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = 9;
    let net = small_net(rows, seed);
    let l = net.layout;
    let d = net.d();
    let reference: Vec<usize> = (0..4).map(|_| rng.gen_range(0..rows)).collect();
    let query: Vec<usize> = (0..2).map(|_| rng.gen_range(0..rows)).collect();
    let c = weights(&mut rng, d);
    let prev = weights(&mut rng, d);
    let feature = weights(&mut rng, d);
    let feats: Vec<Vec<f64>> = (0..3).map(|_| weights(&mut rng, d)).collect();
    let dist: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
    let chosen = rng.gen_range(0..3);

    let encoder = |p: &ParamStore| -> (f64, Gradients) {
        let mut t = Tape::new(p);
        let f = l.encode(&mut t, &reference, &query);
        let w = t.constant(c.clone());
        let y = t.dot(f, w);
        (t.scalar(y), t.backward(y))
    };
    let update = |p: &ParamStore| -> (f64, Gradients) {
        let mut t = Tape::new(p);
        let o = t.constant(prev.clone());
        let f = t.constant(feature.clone());
        let n = l.update(&mut t, o, f);
        let w = t.constant(c.clone());
        let y = t.dot(n, w);
        (t.scalar(y), t.backward(y))
    };
    let score = |p: &ParamStore| -> (f64, Gradients) {
        let mut t = Tape::new(p);
        let o = t.constant(prev.clone());
        let fs: Vec<_> = feats.iter().map(|f| t.constant(f.clone())).collect();
        let lp = l.log_policy(&mut t, o, &fs, Some(&dist));
        let y = t.index(lp, chosen);
        (t.scalar(y), t.backward(y))
    };
    let value = |p: &ParamStore| -> (f64, Gradients) {
        let mut t = Tape::new(p);
        let o = t.constant(prev.clone());
        let y = l.value(&mut t, o);
        (t.scalar(y), t.backward(y))
    };

    let check = |f: &dyn Fn(&ParamStore) -> (f64, Gradients)| {
        let (_, g) = f(&net.params);
        max_error(&net.params, &g, |p| f(p).0)
    };
    [
        ("encoder", check(&encoder)),
        ("recurrent update", check(&update)),
        ("policy score", check(&score)),
        ("value head", check(&value)),
    ]
}

/// Worst relative error of the REINFORCE and A2C objectives on a frozen
/// two-step trace for one seed.
pub fn loss_errors(seed: u64) -> [(&'static str, f64); 2] {
    let (corpus, task) = super::two_hop();
    let vocab = corpus.vocabulary();
    let ctx = TaskContext::new(&corpus, &vocab, task, 2, RewardConfig::default()).unwrap();
    let net = small_net(vocab.table_rows(), seed);

    // The nearest-neighbor path s -> m -> t, recorded once and replayed.
    let mut walker = net.clone();
    let policy = walker.layout.policy;
    walker
        .params
        .get_mut(policy)
        .data
        .iter_mut()
        .for_each(|x| *x = 0.0);
    let trace = rollout(
        &ctx,
        &Behavior::Argmax {
            net: &walker,
            weighting: DistanceWeighting::None,
        },
        "s",
        0,
    )
    .unwrap();
    assert_eq!(trace.steps.len(), 2);

    let weighting = if seed.is_multiple_of(2) {
        DistanceWeighting::Distance
    } else {
        DistanceWeighting::None
    };
    let delta = 0.05;
    let (_, g) = reinforce_objective(&net, &ctx, &trace, 0.5, delta, weighting).unwrap();
    let reinforce = max_error(&net.params, &g, |p| {
        reinforce_objective(&with_params(&net, p), &ctx, &trace, 0.5, delta, weighting)
            .unwrap()
            .0
            .loss
    });

    // The advantage is a constant of the policy term, so the reference
    // objective freezes it at the unperturbed parameters.
    let lambda = 0.5;
    let (_, g) = a2c_objective(&net, &ctx, &trace, lambda, weighting).unwrap();
    let frozen = frozen_advantages(&net, &ctx, &trace, weighting);
    let a2c = max_error(&net.params, &g, |p| {
        let probe = with_params(&net, p);
        let (log_probs, values) = forward(&probe, &ctx, &trace, weighting);
        let returns = refnav::env::discounted_returns(&trace.rewards(), 0.9).unwrap();
        let mut pi = 0.0;
        let mut v = 0.0;
        for t in 0..returns.len() {
            pi += -log_probs[t] * frozen[t];
            v += (returns[t] - values[t]).abs();
        }
        lambda * pi + (1.0 - lambda) * v
    });
    [("reinforce loss", reinforce), ("a2c loss", a2c)]
}

fn forward(
    net: &PolicyNet,
    ctx: &TaskContext<'_>,
    trace: &refnav::agents::EpisodeTrace,
    weighting: DistanceWeighting,
) -> (Vec<f64>, Vec<f64>) {
    let mut tape = Tape::new(&net.params);
    let r = refnav::agents::replay(&mut tape, &net.layout, ctx, trace, weighting).unwrap();
    (
        r.log_probs.iter().map(|&v| tape.scalar(v)).collect(),
        r.values.iter().map(|&v| tape.scalar(v)).collect(),
    )
}

fn frozen_advantages(
    net: &PolicyNet,
    ctx: &TaskContext<'_>,
    trace: &refnav::agents::EpisodeTrace,
    weighting: DistanceWeighting,
) -> Vec<f64> {
    let (_, values) = forward(net, ctx, trace, weighting);
    let returns = refnav::env::discounted_returns(&trace.rewards(), 0.9).unwrap();
    returns.iter().zip(&values).map(|(r, v)| r - v).collect()
}

/// The convolutional classifier's loss, checked the same way.
pub fn classifier_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let rows = 7;
    let dim = 3;
    let table = store
        .add("embedding", Tensor::uniform(&[rows, dim], 0.5, &mut rng))
        .unwrap();
    let f = store
        .add("conv.w", Tensor::uniform(&[2, 3 * dim], 0.5, &mut rng))
        .unwrap();
    let b = store
        .add("conv.b", Tensor::uniform(&[2], 0.5, &mut rng))
        .unwrap();
    let w = store
        .add("out.w", Tensor::uniform(&[2], 0.5, &mut rng))
        .unwrap();
    let seq: Vec<usize> = (0..6).map(|_| rng.gen_range(0..rows)).collect();
    let label = if seed.is_multiple_of(2) { 1.0 } else { 0.0 };
    let loss = |p: &ParamStore| -> (f64, Gradients) {
        let mut t = Tape::new(p);
        let pooled = t.conv_max_pool(table, &seq, f, b, 3);
        let wv = t.param(w);
        let z = t.dot(pooled, wv);
        let y = t.bce_with_logits(z, label);
        (t.scalar(y), t.backward(y))
    };
    let (_, g) = loss(&store);
    max_error(&store, &g, |p| loss(p).0)
}
