mod common;

use refnav::agents::{rollout, Algo, Behavior, TaskContext};
use refnav::env::{discounted_returns, Environment, RewardConfig};
use refnav::nn::PolicyNet;
use refnav::recsys::build_neighbor_graph;
use refnav::Error;

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-4)
}

#[test]
fn chain_graph_is_the_expected_shape() {
    let (corpus, task) = common::chain();
    let g = build_neighbor_graph(&corpus, &task.candidate_ids, 2).unwrap();
    let ids = |id: &str| -> Vec<String> {
        g.neighbor_ids(id)
            .unwrap()
            .into_iter()
            .map(|(n, _)| n.to_string())
            .collect()
    };
    assert_eq!(ids("a"), ["b", "c"]);
    assert_eq!(ids("b"), ["a", "c"]);
    assert_eq!(ids("c"), ["b", "d"]);
    assert_eq!(ids("d"), ["c", "e"]);
    assert_eq!(ids("e"), ["d", "c"]);
    assert!((g.distance("a", "b").unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(task.target_ids.iter().collect::<Vec<_>>(), ["e"]);
}

#[test]
fn walk_down_the_chain() {
    let (corpus, task) = common::chain();
    let g = build_neighbor_graph(&corpus, &task.candidate_ids, 2).unwrap();
    let env = Environment::new(&corpus, &task, &g, RewardConfig::default()).unwrap();
    assert_eq!(env.step_cap(), 5);

    let (mut s, initial) = env.reset("b").unwrap();
    assert_eq!(initial, None);
    let mut rewards = Vec::new();
    for next in ["c", "d", "e"] {
        let tr = env.step(s, next).unwrap();
        rewards.push(tr.reward);
        s = tr.state;
    }
    assert!(close(&rewards, &[-0.3, -0.3, 1.0 / 3.0]));
    assert!(s.done && s.succeeded);
    assert_eq!(s.unique_reads(), 4);
    let g = discounted_returns(&rewards, 0.9).unwrap();
    assert!(close(&g, &[-0.3, 0.0, 0.3333]));
    assert!(matches!(env.step(s, "d"), Err(Error::EpisodeFinished)));
}

#[test]
fn full_walk_from_the_far_end() {
    let (corpus, task) = common::chain();
    let g = build_neighbor_graph(&corpus, &task.candidate_ids, 2).unwrap();
    let env = Environment::new(&corpus, &task, &g, RewardConfig::default()).unwrap();
    let (mut s, _) = env.reset("a").unwrap();
    let mut rewards = Vec::new();
    for next in ["b", "c", "d", "e"] {
        let tr = env.step(s, next).unwrap();
        rewards.push(tr.reward);
        assert_eq!(tr.done, next == "e");
        s = tr.state;
    }
    assert!(close(&rewards, &[-0.3, -0.3, -0.3, 0.25]));
}

#[test]
fn revisits_count_once_and_the_cap_fails_the_episode() {
    let (corpus, task) = common::chain();
    let g = build_neighbor_graph(&corpus, &task.candidate_ids, 2).unwrap();
    let env = Environment::new(&corpus, &task, &g, RewardConfig::default()).unwrap();
    let (mut s, _) = env.reset("a").unwrap();
    for (i, next) in ["b", "a", "b", "a", "b"].iter().enumerate() {
        let tr = env.step(s, next).unwrap();
        assert_eq!(tr.reward, -0.3);
        assert_eq!(tr.done, i == 4);
        s = tr.state;
    }
    assert!(s.done && !s.succeeded);
    assert_eq!(s.step_index, 5);
    assert_eq!(s.unique_reads(), 2);
    assert_eq!(s.visited_ids, ["a", "b", "a", "b", "a", "b"]);
}

#[test]
fn illegal_moves_and_hidden_text() {
    let (corpus, task) = common::chain();
    let g = build_neighbor_graph(&corpus, &task.candidate_ids, 2).unwrap();
    let env = Environment::new(&corpus, &task, &g, RewardConfig::default()).unwrap();
    let (s, _) = env.reset("a").unwrap();
    assert!(matches!(
        env.step(s.clone(), "e"),
        Err(Error::IllegalAction { .. })
    ));
    assert!(matches!(
        env.step(s.clone(), "a"),
        Err(Error::IllegalAction { .. })
    ));
    assert!(env.full_text(&s, "b").is_err());
    assert_eq!(env.full_text(&s, "a").unwrap(), Some("zap alone."));
    assert_eq!(env.metadata("c").unwrap().title, "zap x3 x4 x5");
    assert!(env.reset("zz").is_err());
}

#[test]
fn starting_on_a_target_ends_at_once() {
    let (corpus, task) = common::chain();
    let vocab = corpus.vocabulary();
    let ctx = TaskContext::new(&corpus, &vocab, task, 2, RewardConfig::default()).unwrap();
    let env = ctx.environment().unwrap();
    let (s, reward) = env.reset("e").unwrap();
    assert!(s.done && s.succeeded);
    assert_eq!(reward, Some(1.0));

    let trace = rollout(&ctx, &Behavior::Uniform, "e", 3).unwrap();
    assert_eq!(trace.len(), 1);
    assert!(trace.steps.is_empty());
    assert_eq!(trace.rewards(), vec![1.0]);
    assert_eq!(trace.reads(ctx.ctn()), 1);
}

#[test]
fn argmax_policy_follows_the_two_hop_path() {
    let (corpus, task) = common::two_hop();
    let vocab = corpus.vocabulary();
    let ctx = TaskContext::new(&corpus, &vocab, task, 2, RewardConfig::default()).unwrap();
    let mut net = PolicyNet::new(vocab.table_rows(), 8, 1).unwrap();
    // A zero scorer ties every candidate, and ties go to the nearest neighbor.
    let policy = net.layout.policy;
    net.params
        .get_mut(policy)
        .data
        .iter_mut()
        .for_each(|x| *x = 0.0);
    let behavior = Behavior::Argmax {
        net: &net,
        weighting: Algo::Reinforce.default_weighting(),
    };
    let trace = rollout(&ctx, &behavior, "s", 0).unwrap();
    assert_eq!(trace.visited, ["s", "m", "t"]);
    assert_eq!(trace.len(), 2);
    assert!(close(&trace.rewards(), &[-0.3, 0.5]));
    assert!(trace.succeeded);
    assert_eq!(trace.unique_reads, 3);
}

#[test]
fn rollouts_are_seed_deterministic_and_bounded() {
    let (corpus, task) = common::chain();
    let vocab = corpus.vocabulary();
    let ctx = TaskContext::new(&corpus, &vocab, task, 2, RewardConfig::default()).unwrap();
    let net = PolicyNet::new(vocab.table_rows(), 16, 4).unwrap();
    let behavior = Behavior::Sample {
        net: &net,
        weighting: Algo::A2c.default_weighting(),
    };
    for seed in 0..20 {
        let a = rollout(&ctx, &behavior, "a", seed).unwrap();
        let b = rollout(&ctx, &behavior, "a", seed).unwrap();
        assert_eq!(a, b);
        assert!(a.len() <= ctx.ctn());
        assert!(a.reads(ctx.ctn()) <= ctx.ctn());
        for (t, step) in a.steps.iter().enumerate() {
            assert!(step.log_prob <= 0.0 && step.log_prob.is_finite());
            if t + 1 < a.steps.len() {
                assert_eq!(step.reward, -0.3);
            }
        }
    }
}
