//! Trains a A2c agent on one synthetic task and compares it with
//! its untrained start and a uniform-random walker under shared seeds.
//!
//!     cargo run --release --example train_a2c -- [episodes]

use refnav::agents::{initial_policy, train_agent, AgentConfig, Algo, Behavior, TaskContext};
use refnav::corpus::generate_synthetic_corpus;
use refnav::env::RewardConfig;
use refnav::eval::{evaluate_agent, Method, DEFAULT_EPISODES};

fn main() -> refnav::Result<()> {
    let episodes = std::env::args()
        .nth(1)
        .map(|a| a.parse().expect("integer"))
        .unwrap_or(200);
    let (corpus, task) = generate_synthetic_corpus(500, 10, 1000, 7)?;
    let vocab = corpus.vocabulary();
    let start = task
        .candidate_ids
        .iter()
        .find(|id| !task.is_target(id))
        .cloned()
        .expect("a non-target");
    let contexts = vec![TaskContext::new(
        &corpus,
        &vocab,
        task,
        20,
        RewardConfig::default(),
    )?];
    let starts = vec![start];

    let mut config = AgentConfig::new(Algo::A2c);
    config.episodes_per_task = episodes;
    let untrained = initial_policy(&vocab, &config)?;
    let trained = train_agent(&contexts, &starts, &vocab, &config)?;
    let wins = trained.log.iter().filter(|r| r.succeeded).count();
    println!(
        "{} training episodes, {wins} reached a target",
        trained.log.len()
    );
    if let Some(last) = trained.log.last() {
        println!(
            "last episode: T = {}, loss_pi {:.4}, loss_v {:.4}",
            last.t, last.loss_pi, last.loss_v
        );
    }

    let w = config.weighting;
    for (name, behavior) in [
        (
            "trained",
            Behavior::Sample {
                net: &trained.net,
                weighting: w,
            },
        ),
        (
            "untrained",
            Behavior::Sample {
                net: &untrained,
                weighting: w,
            },
        ),
        ("random", Behavior::Uniform),
    ] {
        let r = &evaluate_agent(
            &contexts,
            &starts,
            &behavior,
            Method::A2c,
            DEFAULT_EPISODES,
            0,
        )?[0];
        println!(
            "{name:<10} median reads {:>4}  EI {:.4}",
            r.median_reads, r.ei
        );
    }
    Ok(())
}
