//! Drives the environment by hand with a greedy nearest-unvisited walk.

use refnav::corpus::generate_synthetic_corpus;
use refnav::env::{discounted_returns, Environment, RewardConfig};
use refnav::recsys::build_neighbor_graph;

fn main() -> refnav::Result<()> {
    let (corpus, task) = generate_synthetic_corpus(120, 6, 400, 3)?;
    let graph = build_neighbor_graph(&corpus, &task.candidate_ids, 5)?;
    let rewards = RewardConfig::default();
    let env = Environment::new(&corpus, &task, &graph, rewards)?;

    let start = task
        .candidate_ids
        .iter()
        .find(|id| !task.is_target(id))
        .expect("a non-target");
    let (mut state, _) = env.reset(start)?;
    let mut trace = Vec::new();
    while !state.done {
        let neighbors = graph.neighbor_ids(&state.current_id).expect("known node");
        let next = neighbors
            .iter()
            .find(|(id, _)| !state.has_visited(id))
            .unwrap_or(&neighbors[0])
            .0
            .to_string();
        let t = env.step(state, &next)?;
        trace.push(t.reward);
        state = t.state;
    }
    println!("path: {}", state.visited_ids.join(" -> "));
    println!(
        "succeeded {}, unique reads {} of cap {}",
        state.succeeded,
        state.unique_reads(),
        env.step_cap()
    );
    println!(
        "returns: {:.3?}",
        discounted_returns(&trace, rewards.discount)?
    );
    Ok(())
}
