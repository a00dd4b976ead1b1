//! Builds the Jaccard k-NN graph of a synthetic task and shows one node.
//!
//!     cargo run --example neighbor_graph -- [k]

use refnav::corpus::generate_synthetic_corpus;
use refnav::recsys::build_neighbor_graph;

fn main() -> refnav::Result<()> {
    let k = std::env::args()
        .nth(1)
        .map(|a| a.parse().expect("integer"))
        .unwrap_or(20);
    let (corpus, task) = generate_synthetic_corpus(200, 5, 600, 1)?;
    let graph = build_neighbor_graph(&corpus, &task.candidate_ids, k)?;

    let start = graph.id(0);
    println!("{} nodes, k = {}", graph.len(), graph.k());
    println!("neighbors of {start}:");
    for (id, distance) in graph.neighbor_ids(start).unwrap_or_default() {
        let mark = if task.is_target(id) { " (target)" } else { "" };
        println!("  {id}  {distance:.4}{mark}");
    }
    let path = std::env::temp_dir().join("refnav-graph.csv");
    graph.save_csv(&path)?;
    println!("full graph written to {}", path.display());
    Ok(())
}
