//! Generates a synthetic corpus, poses its task and prints the cost metrics.
//!
//!     cargo run --example synthetic_corpus -- [n_docs] [n_targets] [seed]

use refnav::corpus::generate_synthetic_corpus;
use refnav::eval::ctn;

fn main() -> refnav::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("integer"))
        .collect();
    let n_docs = args.first().copied().unwrap_or(500);
    let n_targets = args.get(1).copied().unwrap_or(10);
    let seed = args.get(2).copied().unwrap_or(7) as u64;

    let (corpus, task) = generate_synthetic_corpus(n_docs, n_targets, 1000, seed)?;
    println!(
        "{} references, vocabulary {}",
        corpus.len(),
        corpus.vocabulary().hash()
    );
    println!("drug {:?}, genes {:?}", task.drug, task.genes);
    println!(
        "{} candidates, {} targets, HoF {:.4}, CTN {}",
        task.n_candidates(),
        task.n_targets(),
        task.hardness(),
        ctn(task.n_candidates(), task.n_targets())?
    );
    let first = &corpus.references()[0];
    println!(
        "\nfirst reference {}:\n  title: {}\n  abstract: {}",
        first.id, first.title, first.abstract_text
    );
    Ok(())
}
