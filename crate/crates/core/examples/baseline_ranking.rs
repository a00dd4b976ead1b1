//! Trains the read/skip CNN on some synthetic tasks and ranks a held-out one.

use refnav::baseline::{
    labeled_examples, rank_candidates, reads_until_target, train_classifier, BaselineConfig,
};
use refnav::corpus::{generate_synthetic_collection, SyntheticConfig};
use refnav::eval::ctn;

fn main() -> refnav::Result<()> {
    let configs: Vec<SyntheticConfig> = (0..4)
        .map(|seed| {
            let mut c = SyntheticConfig::new(200, 8, 800, seed);
            c.signal_seed = Some(42);
            c
        })
        .collect();
    let (corpus, tasks) = generate_synthetic_collection(&configs)?;
    let vocab = corpus.vocabulary();
    let (train, test) = tasks.split_at(3);

    let config = BaselineConfig {
        epochs: 3,
        ..BaselineConfig::default()
    };
    let trained = train_classifier(train, &corpus, &vocab, &config)?;
    println!("epoch losses {:.4?}", trained.epoch_losses);
    println!(
        "held-out accuracy {:.3}",
        trained
            .classifier
            .accuracy(&vocab, &labeled_examples(&corpus, test)?)
    );

    let task = &test[0];
    let ranking = rank_candidates(&trained.classifier, &corpus, &vocab, &task.candidate_ids)?;
    for c in ranking.iter().take(5) {
        println!(
            "  {:<12} p = {:.3}{}",
            c.id,
            c.probability,
            if task.is_target(&c.id) {
                "  target"
            } else {
                ""
            }
        );
    }
    let ids: Vec<&str> = ranking.iter().map(|c| c.id.as_str()).collect();
    println!(
        "reads until first target: {} (CTN {})",
        reads_until_target(&ids, &task.target_ids)?,
        ctn(task.n_candidates(), task.n_targets())?
    );
    Ok(())
}
