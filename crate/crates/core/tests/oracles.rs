mod common;

use common::oracles::{check_seed, random_corpus, scan_candidates, scan_targets, DRUG, GENES};

#[test]
fn library_matches_brute_force_on_50_random_corpora() {
    for seed in 0..50 {
        check_seed(seed).unwrap();
    }
}

#[test]
fn random_corpora_are_not_degenerate() {
    let with_candidates = (0..50)
        .filter(|&s| scan_candidates(&random_corpus(s), DRUG).len() >= 2)
        .count();
    assert!(with_candidates >= 40, "{with_candidates}");
    let with_targets = (0..50)
        .filter(|&s| {
            let c = random_corpus(s);
            let ids = scan_candidates(&c, DRUG);
            let t = scan_targets(&c, &ids, DRUG, &GENES).len();
            t > 0 && t < ids.len()
        })
        .count();
    assert!(with_targets >= 25, "{with_targets}");
}
