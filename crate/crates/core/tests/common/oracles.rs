//! Brute-force references for retrieval, labeling and the neighbor graph.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refnav::corpus::{label_targets, retrieve_candidates, Corpus, Reference};
use refnav::recsys::build_neighbor_graph;

pub const DRUG: &str = "Zapomab";
pub const GENES: [&str; 2] = ["esr1", "brca-2"];

const WORDS: [&str; 16] = [
    "trial",
    "dose",
    "cell",
    "tumor",
    "esr1",
    "brca",
    "2",
    "response",
    "zapomab",
    "kinase",
    "xzapomabx",
    "ZAPOMAB",
    "rate",
    "phase",
    "brca-2",
    "mouse",
];
const MARKS: [&str; 8] = [" ", " ", " ", ". ", "? ", "! ", ".", ", "];

fn text(rng: &mut ChaCha8Rng, min_words: usize, max_words: usize) -> String {
    let n = rng.gen_range(min_words..=max_words);
    let mut out = String::new();
    for _ in 0..n {
        out.push_str(WORDS.choose(rng).unwrap());
        out.push_str(MARKS.choose(rng).unwrap());
    }
    out
}

/// A random corpus of at most 200 references with messy punctuation.
pub fn random_corpus(seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=200);
    let refs = (0..n)
        .map(|i| Reference {
            id: format!("r{:03}", (i * 7919) % 1000),
            title: text(&mut rng, 1, 8),
            abstract_text: text(&mut rng, 0, 12),
            body: rng.gen_bool(0.8).then(|| text(&mut rng, 0, 30)),
        })
        .collect();
    Corpus::new(refs).unwrap()
}

fn tokens(s: &str) -> HashSet<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

fn sentences(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        cur.push(c);
        let end =
            matches!(c, '.' | '?' | '!') && chars.get(i + 1).is_none_or(|n| n.is_whitespace());
        if end {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn scan_candidates(corpus: &Corpus, drug: &str) -> Vec<String> {
    let needle = drug.to_lowercase();
    corpus
        .references()
        .iter()
        .filter(|r| {
            r.title.to_lowercase().contains(&needle)
                || r.abstract_text.to_lowercase().contains(&needle)
        })
        .map(|r| r.id.clone())
        .collect()
}

pub fn scan_targets(
    corpus: &Corpus,
    candidates: &[String],
    drug: &str,
    genes: &[&str],
) -> BTreeSet<String> {
    let drug = tokens(drug);
    let genes: Vec<HashSet<String>> = genes.iter().map(|g| tokens(g)).collect();
    candidates
        .iter()
        .filter(|id| {
            let r = corpus.get(id).unwrap();
            let full = format!(
                "{}\n{}\n{}",
                r.title,
                r.abstract_text,
                r.body.clone().unwrap_or_default()
            );
            sentences(&full).iter().any(|s| {
                let t = tokens(s);
                drug.is_subset(&t) && genes.iter().any(|g| g.is_subset(&t))
            })
        })
        .cloned()
        .collect()
}

/// Every other candidate ordered by distance then id, cut at `k`.
pub fn brute_neighbors(
    corpus: &Corpus,
    candidates: &[String],
    k: usize,
) -> Vec<Vec<(String, f64)>> {
    let sets: Vec<HashSet<String>> = candidates
        .iter()
        .map(|id| {
            let r = corpus.get(id).unwrap();
            tokens(&format!("{}\n{}", r.title, r.abstract_text))
        })
        .collect();
    (0..candidates.len())
        .map(|i| {
            let mut all: Vec<(String, f64)> = (0..candidates.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let inter = sets[i].intersection(&sets[j]).count();
                    let union = sets[i].union(&sets[j]).count();
                    let d = if union == 0 {
                        0.0
                    } else {
                        1.0 - inter as f64 / union as f64
                    };
                    (candidates[j].clone(), d)
                })
                .collect();
            all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
            all.truncate(k);
            all
        })
        .collect()
}

/// Compares the library against the brute-force references on one seed.
/// Returns a description of the first disagreement.
pub fn check_seed(seed: u64) -> Result<(), String> {
    let corpus = random_corpus(seed);
    let expected = scan_candidates(&corpus, DRUG);
    let got = match retrieve_candidates(&corpus, DRUG) {
        Ok(ids) => ids,
        Err(_) if expected.is_empty() => return Ok(()),
        Err(e) => return Err(format!("seed {seed}: retrieval failed: {e}")),
    };
    if got != expected {
        return Err(format!("seed {seed}: retrieval differs from scan"));
    }
    let genes: Vec<String> = GENES.iter().map(|g| g.to_string()).collect();
    let labels = label_targets(&corpus, &got, DRUG, &genes).map_err(|e| e.to_string())?;
    if labels != scan_targets(&corpus, &got, DRUG, &GENES) {
        return Err(format!("seed {seed}: target labels differ from scan"));
    }
    if got.len() < 2 {
        return Ok(());
    }
    for k in [1, 5, 20] {
        let graph = build_neighbor_graph(&corpus, &got, k).map_err(|e| e.to_string())?;
        let brute = brute_neighbors(&corpus, &got, k);
        for (i, id) in got.iter().enumerate() {
            let lib: Vec<(String, f64)> = graph
                .neighbor_ids(id)
                .unwrap()
                .into_iter()
                .map(|(n, d)| (n.to_string(), d))
                .collect();
            let same = lib.len() == brute[i].len()
                && lib
                    .iter()
                    .zip(&brute[i])
                    .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() < 1e-12);
            if !same {
                return Err(format!("seed {seed}, k {k}: neighbors of {id} differ"));
            }
        }
    }
    Ok(())
}
