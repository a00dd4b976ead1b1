//! Top-k nearest-neighbor graph over a task's candidates.
//!
//! Distances are `1 - Jaccard` over metadata tokens. Lists are sorted by
//! ascending distance with ties broken by ascending id, so the graph is a
//! pure function of the corpus, the candidate list and `k`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, TokenSet};
use crate::error::{self, domain, Result};

/// `1 - |a ∩ b| / |a ∪ b|`; two empty sets are at distance 0.
pub fn jaccard_distance(a: &TokenSet, b: &TokenSet) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// Same value as [`jaccard_distance`] on sorted, deduplicated id lists.
fn sorted_distance(a: &[u32], b: &[u32]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Position of the neighbor in [`NeighborGraph::ids`].
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    ids: Vec<String>,
    positions: HashMap<String, usize>,
    lists: Vec<Vec<Neighbor>>,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Candidate ids in the order the graph was built from.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    /// Neighbor list of the candidate at `index`.
    pub fn neighbors_at(&self, index: usize) -> &[Neighbor] {
        &self.lists[index]
    }

    pub fn neighbors(&self, id: &str) -> Option<&[Neighbor]> {
        self.position(id).map(|i| self.lists[i].as_slice())
    }

    /// `(neighbor id, distance)` pairs for a candidate.
    pub fn neighbor_ids(&self, id: &str) -> Option<Vec<(&str, f64)>> {
        self.neighbors(id).map(|list| {
            list.iter()
                .map(|n| (self.ids[n.index].as_str(), n.distance))
                .collect()
        })
    }

    pub fn distance(&self, from: &str, to: &str) -> Option<f64> {
        let to = self.position(to)?;
        self.neighbors(from)?
            .iter()
            .find(|n| n.index == to)
            .map(|n| n.distance)
    }

    /// CSV rows `source_id,neighbor_id,rank,distance`, rank starting at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["source_id", "neighbor_id", "rank", "distance"])?;
        for (i, list) in self.lists.iter().enumerate() {
            for (rank, n) in list.iter().enumerate() {
                writer.write_record([
                    self.ids[i].as_str(),
                    self.ids[n.index].as_str(),
                    &(rank + 1).to_string(),
                    &n.distance.to_string(),
                ])?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(error::create(path)?))
    }
}

/// Builds the k-nearest-neighbor lists for every candidate.
pub fn build_neighbor_graph(
    corpus: &Corpus,
    candidate_ids: &[String],
    k: usize,
) -> Result<NeighborGraph> {
    if candidate_ids.len() < 2 {
        return Err(domain(format!(
            "a neighbor graph needs at least 2 candidates, got {}",
            candidate_ids.len()
        )));
    }
    if k == 0 {
        return Err(domain("k must be at least 1"));
    }

    let mut positions = HashMap::with_capacity(candidate_ids.len());
    for (i, id) in candidate_ids.iter().enumerate() {
        if positions.insert(id.clone(), i).is_some() {
            return Err(domain(format!("candidate {id:?} listed twice")));
        }
    }

    // Intern tokens so the all-pairs pass works on sorted integer lists.
    let mut interner: HashMap<&str, u32> = HashMap::new();
    let mut token_ids = Vec::with_capacity(candidate_ids.len());
    for id in candidate_ids {
        let tokens = corpus
            .metadata_tokens(id)
            .ok_or_else(|| domain(format!("unknown candidate id {id:?}")))?;
        let mut ids: Vec<u32> = tokens
            .iter()
            .map(|t| {
                let next = interner.len() as u32;
                *interner.entry(t).or_insert(next)
            })
            .collect();
        ids.sort_unstable();
        token_ids.push(ids);
    }

    let keep = k.min(candidate_ids.len() - 1);
    let lists = (0..candidate_ids.len())
        .into_par_iter()
        .map(|i| {
            let mut list: Vec<Neighbor> = (0..candidate_ids.len())
                .filter(|&j| j != i)
                .map(|j| Neighbor {
                    index: j,
                    distance: sorted_distance(&token_ids[i], &token_ids[j]),
                })
                .collect();
            list.sort_by(|a, b| {
                a.distance
                    .total_cmp(&b.distance)
                    .then_with(|| candidate_ids[a.index].cmp(&candidate_ids[b.index]))
            });
            list.truncate(keep);
            list
        })
        .collect();

    Ok(NeighborGraph {
        k,
        ids: candidate_ids.to_vec(),
        positions,
        lists,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Reference};

    fn corpus(titles: &[(&str, &str)]) -> Corpus {
        Corpus::new(
            titles
                .iter()
                .map(|(id, title)| Reference {
                    id: id.to_string(),
                    title: title.to_string(),
                    abstract_text: String::new(),
                    body: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = tokenize("x y z");
        assert_eq!(jaccard_distance(&a, &a), 0.0);
        assert_eq!(jaccard_distance(&a, &tokenize("p q")), 1.0);
        assert_eq!(
            jaccard_distance(&tokenize("a b c"), &tokenize("b c d")),
            0.5
        );
        assert_eq!(
            jaccard_distance(&TokenSet::default(), &TokenSet::default()),
            0.0
        );
    }

    #[test]
    fn lists_truncate_to_other_candidates() {
        let c = corpus(&[("a", "x y"), ("b", "x z"), ("c", "q r")]);
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let g = build_neighbor_graph(&c, &ids, 20).unwrap();
        for id in &ids {
            let list = g.neighbor_ids(id).unwrap();
            assert_eq!(list.len(), 2);
            assert!(list.iter().all(|(n, _)| n != id));
        }
        assert_eq!(g.neighbor_ids("a").unwrap()[0], ("b", 1.0 - 1.0 / 3.0));
    }

    #[test]
    fn duplicates_ordered_by_id() {
        let c = corpus(&[
            ("m", "same words"),
            ("c", "same words"),
            ("x", "same words"),
            ("a", "other"),
        ]);
        let ids: Vec<String> = ["m", "c", "x", "a"].iter().map(|s| s.to_string()).collect();
        let g = build_neighbor_graph(&c, &ids, 2).unwrap();
        let list = g.neighbor_ids("m").unwrap();
        assert_eq!(list, vec![("c", 0.0), ("x", 0.0)]);
        let list = g.neighbor_ids("x").unwrap();
        assert_eq!(list, vec![("c", 0.0), ("m", 0.0)]);
    }

    #[test]
    fn too_few_candidates() {
        let c = corpus(&[("a", "x")]);
        assert!(build_neighbor_graph(&c, &["a".to_string()], 3).is_err());
        let c = corpus(&[("a", "x"), ("b", "y")]);
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(build_neighbor_graph(&c, &ids, 0).is_err());
    }

    #[test]
    fn csv_export_rows() {
        let c = corpus(&[("a", "x y"), ("b", "x z"), ("c", "q r")]);
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let g = build_neighbor_graph(&c, &ids, 1).unwrap();
        let mut out = Vec::new();
        g.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "source_id,neighbor_id,rank,distance");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("a,b,1,"));
    }
}
