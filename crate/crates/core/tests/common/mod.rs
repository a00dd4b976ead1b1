#![allow(dead_code)]

pub mod gradcheck;
pub mod oracles;
pub mod pipeline;

use refnav::corpus::{Corpus, Reference, Task, TaskSpec};

pub fn doc(id: &str, title: &str, body: &str) -> Reference {
    Reference {
        id: id.into(),
        title: title.into(),
        abstract_text: String::new(),
        body: Some(body.into()),
    }
}

pub fn zap_spec() -> TaskSpec {
    TaskSpec {
        drug: "zap".into(),
        genes: vec!["g1".into()],
    }
}

/// Five references on a sliding window of tokens, so each one's nearest
/// neighbors are the adjacent ones. Only `e` is a target.
pub fn chain() -> (Corpus, Task) {
    let corpus = Corpus::new(vec![
        doc("a", "zap x1 x2 x3", "zap alone."),
        doc("b", "zap x2 x3 x4", "zap alone. g1 elsewhere."),
        doc("c", "zap x3 x4 x5", "zap alone."),
        doc("d", "zap x4 x5 x6", "zap alone."),
        doc("e", "zap x5 x6 x7", "zap binds g1."),
    ])
    .unwrap();
    let task = Task::pose(&corpus, &zap_spec()).unwrap();
    (corpus, task)
}

/// `s`'s nearest neighbor is `m`, whose nearest neighbor is the target `t`.
pub fn two_hop() -> (Corpus, Task) {
    let corpus = Corpus::new(vec![
        doc("m", "zap b c d e", "zap alone."),
        doc("s", "zap a b c", "zap alone."),
        doc("t", "zap c d e f", "Trial of zap. zap inhibits g1!"),
        doc("x", "zap g h i", "zap alone."),
        doc("y", "zap j k l", "zap alone."),
    ])
    .unwrap();
    let task = Task::pose(&corpus, &zap_spec()).unwrap();
    (corpus, task)
}
