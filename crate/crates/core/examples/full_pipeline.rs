//! Runs every command-line stage in sequence into a temporary directory:
//! synth, ingest, graph, train-baseline, train-agent, evaluate and report.
//!
//!     cargo run --release --example full_pipeline -- [out_dir]
//!
//! The classifier is trained on the same single task it later ranks, so it
//! usually puts a target first and every agent starts on it. Feed `ingest`
//! a corpus with several tasks for a less trivial table.

use std::path::PathBuf;

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("refnav-pipeline"));
    let o = out.to_str().expect("utf-8 path").to_string();
    let corpus = out.join("corpus.jsonl").display().to_string();
    let tasks = out.join("tasks.jsonl").display().to_string();
    let io = ["--out", &o, "--corpus", &corpus, "--tasks", &tasks];

    let stages: [&[&str]; 11] = [
        &[
            "synth",
            "--n-docs",
            "300",
            "--n-targets",
            "6",
            "--seed",
            "5",
        ],
        &["ingest"],
        &["graph"],
        &["train-baseline"],
        &["train-agent", "--algo", "a2c", "--episodes-per-task", "100"],
        &[
            "train-agent",
            "--algo",
            "reinforce",
            "--episodes-per-task",
            "100",
        ],
        &["evaluate", "--algo", "baseline"],
        &["evaluate", "--algo", "reinforce"],
        &["evaluate", "--algo", "a2c"],
        &["evaluate", "--algo", "random"],
        &["report"],
    ];
    let mut stderr = std::io::stderr();
    for stage in stages {
        let argv = std::iter::once("refnav")
            .chain(stage.iter().copied())
            .chain(io);
        let code = refnav::cli::run(argv, None, &mut stderr);
        if code != 0 {
            std::process::exit(code);
        }
    }
    let table = std::fs::read_to_string(out.join("report.txt")).expect("report written");
    println!("{table}");
}
