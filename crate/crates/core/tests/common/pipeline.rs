use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use refnav::cli::run;

/// Synthesizes a corpus into `out` and runs every training and evaluation stage on it.
pub fn pipeline(out: &Path) {
    let o = out.to_str().unwrap();
    let corpus = out.join("corpus.jsonl");
    let tasks = out.join("tasks.jsonl");
    let io = [
        "--out",
        o,
        "--corpus",
        corpus.to_str().unwrap(),
        "--tasks",
        tasks.to_str().unwrap(),
    ];
    let stages: [&[&str]; 8] = [
        &[
            "synth",
            "--n-docs",
            "150",
            "--n-targets",
            "5",
            "--vocab-size",
            "300",
            "--seed",
            "11",
        ],
        &["train-baseline", "--epochs", "2"],
        &[
            "train-agent",
            "--algo",
            "a2c",
            "--episodes-per-task",
            "10",
            "--d",
            "12",
        ],
        &[
            "train-agent",
            "--algo",
            "reinforce",
            "--episodes-per-task",
            "10",
            "--d",
            "12",
        ],
        &["evaluate", "--algo", "a2c", "--episodes", "9"],
        &["evaluate", "--algo", "reinforce", "--episodes", "9"],
        &["evaluate", "--algo", "random", "--episodes", "9"],
        &["report"],
    ];
    for stage in stages {
        let mut log = Vec::new();
        let argv = std::iter::once("refnav")
            .chain(stage.iter().copied())
            .chain(io);
        assert_eq!(
            run(argv, None, &mut log),
            0,
            "{}",
            String::from_utf8_lossy(&log)
        );
    }
}

/// Every artifact except the settings echoes, which name the output directory.
pub fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.is_file()
                && !p
                    .file_name()
                    .unwrap()
                    .to_str()
                    .unwrap()
                    .starts_with("config-")
        })
        .map(|p| {
            (
                p.file_name().unwrap().to_str().unwrap().to_string(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}
