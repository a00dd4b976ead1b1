use std::fs;
use std::path::{Path, PathBuf};

use refnav::cli::run;

fn refnav(args: &[&str]) -> (i32, String) {
    refnav_env(args, None)
}

fn refnav_env(args: &[&str], env_out: Option<&Path>) -> (i32, String) {
    let mut log = Vec::new();
    let argv = std::iter::once("refnav").chain(args.iter().copied());
    let code = run(argv, env_out.map(|p| p.as_os_str().to_owned()), &mut log);
    (code, String::from_utf8(log).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthesizes a small corpus into `out` and returns the corpus and task paths.
fn synth(out: &Path) -> (PathBuf, PathBuf) {
    let (code, log) = refnav(&[
        "synth",
        "--out",
        s(out),
        "--n-docs",
        "120",
        "--n-targets",
        "4",
        "--vocab-size",
        "300",
        "--seed",
        "3",
    ]);
    assert_eq!(code, 0, "{log}");
    (out.join("corpus.jsonl"), out.join("tasks.jsonl"))
}

#[test]
fn synth_writes_corpus_and_task() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, tasks) = synth(dir.path());
    assert_eq!(fs::read_to_string(corpus).unwrap().lines().count(), 120);
    assert_eq!(fs::read_to_string(tasks).unwrap().lines().count(), 1);
    let echo = fs::read_to_string(dir.path().join("config-synth.txt")).unwrap();
    assert!(echo.contains("n_docs = 120\n"));
    assert!(echo.contains("synth_seed = 3\n"));
}

#[test]
fn full_pipeline_produces_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let (corpus, tasks) = synth(out);
    let io = [
        "--out",
        s(out),
        "--corpus",
        s(&corpus),
        "--tasks",
        s(&tasks),
    ];
    let with =
        |extra: &[&str]| -> Vec<String> { io.iter().chain(extra).map(|x| x.to_string()).collect() };
    let call = |args: Vec<String>| {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        refnav(&args)
    };

    for stage in [
        with(&["ingest"]),
        with(&["graph", "--k", "5"]),
        with(&["train-baseline", "--epochs", "1"]),
        with(&[
            "train-agent",
            "--algo",
            "a2c",
            "--episodes-per-task",
            "3",
            "--d",
            "8",
        ]),
        with(&[
            "train-agent",
            "--algo",
            "reinforce",
            "--episodes-per-task",
            "3",
            "--d",
            "8",
        ]),
        with(&["evaluate", "--algo", "a2c", "--episodes", "5"]),
        with(&["evaluate", "--algo", "reinforce", "--episodes", "5"]),
        with(&["evaluate", "--algo", "random", "--episodes", "5"]),
        with(&["evaluate", "--algo", "baseline"]),
        with(&["report"]),
    ] {
        let (code, log) = call(stage.clone());
        assert_eq!(code, 0, "{stage:?}: {log}");
    }

    for f in [
        "tasks.csv",
        "baseline.json",
        "rankings.csv",
        "a2c.json",
        "reinforce.json",
        "training_log_a2c.csv",
        "training_log_reinforce.csv",
        "results_random.json",
        "report.csv",
        "report.txt",
        "boxplot.csv",
        "config-report.txt",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert_eq!(fs::read_dir(out.join("graphs")).unwrap().count(), 1);

    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let methods: Vec<&str> = report
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    for m in ["baseline", "reinforce", "a2c", "random"] {
        assert_eq!(
            methods.iter().filter(|&&x| x == m).count(),
            2,
            "{m} rows in\n{report}"
        );
    }
    let boxplot = fs::read_to_string(out.join("boxplot.csv")).unwrap();
    assert_eq!(boxplot.lines().count(), 1 + 5 * 3 + 1);

    let log = fs::read_to_string(out.join("training_log_a2c.csv")).unwrap();
    assert_eq!(
        log.lines().next(),
        Some("episode,task,algo,T,succeeded,loss_pi,loss_v,seed")
    );
    assert_eq!(log.lines().count(), 4);
}

#[test]
fn easy_tasks_are_excluded_with_a_notice() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let (corpus, tasks) = synth(out);
    // Two of three "easyx" candidates are targets: HoF 1/3.
    let mut text = fs::read_to_string(&corpus).unwrap();
    for (i, body) in ["easyx blocks gq1.", "easyx binds gq1.", "nothing here."]
        .iter()
        .enumerate()
    {
        text.push_str(&format!(
            "{{\"id\":\"easy{i}\",\"title\":\"easyx study {i}\",\"abstract\":\"\",\"body\":\"{body}\"}}\n"
        ));
    }
    fs::write(&corpus, text).unwrap();
    let mut specs = fs::read_to_string(&tasks).unwrap();
    specs.push_str("{\"drug\":\"easyx\",\"genes\":[\"gq1\"]}\n");
    fs::write(&tasks, specs).unwrap();

    let args = [
        "train-baseline",
        "--epochs",
        "1",
        "--out",
        s(out),
        "--corpus",
        s(&corpus),
        "--tasks",
        s(&tasks),
    ];
    let (code, log) = refnav(&args);
    assert_eq!(code, 0, "{log}");
    assert!(
        log.contains("notice: excluding task \"easyx\": HoF 0.333 <= 0.5"),
        "{log}"
    );
    let rankings = fs::read_to_string(out.join("rankings.csv")).unwrap();
    assert!(!rankings.contains("easyx"));

    let mut kept: Vec<&str> = args.to_vec();
    kept.push("--no-hof-filter");
    let (code, log) = refnav(&kept);
    assert_eq!(code, 0, "{log}");
    assert!(!log.contains("notice"));
    assert!(fs::read_to_string(out.join("rankings.csv"))
        .unwrap()
        .contains("easyx"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert_eq!(refnav(&["frobnicate"]).0, 2);
    assert_eq!(refnav(&["synth", "--n-docs", "many"]).0, 2);
    assert_eq!(refnav(&["evaluate", "--out", out, "--algo", "oracle"]).0, 2);
    assert_eq!(refnav(&["train-agent", "--out", out, "--algo", "ppo"]).0, 2);
    assert_eq!(
        refnav(&["ingest", "--config", s(&dir.path().join("absent.conf"))]).0,
        2
    );
    assert_eq!(refnav(&["--help"]).0, 0);
}

#[test]
fn stage_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    let (code, log) = refnav(&["ingest", "--out", out]);
    assert_eq!(code, 1);
    assert!(log.contains("no corpus given"), "{log}");
    let (corpus, tasks) = synth(dir.path());
    let (code, log) = refnav(&[
        "evaluate",
        "--out",
        out,
        "--corpus",
        s(&corpus),
        "--tasks",
        s(&tasks),
    ]);
    assert_eq!(code, 1);
    assert!(log.contains("run train-baseline first"), "{log}");
}

#[test]
fn settings_follow_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let from_file = dir.path().join("from-file");
    let from_env = dir.path().join("from-env");
    let from_flag = dir.path().join("from-flag");
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        format!(
            "out = {}\nn_docs = 40\nvocab_size = 90 # small\nn_targets = 2\n",
            s(&from_file)
        ),
    )
    .unwrap();

    assert_eq!(refnav(&["synth", "--config", s(&conf)]).0, 0);
    assert!(from_file.join("corpus.jsonl").is_file());

    assert_eq!(
        refnav_env(&["synth", "--config", s(&conf)], Some(&from_env)).0,
        0
    );
    assert!(from_env.join("corpus.jsonl").is_file());

    let (code, _) = refnav_env(
        &[
            "synth",
            "--config",
            s(&conf),
            "--out",
            s(&from_flag),
            "--n-docs",
            "50",
        ],
        Some(&from_env),
    );
    assert_eq!(code, 0);
    let echo = fs::read_to_string(from_flag.join("config-synth.txt")).unwrap();
    assert!(echo.contains("n_docs = 50\n"));
    assert!(echo.contains("vocab_size = 90\n"));
    assert_eq!(
        fs::read_to_string(from_flag.join("corpus.jsonl"))
            .unwrap()
            .lines()
            .count(),
        50
    );

    // The echoed settings reproduce the run when fed back in.
    let again = dir.path().join("again");
    let echo = echo.replace(s(&from_flag), s(&again));
    let conf2 = dir.path().join("echo.conf");
    fs::write(&conf2, echo).unwrap();
    assert_eq!(refnav(&["synth", "--config", s(&conf2)]).0, 0);
    assert_eq!(
        fs::read(again.join("corpus.jsonl")).unwrap(),
        fs::read(from_flag.join("corpus.jsonl")).unwrap()
    );
}
