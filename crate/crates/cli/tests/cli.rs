use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn swtag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swtag")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn inventory() -> Vec<String> {
    vec![
        "--tagset".into(),
        fixture("tagset.txt").display().to_string(),
        "--lexicon".into(),
        fixture("lexicon.txt").display().to_string(),
    ]
}

fn run(mut args: Vec<String>, with_inventory: bool) -> Output {
    if with_inventory {
        args.extend(inventory());
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    swtag(&refs)
}

fn train_lsw(dir: &Path, rules: bool) -> PathBuf {
    let model = dir.join("model.lsw");
    let mut args: Vec<String> = ["train", "--tagger", "lsw", "--window", "-1,+1", "--corpus"]
        .map(String::from)
        .to_vec();
    args.push(fixture("train.txt").display().to_string());
    args.extend(["--model".into(), model.display().to_string()]);
    if rules {
        args.extend(["--rules".into(), fixture("rules.txt").display().to_string()]);
    }
    stdout(&run(args, true));
    model
}

fn tag_with(model: &Path) -> String {
    let args = vec![
        "tag".into(),
        "--model".into(),
        model.display().to_string(),
        "--corpus".into(),
        fixture("test.txt").display().to_string(),
    ];
    stdout(&run(args, true))
}

#[test]
fn stats_on_fixture() {
    let args = vec!["stats".into(), "--corpus".into(), fixture("stats.txt").display().to_string()];
    assert_eq!(
        stdout(&run(args, true)),
        "Words: 8\nAmb. classes: 6\nAmb. rate: 25.00% (2/8)\n"
    );
}

#[test]
fn lsw_with_rules_tags_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_lsw(dir.path(), true);
    let expected = fs::read_to_string(fixture("test.expected")).unwrap();
    assert_eq!(tag_with(&model), expected);
    assert!(fs::read_to_string(&model).unwrap().contains("rules_applied true"));
}

#[test]
fn eval_reports_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_lsw(dir.path(), true);
    let args = vec![
        "eval".into(),
        "--model".into(),
        model.display().to_string(),
        "--gold".into(),
        fixture("gold.txt").display().to_string(),
    ];
    let out = stdout(&run(args, true));
    assert!(out.contains("Tokens: 7"), "{out}");
    assert!(out.contains("Accuracy: 1.0000"), "{out}");
}

#[test]
fn tag_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_lsw(dir.path(), false);
    let target = dir.path().join("tags.txt");
    let args = vec![
        "tag".into(),
        "--model".into(),
        model.display().to_string(),
        "--corpus".into(),
        fixture("test.txt").display().to_string(),
        "--output".into(),
        target.display().to_string(),
    ];
    assert_eq!(stdout(&run(args, true)), "");
    let written = fs::read_to_string(&target).unwrap();
    assert_eq!(written, tag_with(&model));
    assert!(fs::read_to_string(&model).unwrap().contains("rules_applied false"));
}

#[test]
fn every_tagger_trains_and_tags() {
    let dir = tempfile::tempdir().unwrap();
    for (tagger, window) in [("sw", Some("-1,+1")), ("sw", Some("-2,-1")), ("lsw", Some("+1")), ("hmm", None)] {
        let model = dir.path().join(format!("{tagger}.model"));
        let mut args: Vec<String> = vec!["train".into(), "--tagger".into(), tagger.into()];
        if let Some(w) = window {
            args.extend(["--window".into(), w.into()]);
        }
        args.extend([
            "--corpus".into(),
            fixture("train.txt").display().to_string(),
            "--model".into(),
            model.display().to_string(),
        ]);
        stdout(&run(args, true));
        let tags = tag_with(&model);
        assert_eq!(tags.lines().count(), 5, "{tagger}: {tags}");
        assert_eq!(tags.lines().nth(3), Some("det"));
    }
}

#[test]
fn config_errors_exit_2() {
    let corpus = fixture("train.txt").display().to_string();
    let cases: Vec<Vec<String>> = vec![
        vec!["train".into(), "--tagger".into(), "lsw".into()],
        vec!["train".into(), "--tagger".into(), "sw".into(), "--corpus".into(), corpus.clone(), "--model".into(), "/tmp/unused".into()],
        vec![
            "train".into(),
            "--tagger".into(),
            "lsw".into(),
            "--window".into(),
            "-1,+5".into(),
            "--corpus".into(),
            corpus,
            "--model".into(),
            "/tmp/unused".into(),
        ],
        vec!["frobnicate".into()],
    ];
    for args in cases {
        let out = run(args.clone(), args[0] == "train" && args.len() > 3);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn format_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_lsw(dir.path(), true);
    let text = fs::read_to_string(&model).unwrap();
    let broken = dir.path().join("broken.lsw");
    fs::write(&broken, text.replacen("lswmodel v1", "lswmodel v9", 1)).unwrap();
    let out = run(
        vec![
            "tag".into(),
            "--model".into(),
            broken.display().to_string(),
            "--corpus".into(),
            fixture("test.txt").display().to_string(),
        ],
        true,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));

    let bad_rules = dir.path().join("rules.txt");
    fs::write(&bad_rules, "FORBID det\n").unwrap();
    let out = run(
        vec![
            "train".into(),
            "--tagger".into(),
            "lsw".into(),
            "--window".into(),
            "-1,+1".into(),
            "--rules".into(),
            bad_rules.display().to_string(),
            "--corpus".into(),
            fixture("train.txt").display().to_string(),
            "--model".into(),
            dir.path().join("m").display().to_string(),
        ],
        true,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn inputs_are_not_modified() {
    let before: Vec<Vec<u8>> = ["train.txt", "rules.txt", "lexicon.txt", "tagset.txt"]
        .iter()
        .map(|f| fs::read(fixture(f)).unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    train_lsw(dir.path(), true);
    let after: Vec<Vec<u8>> = ["train.txt", "rules.txt", "lexicon.txt", "tagset.txt"]
        .iter()
        .map(|f| fs::read(fixture(f)).unwrap())
        .collect();
    assert_eq!(before, after);
}

#[test]
fn synth_then_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let spec = fixture("synthetic.txt").display().to_string();
    let d = data.display().to_string();
    stdout(&swtag(&["synth", "--spec", &spec, "--output", &d, "--length", "3000", "--test-length", "500"]));
    let again = dir.path().join("again");
    stdout(&swtag(&[
        "synth", "--spec", &spec, "--output", &again.display().to_string(), "--length", "3000", "--test-length", "500",
    ]));
    for f in ["tagset.txt", "lexicon.txt", "rules.txt", "train.txt", "test.txt"] {
        let a = fs::read(data.join(f)).unwrap();
        assert!(!a.is_empty(), "{f}");
        assert_eq!(a, fs::read(again.join(f)).unwrap(), "{f} differs between runs");
    }

    let prefix = dir.path().join("curve").display().to_string();
    let p = |f: &str| data.join(f).display().to_string();
    stdout(&swtag(&[
        "sweep", "--train", &p("train.txt"), "--test", &p("test.txt"), "--tagset", &p("tagset.txt"),
        "--lexicon", &p("lexicon.txt"), "--rules", &p("rules.txt"), "--sizes", "1000,3000", "--output", &prefix,
    ]));
    let csv = fs::read_to_string(format!("{prefix}.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("tagger,train_tokens,accuracy,ambiguous_accuracy"));
    assert_eq!(csv.lines().count(), 1 + 4 * 2);
    assert!(csv.contains("\"LSW(-1, +1)-No-Rules\",3000,"));
    let params = fs::read_to_string(format!("{prefix}.params.csv")).unwrap();
    assert!(params.starts_with("tagger,train_tokens,parameters\n"));
    let svg = fs::read_to_string(format!("{prefix}.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);

    let out = swtag(&[
        "sweep", "--train", &p("train.txt"), "--test", &p("test.txt"), "--tagset", &p("tagset.txt"),
        "--lexicon", &p("lexicon.txt"), "--sizes", "1000,9000", "--output", &prefix,
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synthetic_sweep_over_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("s").display().to_string();
    stdout(&swtag(&[
        "sweep",
        "--synth-spec",
        &fixture("synthetic.txt").display().to_string(),
        "--seeds",
        "2",
        "--sizes",
        "500,1000",
        "--test-length",
        "300",
        "--tagger",
        "sw:-1,+1",
        "--tagger",
        "lsw:-1,+1",
        "--output",
        &prefix,
    ]));
    let summary = fs::read_to_string(format!("{prefix}.summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 2);
    assert!(summary.contains("\"LSW(-1, +1)\",1000,"));
}

#[test]
fn help_lists_commands() {
    let out = stdout(&swtag(&["--help"]));
    for cmd in ["train", "tag", "eval", "stats", "sweep", "synth"] {
        assert!(out.contains(cmd), "{cmd}");
    }
}
