//! Process-level contract of the `qfd` binary: exit codes, error
//! reporting on stderr, and the shape of each text output. Numerical
//! behaviour is covered by the unit tests and the acceptance gate.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfd"))
        .args(args)
        .output()
        .expect("spawn qfd binary")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn succeeding(args: &[&str]) -> String {
    let output = run(args);
    assert!(
        output.status.success(),
        "qfd {args:?} failed: {}",
        stderr_of(&output)
    );
    stdout_of(&output)
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &[][..],
        &["frobnicate"][..],
        &["dof", "--lattice", "square", "--n", "3", "--bogus"][..],
        &["synth", "--lattice", "square", "--n", "2"][..],
        &["rep", "--lattice", "triangular", "--n", "2"][..],
    ] {
        let output = run(args);
        assert_eq!(output.status.code(), Some(2), "qfd {args:?}");
        assert!(!stderr_of(&output).is_empty(), "qfd {args:?}");
    }
}

#[test]
fn runtime_errors_exit_one_and_report() {
    let dir = tempfile::tempdir().expect("tempdir");
    let missing = dir.path().join("missing.chips");
    let out = dir.path().join("unwritten.stats");
    let cases: &[&[&str]] = &[
        &[
            "stats",
            "--input",
            missing.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
        ],
        &["dof", "--lattice", "square", "--n", "5..2"],
        &["rep", "--lattice", "square", "--n", "2", "--selector", "T9"],
    ];
    for args in cases {
        let output = run(args);
        assert_eq!(output.status.code(), Some(1), "qfd {args:?}");
        let stderr = stderr_of(&output);
        assert!(stderr.starts_with("error: "), "qfd {args:?}: {stderr}");
        assert!(!out.exists(), "qfd {args:?} left a partial output");
    }
}

#[test]
fn rep_lists_every_element_and_pixel() {
    let text = succeeding(&["rep", "--lattice", "square", "--n", "2"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("element,destination,source"));
    let rows: Vec<(&str, usize, usize)> = lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 3, "row {line:?}");
            (
                fields[0],
                fields[1].parse().expect("destination"),
                fields[2].parse().expect("source"),
            )
        })
        .collect();
    assert_eq!(rows.len(), 8 * 4);
    for (element, chunk) in rows.chunks(4).enumerate() {
        let expected = format!("T{}", element + 1);
        let mut sources: Vec<usize> = chunk
            .iter()
            .map(|&(label, dest, source)| {
                assert_eq!(label, expected);
                assert!((1..=4).contains(&dest));
                source
            })
            .collect();
        sources.sort_unstable();
        assert_eq!(sources, vec![1, 2, 3, 4], "element {expected}");
    }
    assert_eq!(rows[0], ("T1", 1, 1), "identity comes first");
}

#[test]
fn dof_merges_overlapping_ranges_and_writes_files() {
    let stdout = succeeding(&["dof", "--lattice", "hexagonal", "--n", "2,1..3,2"]);
    let ns: Vec<&str> = stdout
        .lines()
        .skip(1)
        .map(|line| line.split(',').next().unwrap())
        .collect();
    assert_eq!(ns, vec!["1", "2", "3"]);

    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("dof.csv");
    let silent = succeeding(&[
        "dof",
        "--lattice",
        "hexagonal",
        "--n",
        "2,1..3,2",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(silent.is_empty(), "-o should leave stdout empty");
    assert_eq!(std::fs::read_to_string(&path).expect("csv file"), stdout);
}

#[test]
fn verify_suite_passes_and_exits_zero() {
    let text = succeeding(&["verify", "--lattice", "hexagonal", "--n", "2"]);
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty());
    for line in &lines {
        assert!(line.starts_with("PASS "), "unexpected line {line:?}");
    }
}

/// Drives synth, stats, train, score and det through the binary and
/// checks each output's shape: the train summary row, one score per
/// chip (augmentation included), and a DET curve running from corner
/// to corner.
#[test]
fn pipeline_outputs_have_documented_shapes() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let lattice = ["--lattice", "square", "--n", "2"];

    let synth = |seed: &str, amplitude: &str, extra: &[&str], file: &str| {
        let mut args = vec!["synth"];
        args.extend_from_slice(&lattice);
        args.extend_from_slice(&["--seed", seed, "--count", "10"]);
        args.extend_from_slice(&["--bump-amplitude", amplitude]);
        args.extend_from_slice(extra);
        let file = path(file);
        args.extend_from_slice(&["--output", &file]);
        succeeding(&args);
    };
    synth("5", "0.8", &[], "target.chips");
    synth("6", "0.0", &[], "clutter.chips");
    synth("7", "0.0", &["--augment"], "eval.chips");

    for class in ["target", "clutter"] {
        succeeding(&[
            "stats",
            "--input",
            &path(&format!("{class}.chips")),
            "--output",
            &path(&format!("{class}.stats")),
        ]);
    }

    let summary = succeeding(&[
        "train",
        "--target",
        &path("target.stats"),
        "--clutter",
        &path("clutter.stats"),
        "--output",
        &path("model.qfd"),
    ]);
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("dof,effective_rank,cutoff,objective"));
    let row: Vec<&str> = lines.next().expect("summary row").split(',').collect();
    assert_eq!(row[0], "4", "square n=2 full-group dof");
    assert!(row[1].parse::<usize>().expect("rank") <= 4);
    assert!(lines.next().is_none());

    let scores = succeeding(&[
        "score",
        "--model",
        &path("model.qfd"),
        "--input",
        &path("eval.chips"),
    ]);
    let mut lines = scores.lines();
    assert_eq!(lines.next(), Some("score"));
    let values: Vec<f64> = lines.map(|line| line.parse().expect("score")).collect();
    assert_eq!(values.len(), 80, "ten chips times eight group elements");
    assert!(values.iter().all(|v| v.is_finite()));

    let det = succeeding(&[
        "det",
        "--model",
        &path("model.qfd"),
        "--target",
        &path("target.chips"),
        "--clutter",
        &path("clutter.chips"),
    ]);
    let rows: Vec<&str> = det.lines().collect();
    assert_eq!(rows[0], "threshold,p_fa,p_miss,se_fa,se_miss");
    assert!(rows.len() >= 3, "at least two thresholds");
    let first: Vec<&str> = rows[1].split(',').collect();
    assert_eq!((first[1], first[2]), ("0", "1"), "lowest threshold corner");
    let last: Vec<&str> = rows[rows.len() - 1].split(',').collect();
    assert_eq!(
        (last[0], last[1], last[2]),
        ("inf", "1", "0"),
        "open-ended final threshold"
    );
}

#[test]
fn score_rejects_chips_from_another_lattice() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let cases = [
        ("square", "1", "0.6", "a.chips"),
        ("square", "2", "0.0", "b.chips"),
        ("hexagonal", "3", "0.0", "hex.chips"),
    ];
    for (lattice, seed, amplitude, file) in cases {
        succeeding(&[
            "synth",
            "--lattice",
            lattice,
            "--n",
            "2",
            "--seed",
            seed,
            "--count",
            "8",
            "--bump-amplitude",
            amplitude,
            "--output",
            &path(file),
        ]);
    }
    for class in ["a", "b"] {
        succeeding(&[
            "stats",
            "--input",
            &path(&format!("{class}.chips")),
            "--output",
            &path(&format!("{class}.stats")),
        ]);
    }
    succeeding(&[
        "train",
        "--target",
        &path("a.stats"),
        "--clutter",
        &path("b.stats"),
        "--output",
        &path("model.qfd"),
    ]);
    let output = run(&[
        "score",
        "--model",
        &path("model.qfd"),
        "--input",
        &path("hex.chips"),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).starts_with("error: "));
}
