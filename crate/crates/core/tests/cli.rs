use std::path::Path;
use std::process::{Command, Output};

use pcc::io::{load_heatmap, load_predictions};
use pcc::PccConfig;

fn pcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcc"))
        .args(args)
        .env_remove("PCC_THREADS")
        .output()
        .expect("spawn pcc")
}

fn ok(args: &[&str]) -> String {
    let out = pcc(args);
    assert!(
        out.status.success(),
        "pcc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|w| w.strip_prefix(key))
        .and_then(|v| v.trim_end_matches('%').parse().ok())
        .unwrap_or_else(|| panic!("no {key} in {line:?}"))
}

#[test]
fn synth_then_classify_blobs() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("blobs.csv");
    let pred = dir.path().join("pred.csv");
    ok(&[
        "synth",
        "blobs",
        "--n",
        "200",
        "--classes",
        "2",
        "--out",
        s(&features),
    ]);
    let stdout = ok(&[
        "classify",
        "--features",
        s(&features),
        "--p",
        "2",
        "--k",
        "5",
        "--seed",
        "1",
        "--out",
        s(&pred),
    ]);
    assert!(field(&stdout, "accuracy=") >= 0.95, "{stdout}");
    let table = load_predictions(&pred).unwrap();
    assert_eq!(table.ids.len(), 200);

    let report = ok(&[
        "report",
        "--predictions",
        s(&pred),
        "--features",
        s(&features),
    ]);
    assert!(field(&report, "agreement=") >= 0.95, "{report}");
}

#[test]
fn classify_with_separate_label_file() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("moons.csv");
    let labels = dir.path().join("labels.csv");
    let pred = dir.path().join("pred.csv");
    ok(&[
        "synth",
        "moons",
        "--n",
        "100",
        "--seed",
        "3",
        "--out",
        s(&features),
    ]);
    std::fs::write(
        &labels,
        "id,label\nm00,moon0\nm50,moon1\nm10,moon0\nm60,moon1\n",
    )
    .unwrap();
    ok(&[
        "classify",
        "--features",
        s(&features),
        "--labels-from",
        s(&labels),
        "--p",
        "2",
        "--k",
        "5",
        "--out",
        s(&pred),
    ]);
    let table = load_predictions(&pred).unwrap();
    assert_eq!(table.ids.len(), 100);
    let by_id = |id: &str| &table.labels[table.ids.iter().position(|x| x == id).unwrap()];
    assert_eq!(by_id("m00"), "moon0");
    assert_eq!(by_id("m50"), "moon1");
}

#[test]
fn grid_search_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("blobs.csv");
    ok(&[
        "synth",
        "blobs",
        "--n",
        "90",
        "--classes",
        "3",
        "--dim",
        "4",
        "--separation",
        "3",
        "--out",
        s(&features),
    ]);
    let mut heatmaps = Vec::new();
    for threads in ["1", "4"] {
        let heat = dir.path().join(format!("heat{threads}.csv"));
        let stdout = ok(&[
            "--threads",
            threads,
            "grid-search",
            "--features",
            s(&features),
            "--reps",
            "3",
            "--pmax",
            "3",
            "--kmax",
            "4",
            "--seed",
            "7",
            "--tag",
            "blobs",
            "--out",
            s(&heat),
        ]);
        assert!(stdout.contains("extractor=blobs"), "{stdout}");
        heatmaps.push(std::fs::read(&heat).unwrap());
    }
    assert_eq!(heatmaps[0], heatmaps[1]);

    let heat = dir.path().join("heat1.csv");
    let grid = load_heatmap(&heat).unwrap();
    assert_eq!((grid.p_values.len(), grid.k_values.len()), (3, 4));
    let summary = ok(&["report", "--heatmap", s(&heat)]);
    assert!(summary.starts_with("grid=3x4 best"), "{summary}");
}

#[test]
fn pca_and_graph_stages() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("blobs.csv");
    let reduced = dir.path().join("reduced.csv");
    let adjacency = dir.path().join("adj.txt");
    ok(&[
        "synth",
        "blobs",
        "--n",
        "60",
        "--dim",
        "6",
        "--out",
        s(&features),
    ]);
    ok(&[
        "pca",
        "--features",
        s(&features),
        "--p",
        "3",
        "--out",
        s(&reduced),
    ]);
    let header = std::fs::read_to_string(&reduced).unwrap();
    assert!(header.starts_with("id,label,f0,f1,f2\n"));

    let report = ok(&[
        "graph",
        "--features",
        s(&reduced),
        "--k",
        "4",
        "--out",
        s(&adjacency),
    ]);
    assert!(report.contains("nodes=60"), "{report}");
    let dump = std::fs::read_to_string(&adjacency).unwrap();
    assert_eq!(dump.lines().count(), 60);
    assert!(dump.starts_with("b00:"));
}

#[test]
fn help_lists_dynamics_defaults() {
    let defaults = PccConfig::default();
    for command in ["classify", "grid-search"] {
        let help = ok(&[command, "--help"]);
        for (flag, value) in [
            ("--pgrd", defaults.p_grd.to_string()),
            ("--deltav", defaults.delta_v.to_string()),
            ("--dist-exponent", defaults.dist_exponent.to_string()),
            ("--conv-eps", defaults.conv_epsilon.to_string()),
            ("--conv-interval", defaults.conv_check_interval.to_string()),
            ("--seed", defaults.seed.to_string()),
        ] {
            let line = help
                .lines()
                .find(|l| l.trim_start().starts_with(flag))
                .unwrap_or_else(|| panic!("{command} --help lacks {flag}"));
            assert!(line.contains(&format!("[default: {value}]")), "{line}");
        }
        for flag in [
            "--features",
            "--labels-from",
            "--threads",
            "--max-sweeps",
            "--out",
        ] {
            assert!(help.contains(flag), "{command} --help lacks {flag}");
        }
    }
    let classify = ok(&["classify", "--help"]);
    for flag in ["--p <P>", "--k <K>", "--fraction", "--trace"] {
        assert!(classify.contains(flag));
    }
    let grid = ok(&["grid-search", "--help"]);
    for flag in ["--reps", "--pmax", "--kmax", "--fraction"] {
        assert!(grid.contains(flag));
    }
}

#[test]
fn print_config_round_trips() {
    let stdout = ok(&["--print-config"]);
    let config: PccConfig = serde_json::from_str(&stdout).unwrap();
    assert_eq!(config, PccConfig::default());

    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("blobs.csv");
    ok(&["synth", "blobs", "--n", "40", "--out", s(&features)]);
    let stdout = ok(&[
        "--print-config",
        "classify",
        "--features",
        s(&features),
        "--p",
        "2",
        "--k",
        "3",
        "--pgrd",
        "0.25",
        "--max-sweeps",
        "30",
        "--out",
        s(&dir.path().join("p.csv")),
    ]);
    let json_end = stdout.find("\n}").unwrap() + 2;
    let config: PccConfig = serde_json::from_str(&stdout[..json_end]).unwrap();
    assert_eq!(config.p_grd, 0.25);
    assert_eq!(config.max_sweeps, Some(30));
}

#[test]
fn trace_has_one_record_per_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("blobs.csv");
    let trace = dir.path().join("trace.jsonl");
    ok(&["synth", "blobs", "--n", "50", "--out", s(&features)]);
    ok(&[
        "classify",
        "--features",
        s(&features),
        "--p",
        "2",
        "--k",
        "4",
        "--max-sweeps",
        "12",
        "--trace",
        s(&trace),
        "--out",
        s(&dir.path().join("p.csv")),
    ]);
    let records: Vec<serde_json::Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 12);
    assert_eq!(records[11]["sweep"], 12);
    assert!(records[0]["mean_max_domination"].is_f64());
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = pcc(&[
        "classify",
        "--features",
        s(&missing),
        "--out",
        s(&dir.path().join("p.csv")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    assert!(!pcc(&["classify", "--bogus"]).status.success());
    assert!(!pcc(&[]).status.success());

    let features = dir.path().join("blobs.csv");
    ok(&["synth", "blobs", "--n", "20", "--out", s(&features)]);
    let out = pcc(&["graph", "--features", s(&features), "--k", "25"]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "id,label,f0,f1\na,x,1,2\nb,y,3\n").unwrap();
    let out = pcc(&[
        "pca",
        "--features",
        s(&ragged),
        "--p",
        "1",
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
