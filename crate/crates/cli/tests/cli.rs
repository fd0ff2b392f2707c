use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fedshap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedshap"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn run_dirs(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    v.sort();
    v
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_csv_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run", "--dataset", "synthetic", "--strategy", "greedy_fed", "--n", "30", "--m", "3", "--rounds", "60", "--seed",
        "1", "--out", "out",
    ];
    let o = fedshap(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let dirs = run_dirs(&dir.path().join("out"));
    assert_eq!(dirs.len(), 1);
    let csv = std::fs::read_to_string(dirs[0].join("rounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 61);
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dirs[0].join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["num_clients"], 30);
    assert_eq!(cfg["budget"], 3);
    assert_eq!(cfg["rounds"], 60);
    assert_eq!(cfg["seed"], 1);

    // Same flags again: byte-identical artifacts in the same directory.
    let again = fedshap(&args, dir.path());
    assert!(again.status.success());
    assert_eq!(run_dirs(&dir.path().join("out")), dirs);
    assert_eq!(std::fs::read_to_string(dirs[0].join("rounds.csv")).unwrap(), csv);
}

#[test]
fn sweep_makes_one_run_per_value_and_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedshap(
        &[
            "sweep", "--axis", "sigma", "--values", "0,0.05,0.1", "--strategies", "greedy_fed,fedavg,ucb", "--seeds", "1",
            "--n", "10", "--m", "2", "--rounds", "8", "--out", "sw",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("sw");
    assert_eq!(run_dirs(&out).len(), 9);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "axis,value,strategy,mean,std,n,accuracies");
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with("sigma,0,greedy_fed,"));
    assert!(lines[9].starts_with("sigma,0.1,ucb,"));
    for dir in run_dirs(&out) {
        let cfg = std::fs::read_to_string(dir.join("config.json")).unwrap();
        assert!(cfg.contains("@sigma="), "{cfg}");
    }
}

#[test]
fn compare_prints_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedshap(
        &["compare", "--strategies", "fedavg,fedprox", "--seeds", "1,2", "--n", "8", "--m", "2", "--rounds", "5", "--out", "c"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("fedavg") && table.contains("fedprox") && table.contains("±"), "{table}");
    assert_eq!(run_dirs(&dir.path().join("c")).len(), 4);
    let summary = std::fs::read_to_string(dir.path().join("c/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn plot_missing_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedshap(&["plot", "missing.csv"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing.csv"), "{}", stderr(&o));
}

#[test]
fn plot_emits_well_formed_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedshap(
        &["compare", "--strategies", "greedy_fed,fedavg,s_fedavg", "--seeds", "2", "--n", "8", "--m", "2", "--rounds", "6", "--out", "p"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csvs: Vec<String> = run_dirs(&dir.path().join("p"))
        .iter()
        .map(|d| d.join("rounds.csv").to_string_lossy().into_owned())
        .collect();
    let mut args = vec!["plot", "--out", "fig/acc.svg", "--labels", "a,b&c,d"];
    args.extend(csvs.iter().map(String::as_str));
    let o = fedshap(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));

    let text = std::fs::read_to_string(dir.path().join("fig/acc.svg")).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1].attribute("data-label"), Some("b&c"));
    for l in &lines {
        assert_eq!(l.attribute("points").unwrap().split(' ').count(), 6);
    }
    let texts: Vec<&str> = doc.descendants().filter_map(|n| n.text()).collect();
    assert!(texts.contains(&"Communication round"));
    assert!(texts.contains(&"Test accuracy (%)"));

    let o = fedshap(&["plot", "--labels", "only-one", &csvs[0], &csvs[1]], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.ini"),
        "# small desk run\nn = 8\nm = 2\nrounds = 4\nstrategy = fedavg\nseed = 5\nout = from-file\n",
    )
    .unwrap();
    let o = fedshap(&["run", "--config", "exp.ini", "--rounds", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let dirs = run_dirs(&dir.path().join("from-file"));
    assert_eq!(dirs.len(), 1);
    let csv = std::fs::read_to_string(dirs[0].join("rounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let cfg = std::fs::read_to_string(dirs[0].join("config.json")).unwrap();
    assert!(cfg.contains("\"seed\": 5") && cfg.contains("\"num_clients\": 8"), "{cfg}");
}

#[test]
fn usage_errors_name_the_token() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.ini"), "rounds = 4\nlearning_speed = 2\n").unwrap();
    let o = fedshap(&["run", "--config", "bad.ini"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning-speed"), "{}", stderr(&o));

    let o = fedshap(&["run", "--bogus-flag"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--bogus-flag"));

    let o = fedshap(&["run", "--n", "3", "--m", "5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("M = 5"), "{}", stderr(&o));

    let o = fedshap(&["run", "--dataset", "mnist", "--data-dir", "no-such-dir", "--rounds", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no-such-dir"), "{}", stderr(&o));

    let o = fedshap(&["sweep", "--values", "1,2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--axis"));
}
