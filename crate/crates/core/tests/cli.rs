use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfdgm-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SHORT: &str = r#"
preset = "comicon-small"
node_count = 30
duration_s = 300
protocols = ["wfdgm", "baseline"]
t_d = [5, 30, 60]
seeds = [1, 2, 3, 4, 5]
"#;

fn short_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("short.toml");
    fs::write(&p, SHORT).unwrap();
    p
}

fn run_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let p = entry.path();
        if p.is_dir() {
            for (name, bytes) in run_files(&p) {
                out.push((
                    format!("{}/{name}", entry.file_name().to_string_lossy()),
                    bytes,
                ));
            }
        } else if p.file_name().unwrap() != "config.toml" {
            out.push((
                entry.file_name().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            ));
        }
    }
    out.sort();
    out
}

#[test]
fn preset_run_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sim(&[
        "--preset",
        "concert-small",
        "--protocol",
        "wfdgm",
        "--seed",
        "1",
        "--out",
        path_str(tmp.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = tmp.path().join("wfdgm_td30_seed1");
    for f in [
        "diffusion.csv",
        "components.csv",
        "ccdf.csv",
        "battery.csv",
        "summary.json",
        "config.toml",
    ] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    assert!(!run.join("trace.tsv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["component_count"], 1);
    assert_eq!(summary["scenario"], "concert-small");
    assert_eq!(summary["violations"], 0);
    let diffusion = fs::read_to_string(run.join("diffusion.csv")).unwrap();
    assert!(diffusion.starts_with("time_s,mean_fraction\n0,"));
}

#[test]
fn grid_expands_to_one_directory_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = sim(&[
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&out_dir),
        "--jobs",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dirs: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().is_dir())
        .collect();
    assert_eq!(dirs.len(), 30);
    assert!(out_dir.join("baseline_td60_seed5/summary.json").is_file());
    assert!(out_dir.join("config.toml").is_file());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let base = [
        "--config",
        path_str(&cfg),
        "--td",
        "30",
        "--seed",
        "3,4",
        "--trace",
    ];
    assert!(sim(&[&base[..], &["--out", path_str(&a)]].concat())
        .status
        .success());
    assert!(
        sim(&[&base[..], &["--out", path_str(&b), "--jobs", "3"]].concat())
            .status
            .success()
    );
    let (fa, fb) = (run_files(&a), run_files(&b));
    assert_eq!(fa.len(), 4 * 6);
    assert!(fa.iter().any(|(n, _)| n.ends_with("trace.tsv")));
    assert_eq!(fa, fb);
}

#[test]
fn config_echo_reloads_to_the_same_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(sim(&[
        "--config",
        path_str(&cfg),
        "--protocol",
        "baseline",
        "--td",
        "5",
        "--seed",
        "2",
        "--out",
        path_str(&a)
    ])
    .status
    .success());
    let echo = a.join("config.toml");
    assert!(sim(&["--config", path_str(&echo), "--out", path_str(&b)])
        .status
        .success());
    assert_eq!(run_files(&a), run_files(&b));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    assert_eq!(
        sim(&["--config", path_str(&missing)]).status.code(),
        Some(2)
    );
    assert_eq!(sim(&["--preset", "stadium"]).status.code(), Some(2));
    assert_eq!(sim(&[]).status.code(), Some(2));
    assert_eq!(
        sim(&["--preset", "concert-small", "--protocol", "flooding"])
            .status
            .code(),
        Some(2)
    );

    let bad_key = tmp.path().join("bad.toml");
    fs::write(&bad_key, "preset = \"concert-small\"\nradio_rnage_m = 50\n").unwrap();
    let out = sim(&["--config", path_str(&bad_key)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radio_rnage_m"));

    let bad_value = tmp.path().join("weights.toml");
    fs::write(
        &bad_value,
        "preset = \"concert-small\"\n[protocol]\nweights = [0.5, 0.5, 0.5, 0.5]\n",
    )
    .unwrap();
    assert_eq!(
        sim(&["--config", path_str(&bad_value)]).status.code(),
        Some(2)
    );
}

#[test]
fn failing_run_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    // more points of interest than lattice vertices only shows up when the map is built
    let cfg = tmp.path().join("crowded.toml");
    fs::write(
        &cfg,
        format!("{SHORT}\n[mobility]\nkind = \"poi_walk\"\npoi_count = 100000\n"),
    )
    .unwrap();
    let out = sim(&[
        "--config",
        path_str(&cfg),
        "--protocol",
        "wfdgm",
        "--td",
        "30",
        "--seed",
        "1",
        "--out",
        path_str(tmp.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}
