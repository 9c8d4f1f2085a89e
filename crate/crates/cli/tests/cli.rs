use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use levydiff_cli::report::parse_lines;
use levydiff_cli::RunManifest;
use levydiff_core::io::read_snapshot;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levydiff"))
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("LEVYDIFF_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/stable_alpha1.5")
}

const WALK: &str = r#"
[diffusion_cli]
seed = 11

[ctrw_walker]
mu = 1.5
beta_dwell = 1.0
v_scale = 1.0
flight_scale = 1.0
dwell_scale = 0.1
correlation = { mode = "none" }
initial_width = 1.0
n_atoms = 3000
snapshot_times = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
bins = 128
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file below `dir`, relative, sorted.
fn listing(dir: &Path) -> Vec<String> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push(
                    p.strip_prefix(root)
                        .unwrap()
                        .to_string_lossy()
                        .replace('\\', "/"),
                );
            }
        }
    }
    let mut v = Vec::new();
    walk(dir, dir, &mut v);
    v.sort();
    v
}

#[test]
fn unknown_key_is_a_config_error_with_its_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &WALK.replace("n_atoms", "n_atom"));
    let o = run(&[
        "simulate-ctrw",
        "--config",
        &cfg,
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("ctrw_walker"), "{}", stderr(&o));
    assert!(stderr(&o).contains("n_atom"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn bad_flags_and_domain_errors_exit_two() {
    assert_eq!(code(&run(&["simulate-ctrw", "--bogus"])), 2);
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &WALK.replace("mu = 1.5", "mu = 2.5"));
    let o = run(&[
        "simulate-ctrw",
        "--config",
        &cfg,
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn simulation_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), WALK);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        code(&run(&[
            "simulate-ctrw",
            "--config",
            &cfg,
            "--out",
            s(&a),
            "--workers",
            "1"
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "simulate-ctrw",
            "--config",
            &cfg,
            "--out",
            s(&b),
            "--workers",
            "3"
        ])),
        0
    );
    let (ma, mb) = (
        RunManifest::load(&a).unwrap(),
        RunManifest::load(&b).unwrap(),
    );
    assert_eq!(ma.data_digest, mb.data_digest);
    assert_eq!(ma.workers, 1);
    assert_eq!(mb.workers, 3);
    for art in &ma.artifacts {
        assert_eq!(
            fs::read(a.join(&art.path)).unwrap(),
            fs::read(b.join(&art.path)).unwrap()
        );
    }
    let snap = read_snapshot(a.join(&ma.artifacts[0].path)).unwrap();
    assert_eq!(snap.meta["seed"], "11");
    assert_eq!(snap.meta["config_digest"], ma.config_digest);

    let c = tmp.path().join("c");
    let o = run(&[
        "simulate-ctrw",
        "--config",
        &cfg,
        "--out",
        s(&c),
        "--seed",
        "12",
    ]);
    assert_eq!(code(&o), 0);
    assert_ne!(RunManifest::load(&c).unwrap().data_digest, ma.data_digest);
}

#[test]
fn manifest_lists_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), WALK);
    let out = tmp.path().join("o");
    let o = bin()
        .args(["simulate-ctrw", "--config", &cfg])
        .env("LEVYDIFF_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = RunManifest::load(&out).unwrap();
    let mut listed: Vec<String> = m.artifacts.iter().map(|a| a.path.clone()).collect();
    listed.push("manifest.json".into());
    listed.sort();
    assert_eq!(listed, listing(&out));
    assert_eq!(m.artifacts.len(), 6);
    let again = run(&["simulate-ctrw", "--config", &cfg, "--out", s(&out)]);
    assert_eq!(code(&again), 1, "non-empty output directories are refused");
}

#[test]
fn failed_sweep_leaves_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "{WALK}\n[recipe]\nname = \"fig2_fwhm\"\nsimulator = \"ctrw\"\n\n\
         [[recipe.sweep]]\nlabel = \"ok\"\n\n[[recipe.sweep]]\nlabel = \"bad\"\nbeta_dwell = 0.0\n"
    );
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("o");
    let o = run(&["run-recipe", "--config", &cfg, "--out", s(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!out.exists());
    assert_eq!(listing(tmp.path()), ["run.toml"]);
}

#[test]
fn ingest_then_collapse_recovers_the_fixture_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let ing = tmp.path().join("ing");
    let o = run(&["ingest", "--out", s(&ing), s(&fixtures())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = RunManifest::load(&ing).unwrap();
    assert_eq!(m.artifacts.len(), 13);

    let col = tmp.path().join("col");
    let o = run(&["collapse", "--out", s(&col), s(&ing.join("snapshots"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = parse_lines(&fs::read_to_string(col.join("reports.jsonl")).unwrap()).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(
        (recs[0].exponent - 1.5).abs() < 0.05,
        "{}",
        recs[0].exponent
    );
    assert_eq!(recs[0].input_digests.len(), 13);

    // a single interior minimum in the m(α) table
    let csv = fs::read_to_string(col.join("fig4_collapse_m_snapshots.csv")).unwrap();
    let m: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let k = m
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!(k > 0 && k + 1 < m.len());
    assert!(m[..k].windows(2).all(|w| w[1] < w[0]));
    assert!(m[k..].windows(2).all(|w| w[1] > w[0]));

    let replot = tmp.path().join("plot");
    let o = run(&[
        "plot",
        "--out",
        s(&replot),
        s(&col.join("fig4_collapse.json")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(replot.join("fig4_collapse.svg")).unwrap(),
        fs::read(col.join("fig4_collapse.svg")).unwrap()
    );
}

#[test]
fn malformed_data_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.dat");
    fs::write(&bad, "# time_ms=1\n0 1\n2 1\n1 1\n").unwrap();
    let o = run(&["ingest", "--out", s(&tmp.path().join("o")), s(&bad)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("increasing"));
}

#[test]
fn empty_figure_data_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("f.json");
    fs::write(&data, r#"{"kind":"fig2_fwhm","series":[]}"#).unwrap();
    let o = run(&["plot", "--out", s(&tmp.path().join("o")), s(&data)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn analyze_reports_all_three_exponents() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), WALK);
    let sim = tmp.path().join("sim");
    assert_eq!(
        code(&run(&["simulate-ctrw", "--config", &cfg, "--out", s(&sim)])),
        0
    );
    let out = tmp.path().join("an");
    let o = run(&["analyze", "--out", s(&out), s(&sim.join("snapshots"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = parse_lines(&fs::read_to_string(out.join("reports.jsonl")).unwrap()).unwrap();
    let methods: Vec<String> = recs
        .iter()
        .filter(|r| r.time.is_none())
        .map(|r| serde_json::to_string(&r.method).unwrap())
        .collect();
    assert_eq!(
        methods,
        [
            "\"fwhm_power_law\"",
            "\"self_similarity\"",
            "\"levy_shape\""
        ]
    );
    assert_eq!(recs.iter().filter(|r| r.time.is_some()).count(), 6);
    assert_eq!(
        fs::read_to_string(out.join("widths.csv"))
            .unwrap()
            .lines()
            .count(),
        7
    );
}
