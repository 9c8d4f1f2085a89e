use std::path::PathBuf;

use levydiff_cli::synthetic::SyntheticSeries;
use levydiff_core::io::{format_snapshot, ingest};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/stable_alpha1.5")
}

fn fixture_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn bundled_fixtures_match_the_generator() {
    let series = SyntheticSeries::thirteen(1.5).generate().unwrap();
    if std::env::var_os("LEVYDIFF_WRITE_FIXTURES").is_some() {
        std::fs::create_dir_all(fixture_dir()).unwrap();
        for (i, s) in series.iter().enumerate() {
            std::fs::write(
                fixture_dir().join(format!("snap_{i:02}.dat")),
                format_snapshot(s),
            )
            .unwrap();
        }
    }
    let files = fixture_files();
    assert_eq!(files.len(), series.len());
    for (f, s) in files.iter().zip(&series) {
        assert_eq!(
            std::fs::read_to_string(f).unwrap(),
            format_snapshot(s),
            "{}",
            f.display()
        );
    }
}

#[test]
fn thirteen_curve_series_ingests_to_unit_curves() {
    let got = ingest(&fixture_files()).unwrap();
    assert_eq!(got.len(), 13);
    assert_eq!(got[0].time, 10.0);
    assert_eq!(got[12].time, 40.0);
    for s in &got {
        assert!((s.integral() - 1.0).abs() < 1e-12);
        assert!(s.meta["baseline"].parse::<f64>().unwrap() > 0.0);
    }
}
