use std::path::{Path, PathBuf};

use medmatch::harness::cmd_sweep;
use medmatch::scenario::Scenario;

const TOLERANCE_DB: f64 = 0.1;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn read_rows(path: &Path) -> Vec<(f64, f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("axis1,axis2,through_power_db"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

fn check(scenario_file: &str, sweep: &str) {
    let (scenario, hash) = Scenario::load(&root().join("scenarios").join(scenario_file)).unwrap();
    let out = tempfile::tempdir().unwrap();
    cmd_sweep(&scenario, &hash, out.path()).unwrap();
    let got = read_rows(&out.path().join(format!("sweep_{sweep}.csv")));
    let want = read_rows(&root().join("tests/golden").join(format!("{sweep}.csv")));
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert_eq!((g.0, g.1), (w.0, w.1));
        assert!(
            (g.2 - w.2).abs() <= TOLERANCE_DB,
            "{sweep} at ({}, {}): {} vs {}",
            g.0,
            g.1,
            g.2,
            w.2
        );
    }
}

#[test]
fn water_gap_heatmap_matches_golden() {
    check("water_gap_heatmap.toml", "water_gap_susceptance");
}

#[test]
fn tissue_gap_heatmap_matches_golden() {
    check("tissue_gap_heatmap.toml", "tissue_gap_susceptance");
}

#[test]
fn tissue_fat_heatmap_matches_golden() {
    check("tissue_fat_heatmap.toml", "tissue_fat_susceptance");
}

#[test]
fn zero_susceptance_column_is_bare_baseline() {
    let rows = read_rows(&root().join("tests/golden/water_gap_susceptance.csv"));
    for (_, b, db) in rows.iter().filter(|r| r.1 == 0.0) {
        assert_eq!(*b, 0.0);
        assert!((db + 4.436975).abs() < 1e-6);
    }
}

#[test]
fn smaller_gap_needs_larger_susceptance() {
    let rows = read_rows(&root().join("tests/golden/water_gap_susceptance.csv"));
    let argmax = |gap: f64| {
        rows.iter()
            .filter(|r| r.0 == gap)
            .fold(
                (0.0, f64::NEG_INFINITY),
                |best, r| if r.2 > best.1 { (r.1, r.2) } else { best },
            )
            .0
    };
    assert!(argmax(2.0) > argmax(12.0));
}
