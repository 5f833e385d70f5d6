use std::path::PathBuf;

use ewd_cli::{render_curve, OutputFormat};
use ewd_core::harness::{sweep_curve, CurveSpec};
use ewd_core::LossConfig;

const LOSSES: [&str; 5] = ["edwd", "egwd", "gwd", "kld", "smoothl1_min"];

fn golden_path() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "tests", "golden", "curve_ratios.csv"].iter().collect()
}

pub fn regenerate() -> String {
    let losses = LOSSES.iter().map(|n| LossConfig::by_name(n).unwrap()).collect();
    let spec = CurveSpec::new(vec![1.0, 2.0, 4.0, 8.0], CurveSpec::grid(-90.0, 90.0, 1.0).unwrap(), losses);
    let rows = sweep_curve(&spec).unwrap();
    String::from_utf8(render_curve(&rows, &spec, OutputFormat::Csv).unwrap()).unwrap()
}

// Values must agree to 12 significant digits; a last-digit difference from
// a different libm is tolerated, as are sub-1e-12 residues of exact zeros.
fn same_value(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    let (x, y): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
    (x - y).abs() <= 1e-11 * x.abs().max(y.abs()) + 1e-12
}

#[test]
fn curve_matches_golden() {
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    let fresh = regenerate();
    assert_eq!(golden.lines().count(), fresh.lines().count());
    for (i, (g, f)) in golden.lines().zip(fresh.lines()).enumerate() {
        let gc: Vec<&str> = g.split(',').collect();
        let fc: Vec<&str> = f.split(',').collect();
        assert_eq!(gc[..3], fc[..3], "line {}", i + 1);
        assert!(same_value(gc[3], fc[3]), "line {}: {g} vs {f}", i + 1);
    }
}
