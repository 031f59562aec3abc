use collarkit::collar::dz2_norms;
use collarkit::quadrature::QuadratureSpec;
use collarkit::verify::*;
use proptest::prelude::*;

fn plan(grid: Vec<f64>, output: Option<std::path::PathBuf>) -> SweepPlan<'static> {
    let spec = QuadratureSpec::default();
    SweepPlan {
        grid,
        quantities: vec![
            SweepQuantity::new("l1", move |l| Ok(dz2_norms(l, &spec)?.l1)),
            SweepQuantity::new("l2", move |l| Ok(dz2_norms(l, &spec)?.l2)),
        ],
        config_hash: config_hash(b"verify-test"),
        seed: 5,
        output,
    }
}

#[test]
fn empty_plan_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let t = run_sweep(&plan(Vec::new(), Some(path.clone()))).unwrap();
    assert!(t.rows.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("# config_hash="));
    assert_eq!(lines[1], "ell,quantity,value");
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    run_sweep(&plan(DEFAULT_GRID.to_vec(), Some(a.clone()))).unwrap();
    run_sweep(&plan(DEFAULT_GRID.to_vec(), Some(b.clone()))).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn sweep_matches_direct_calls() {
    let t = run_sweep(&plan(DEFAULT_GRID.to_vec(), None)).unwrap();
    let spec = QuadratureSpec::default();
    for (ell, v) in t.series("l2") {
        assert_eq!(v, dz2_norms(ell, &spec).unwrap().l2);
    }
    let f = t.fit("l2").unwrap();
    assert!((f.slope + 1.5).abs() < 0.1, "{f:?}");
    assert_eq!(t.rows.len(), 2 * DEFAULT_GRID.len());
}

#[test]
fn bad_grids_are_rejected() {
    assert!(run_sweep(&plan(vec![0.1, 0.2, 0.15], None)).is_err());
    assert!(run_sweep(&plan(vec![0.1, -0.2], None)).is_err());
}

#[test]
fn config_hash_is_stable() {
    assert_eq!(config_hash(b"abc"), config_hash(b"abc"));
    assert_ne!(config_hash(b"abc"), config_hash(b"abd"));
    assert_eq!(config_hash(b"").len(), 64);
}

proptest! {
    #[test]
    fn slope_is_invariant_under_rescaling(
        p in 0.5f64..3.0,
        k in 1e-3f64..1e3,
        x in 1e-3f64..1e3,
    ) {
        let pts = |c: f64, s: f64| -> Vec<(f64, f64)> {
            (0..6).map(|i| {
                let l = 0.4 * 0.5f64.powi(i);
                (s * l, c * l.powf(p) * (1.0 + 0.01 * (i as f64).sin()))
            }).collect()
        };
        let base = fit_rate(&pts(1.0, 1.0)).unwrap();
        let scaled = fit_rate(&pts(k, x)).unwrap();
        prop_assert!((base.slope - scaled.slope).abs() < 1e-9);
        prop_assert!((base.r_squared - scaled.r_squared).abs() < 1e-9);
    }
}
