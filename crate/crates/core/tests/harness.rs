use fml_core::harness::{
    consistency_experiment, genericity_experiment, hmin_verification_run, parse_dataset,
    position_bound_experiment, AdversaryGrid, DatasetFormat, ExperimentReport, HminGrid,
};
use fml_core::{ConcentrationSpec, DiscreteMeasure, Error, ModelSpace, SolverConfig};
use serde_json::json;

fn flat_position(seed: u64) -> ExperimentReport {
    let e = ModelSpace::flat(2).unwrap();
    let spec = ConcentrationSpec::new(e.origin(), 1.0, 0.75).unwrap();
    let grid = AdversaryGrid { trials: 40, ..AdversaryGrid::default() };
    position_bound_experiment(&e, &spec, &grid, &SolverConfig::default(), seed).unwrap()
}

fn small_reports(seed: u64) -> Vec<ExperimentReport> {
    let s = ModelSpace::sphere(2).unwrap();
    let mu = DiscreteMeasure::new(
        s,
        vec![
            s.point(vec![1.0, 0.0, 0.0]).unwrap(),
            s.point(vec![0.0, 1.0, 0.0]).unwrap(),
            s.point(vec![0.0, 0.0, 1.0]).unwrap(),
        ],
        vec![0.5, 0.3, 0.2],
    )
    .unwrap();
    let cfg = SolverConfig::default();
    vec![
        flat_position(seed),
        consistency_experiment(&mu, &[8, 32], 6, seed, &cfg, 0.5).unwrap(),
        genericity_experiment(&s, 5, 12, seed, &cfg.with_multistarts(32)).unwrap(),
        hmin_verification_run(&HminGrid { instances_per_geometry: 6, resolution: 2_000, seed })
            .unwrap()
            .report,
    ]
}

#[test]
fn reports_are_byte_identical_for_equal_seeds() {
    let a: Vec<String> = small_reports(41).iter().map(|r| r.to_json_string()).collect();
    let b: Vec<String> = small_reports(41).iter().map(|r| r.to_json_string()).collect();
    assert_eq!(a, b);
    let c = flat_position(42).to_json_string();
    assert_ne!(a[0], c);
}

#[test]
fn verdicts_recompute_from_records() {
    for report in small_reports(7) {
        let text = report.to_json_string();
        let back = ExperimentReport::from_json_str(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.recompute_verdict().unwrap(), report.verdict.pass, "{}", report.experiment);
        assert!(report.verdict.pass, "{}", report.experiment);
    }
}

#[test]
fn tampered_records_flip_the_verdict() {
    let mut report = flat_position(3);
    assert!(report.recompute_verdict().unwrap());
    report.trials[5]["dist_median_center"] = json!(1.1);
    assert!(!report.recompute_verdict().unwrap());

    let mut report = flat_position(3);
    report.verdict.tolerances.clear();
    assert!(report.recompute_verdict().is_err());
}

#[test]
fn json_dataset_examples() {
    let text = r#"{"schema_version":1,"space":{"curvature":1,"dim":2},
        "points":[[1,0,0],[0,1,0],[0,0,1]]}"#;
    let d = parse_dataset(text, DatasetFormat::Json, None).unwrap();
    assert!(d.measure.weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));

    let nudged = r#"{"schema_version":1,"space":{"curvature":1,"dim":2},
        "points":[[1.0000001,0,0],[0,1,0]]}"#;
    let d = parse_dataset(nudged, DatasetFormat::Json, None).unwrap();
    let p = d.measure.points()[0].coords();
    assert!((p.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-15);

    let far = r#"{"schema_version":1,"space":{"curvature":1,"dim":2},"points":[[1.001,0,0]]}"#;
    assert!(parse_dataset(far, DatasetFormat::Json, None).is_err());

    let light = r#"{"schema_version":1,"space":{"curvature":0,"dim":2},
        "points":[[0,0],[1,0]],"weights":[0.5,0.4]}"#;
    assert!(matches!(parse_dataset(light, DatasetFormat::Json, None), Err(Error::InvalidInput(_))));
}

#[test]
fn csv_dataset_round_trips_through_json() {
    let csv = "# curvature=-1 dim=2\nx0,x1,x2,weight\n0,0,1,0.25\n0.5,0,1.118033988749895,0.75\n";
    let d = parse_dataset(csv, DatasetFormat::Csv, None).unwrap();
    assert_eq!(d.space().curvature(), -1.0);
    let again =
        parse_dataset(&d.to_json().to_string(), DatasetFormat::Json, None).unwrap();
    assert_eq!(again, d);
}

#[test]
fn point_mass_medians_never_move() {
    let s = ModelSpace::sphere(2).unwrap();
    let mu = DiscreteMeasure::point_mass(s, s.point(vec![0.0, 0.6, 0.8]).unwrap()).unwrap();
    let r = consistency_experiment(&mu, &[1, 10, 100], 5, 9, &SolverConfig::default(), 1e-12)
        .unwrap();
    assert!(r.trials.iter().all(|t| t["dist"] == json!(0.0)), "{:?}", r.trials);
    assert!(r.verdict.pass);
}

#[test]
fn majority_atom_is_recovered_by_empirical_medians() {
    for space in [ModelSpace::flat(2).unwrap(), ModelSpace::sphere(2).unwrap()] {
        let o = space.origin();
        let points = vec![
            o.clone(),
            space.polar_point(0.8, &[1.0, 0.0]).unwrap(),
            space.polar_point(1.1, &[-0.3, 1.0]).unwrap(),
        ];
        let mu = DiscreteMeasure::new(space, points, vec![0.6, 0.25, 0.15]).unwrap();
        let r = consistency_experiment(&mu, &[256], 20, 5, &SolverConfig::default(), 1e-9)
            .unwrap();
        for t in &r.trials {
            assert!(t["dist"].as_f64().unwrap() < 1e-10, "{t}");
        }
        assert!(r.verdict.pass);
    }
}

#[test]
fn genericity_requires_a_compact_space() {
    for k in [0.0, -1.0] {
        let space = ModelSpace::new(k, 2).unwrap();
        let err = genericity_experiment(&space, 5, 3, 0, &SolverConfig::default()).unwrap_err();
        assert!(err.to_string().contains("compact"), "{err}");
    }
}

#[test]
fn genericity_records_degenerate_and_counterexample_cases() {
    let s = ModelSpace::sphere(2).unwrap();
    let r = genericity_experiment(&s, 5, 20, 1, &SolverConfig::default().with_multistarts(32)).unwrap();
    assert!(r.verdict.pass);
    let degenerate = r.trials.iter().filter(|t| t["kind"] == "forced_degenerate").count();
    assert_eq!(degenerate, 1);
    let ce = r
        .trials
        .iter()
        .find(|t| t["kind"] == "two_point_counterexample")
        .expect("counterexample recorded");
    assert!(ce["cluster_diameter"].as_f64().unwrap() > 0.1);
    assert_eq!(ce["unique"], false);
}

#[test]
fn all_mass_in_a_small_cap_keeps_medians_inside() {
    let s = ModelSpace::sphere(2).unwrap();
    let spec = ConcentrationSpec::new(s.origin(), 0.7, 1.0).unwrap();
    let grid = AdversaryGrid { trials: 30, ..AdversaryGrid::default() };
    let r = position_bound_experiment(&s, &spec, &grid, &SolverConfig::default(), 4).unwrap();
    assert!(r.verdict.pass);
    assert!(r.summary["max_dist_median_center"].as_f64().unwrap() <= 0.7 + 1e-6);
}

#[test]
fn position_experiment_rejects_a_failed_assumption() {
    let s = ModelSpace::sphere(2).unwrap();
    let spec = ConcentrationSpec::new(s.origin(), 1.0, 0.6).unwrap();
    let grid = AdversaryGrid { trials: 3, ..AdversaryGrid::default() };
    assert!(matches!(
        position_bound_experiment(&s, &spec, &grid, &SolverConfig::default(), 0),
        Err(Error::InvalidInput(_))
    ));
}
