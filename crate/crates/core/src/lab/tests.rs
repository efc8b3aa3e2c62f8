use super::*;
use crate::curvature::{EllipsoidFamily, FamilyMode, FamilySpec};
use crate::functionals::constants::{big_c_k, c_k};
use crate::functionals::{rwt_probe, EvalOptions, SetSampler, SetShape};
use crate::measure::{GeneratorSpec, WeightedPointMeasure};

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("detcurve-lab-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small_config() -> ScenarioConfig {
    ScenarioConfig::from_json(
        r#"{
            "name": "small",
            "measure": {"generator": {"family": "cube_lebesgue", "dim": 2, "count": 64}},
            "k": 2,
            "alpha": 1.0,
            "gamma": 0.5,
            "family": {"random_frames": 4},
            "checks": [
                {"check": "mainst"},
                {"check": "maincor"},
                {"check": "rwt", "trials": 12},
                {"check": "gaussian", "forms": 10},
                {"check": "layer_cake", "forms": 5},
                {"check": "slab"},
                {"check": "maximal", "frames": 2},
                {"check": "cauchy_schwarz", "families": 8}
            ]
        }"#,
    )
    .unwrap()
}

#[test]
fn recursion_constants_small_k() {
    assert_eq!([c_k(1), c_k(2), c_k(3)], [1.0, 0.25, 1.0 / 32.0]);
    assert_eq!([big_c_k(1), big_c_k(2), big_c_k(3)], [1.0, 8.0, 96.0]);
}

#[test]
fn mainst_k1_exact_case() {
    // Distinct radii: I_1^delta is the mass of atoms with 0 < |y| < delta.
    let mu = WeightedPointMeasure::new(
        vec![vec![0.1, 0.0], vec![0.0, -0.3], vec![0.5, 0.5], vec![-0.9, 0.2], vec![1.5, 0.0]],
        vec![0.1, 0.2, 0.3, 0.25, 0.15],
    )
    .unwrap();
    let family = FamilySpec { random_frames: 4, floor: Some(1e-3), ..Default::default() }.build(&mu).unwrap();
    let s = verify_mainst(&mu, 1, &[0.1, 0.2, 0.4, 0.9], &family, 10, 1.0, &EvalOptions::default()).unwrap();
    assert!(s.passed(), "{:?}", s.checks);
    assert_eq!(s.checks.len(), 4);
}

#[test]
fn mainst_passes_on_small_cube() {
    let mu = GeneratorSpec::cube(2, 144, 0).generate().unwrap();
    let family = FamilySpec { random_frames: 8, ..Default::default() }.build(&mu).unwrap();
    let s = verify_mainst(&mu, 2, &[0.1, 0.2, 0.4], &family, 10, 1.0, &EvalOptions::default()).unwrap();
    assert!(s.passed(), "{:?}", s.checks);
    assert_eq!(s.checks[0].name, "c_k_recursion");
}

fn two_atoms(a: [f64; 2], b: [f64; 2]) -> WeightedPointMeasure {
    WeightedPointMeasure::new(vec![a.to_vec(), b.to_vec()], vec![0.4, 0.6]).unwrap()
}

#[test]
fn maincor_two_atom_oracle() {
    let mu1 = two_atoms([1.0, 0.0], [0.0, 2.0]);
    let mu2 = two_atoms([0.5, 0.5], [-1.0, 0.25]);
    let fam = EllipsoidFamily::new(FamilyMode::ScaleFlooredSearch, vec![nalgebra::DMatrix::identity(2, 2)], -6, 2, 1.0 / 64.0).unwrap();
    let families = [fam.clone(), fam];
    let s = verify_maincor(&[&mu1, &mu2], &[0.5, 1.0], &families, 0, 1.0, &EvalOptions::default()).unwrap();
    for eps in [0.5, 1.0] {
        let delta = s.measured.iter().find(|m| m.name == format!("corollary_delta[eps={eps}]")).unwrap().value;
        let got = s.measured.iter().find(|m| m.name == format!("corollary_sublevel[eps={eps}]")).unwrap().value;
        let mut oracle = 0.0;
        for (p, wp) in mu1.points().zip(mu1.weights()) {
            for (q, wq) in mu2.points().zip(mu2.weights()) {
                let det = (p[0] * q[1] - p[1] * q[0]).abs();
                if det > 0.0 && det < delta {
                    oracle += wp * wq;
                }
            }
        }
        assert_eq!(got, oracle);
    }
}

#[test]
fn maincor_identical_measures_and_dilation() {
    let mu = GeneratorSpec::cube(2, 100, 0).generate().unwrap();
    let spec = FamilySpec { random_frames: 4, ..Default::default() };
    let fam = spec.build(&mu).unwrap();
    let opts = EvalOptions::default();
    let eps = [0.1, 0.2, 0.4];
    let cor = verify_maincor(&[&mu, &mu], &eps, &[fam.clone(), fam.clone()], 10, 1.0, &opts).unwrap();
    let st = verify_mainst(&mu, 2, &eps, &fam, 10, 1.0, &opts).unwrap();
    assert!(cor.passed() && st.passed());
    // Same tuples, same delta: the corollary value equals the theorem value.
    for e in eps {
        let a = cor.measured.iter().find(|m| m.name == format!("corollary_sublevel[eps={e}]")).unwrap().value;
        let b = st.measured.iter().find(|m| m.name == format!("sublevel[eps={e}]")).unwrap().value;
        assert_eq!(a, b);
    }

    let big = mu.dilate(2.0).unwrap();
    let fam_big = spec.build(&big).unwrap();
    let cor_big = verify_maincor(&[&big, &big], &eps, &[fam_big.clone(), fam_big], 10, 1.0, &opts).unwrap();
    for (a, b) in cor.measured.iter().zip(&cor_big.measured) {
        if a.name.starts_with("corollary_delta") {
            assert!((b.value - 4.0 * a.value).abs() <= 1e-9 * b.value, "{} {} {}", a.name, a.value, b.value);
        } else {
            assert_eq!(a.value, b.value, "{}", a.name);
        }
    }
    let outcome = |s: &Section| s.checks.iter().map(|c| c.passed).collect::<Vec<_>>();
    assert_eq!(outcome(&cor), outcome(&cor_big));
}

#[test]
fn rwt_full_support_k1_on_the_circle() {
    // |y| = 1 on the circle, so T~ of the full support is 1 and so is every ratio.
    let mu = GeneratorSpec::sphere(2, 50, 2).generate().unwrap();
    let sampler = SetSampler { shapes: vec![SetShape::FullSupport] };
    let p = rwt_probe(&mu, 1, 0.5, 1.0, &sampler, 3, 0, &EvalOptions::default()).unwrap();
    for r in p.ratios {
        assert!((r - 1.0).abs() < 1e-12);
    }
}

#[test]
fn small_scenario_runs_clean() {
    let cfg = small_config();
    let report = run_scenario(&cfg).unwrap();
    assert!(report.summary.ok, "{:#?}", report.checks);
    assert!(report.timings.is_none());
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    for n in ["sublevel[eps=0.1]", "corollary[eps=0.4]", "rwt_bound", "gaussian_lower_bound", "slab_implication", "maximal_inequality", "cauchy_schwarz"] {
        assert!(names.contains(&n), "missing {n}");
    }
    assert!(report.measured_value("curvature_constant").unwrap() > 0.0);
}

#[test]
fn expected_failures_are_tagged() {
    let mut cfg = small_config();
    cfg.checks = vec![CheckSpec::new(CheckKind::Growth { counts: vec![16, 64], min_growth: 1e9, alpha: 1.0 }).expecting_failure(&["*"])];
    let report = run_scenario(&cfg).unwrap();
    assert_eq!(report.summary.expected_failures, 1);
    assert!(report.summary.ok);

    cfg.checks = vec![CheckSpec::new(CheckKind::Growth { counts: vec![16, 64], min_growth: 0.0, alpha: 1.0 }).expecting_failure(&["*"])];
    let report = run_scenario(&cfg).unwrap();
    assert_eq!(report.summary.unexpected_passes, 1);

    cfg.checks = vec![CheckSpec::new(CheckKind::Growth { counts: vec![16, 64], min_growth: 1e9, alpha: 1.0 })];
    assert!(!run_scenario(&cfg).unwrap().summary.ok);
}

#[test]
fn timings_only_when_requested() {
    let mut cfg = small_config();
    cfg.checks.truncate(1);
    cfg.timings = true;
    let report = run_scenario(&cfg).unwrap();
    assert_eq!(report.timings.unwrap().len(), 2);
}

#[test]
fn config_validation() {
    let bad = |json: &str| ScenarioConfig::from_json(json).is_err();
    let m = r#""measure": {"generator": {"family": "cube_lebesgue", "dim": 2, "count": 16}}"#;
    assert!(bad(&format!(r#"{{"name": "x", {m}, "k": 2, "alpha": 1.0, "gamma": 1.0, "checks": [{{"check": "rwt"}}]}}"#)));
    assert!(bad(&format!(r#"{{"name": "x", {m}, "k": 2, "alpha": 1.0, "eps_grid": [0.4, 0.1]}}"#)));
    assert!(bad(&format!(r#"{{"name": "x", {m}, "k": 2, "alpha": 1.0, "eps_grid": [0.0]}}"#)));
    assert!(bad(&format!(r#"{{"name": "x", {m}, "k": 0, "alpha": 1.0}}"#)));
    assert!(bad(&format!(r#"{{"name": "x", {m}, "k": 2, "alpha": 1.0, "unknown": 3}}"#)));
    let no_source = ScenarioConfig::from_json(r#"{"name": "x", "measure": {}, "k": 1, "alpha": 1.0}"#).unwrap();
    assert!(matches!(run_scenario(&no_source), Err(crate::Error::InvalidConfig(_))));
    let ok = ScenarioConfig::from_json(&format!(r#"{{"name": "x", {m}, "k": 2, "alpha": 1.0, "eval": {{"budget": 5}}}}"#)).unwrap();
    assert_eq!(ok.eps_grid, vec![0.1, 0.2, 0.4]);
    assert_eq!(ok.eval.budget, 5);
    assert!(run_scenario(&ScenarioConfig { k: 3, ..ok }).is_err());
}

#[test]
fn bundled_configs_validate_and_round_trip() {
    for name in BUNDLED {
        let cfg = bundled(name).unwrap();
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&json).unwrap(), cfg);
    }
    assert!(bundled("nope").is_none());
}

#[test]
fn empty_report_csv_is_header_only() {
    let path = tmp("empty.csv");
    emit_report(&ScenarioReport::empty("e"), ReportFormat::Csv, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("scenario,section,name,direction,lhs,rhs"));
}

#[test]
fn reports_round_trip_and_flatten() {
    let mut cfg = small_config();
    cfg.checks.truncate(4);
    let mut report = run_scenario(&cfg).unwrap();
    report.measured.push(Measured { name: "unbounded".into(), value: f64::INFINITY });
    let json_path = tmp("r.json");
    emit_report(&report, ReportFormat::Json, &json_path).unwrap();
    let back = ScenarioReport::from_json(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(back, report);
    assert!(std::fs::read_to_string(&json_path).unwrap().contains("\"inf\""));

    let csv_path = tmp("r.csv");
    emit_report(&report, ReportFormat::Csv, &csv_path).unwrap();
    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rd.records().count(), report.checks.len());
}

#[test]
fn check_record_margins() {
    let le = CheckRecord::compare("s", "n", Direction::Le, 1.0, 4.0, 0.5, 0.0);
    assert!(le.passed && le.margin == 2.0);
    let ge = CheckRecord::compare("s", "n", Direction::Ge, 1.0, 4.0, 1.0, 0.0);
    assert!(!ge.passed && ge.margin == 0.25);
    let eq = CheckRecord::compare("s", "n", Direction::Eq, 1.0, 1.0 + 1e-14, 1.0, 1e-12);
    assert!(eq.passed && eq.margin > 1.0);
    let zero = CheckRecord::compare("s", "n", Direction::Le, 0.0, 0.0, 1.0, 0.0);
    assert!(zero.passed && zero.margin == 1.0);
    let agg = CheckRecord::aggregate("s", "all", vec![le.clone(), ge.clone()]).unwrap();
    assert_eq!((agg.instances, agg.failures, agg.passed, agg.margin), (2, 1, false, 0.25));
    assert!(CheckRecord::aggregate("s", "none", vec![]).is_none());
}

#[cfg(feature = "parallel")]
#[test]
fn reports_do_not_depend_on_thread_count() {
    let cfg = small_config();
    let one = with_threads(1, || run_scenario(&cfg).unwrap().to_json().unwrap()).unwrap();
    let four = with_threads(4, || run_scenario(&cfg).unwrap().to_json().unwrap()).unwrap();
    assert_eq!(one, four);
}
