use detcurve_web::{curvature_json, scenario_json, sublevel_json};
use serde_json::Value;

fn grid(n: usize) -> String {
    let mut s = String::from("x1,x2\n");
    for i in 0..n {
        for j in 0..n {
            s += &format!("{},{}\n", (i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
        }
    }
    s
}

#[test]
fn curvature_on_grid() {
    let v: Value = serde_json::from_str(&curvature_json(&grid(8), 2, 1.0).unwrap()).unwrap();
    assert_eq!(v["atoms"], 64);
    let c = v["constant"].as_f64().unwrap();
    assert!(c.is_finite() && c > 0.0);
    assert_eq!(v["witness_semi_lengths"].as_array().unwrap().len(), 2);
}

#[test]
fn sublevel_rows_per_level() {
    let v: Value = serde_json::from_str(&sublevel_json(&grid(8), 2, &[0.1, 0.4]).unwrap()).unwrap();
    assert!(v["passed"].as_bool().unwrap());
    let names: Vec<&str> = v["measured"].as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"delta_hat[eps=0.1]") && names.contains(&"delta_hat[eps=0.4]"), "{names:?}");
}

#[test]
fn errors_are_reported() {
    assert!(curvature_json("not,a\ncloud\n", 2, 1.0).is_err());
    assert!(curvature_json(&grid(4), 3, 1.0).is_err());
    assert!(scenario_json("missing").is_err());
}

#[test]
fn bundled_scenario_runs() {
    let v: Value = serde_json::from_str(&scenario_json("flat-subspace-negative").unwrap()).unwrap();
    assert!(v["summary"]["ok"].as_bool().unwrap());
}
