use gpclab_web::{de_curve, optimize, parse_mixture, threshold_curve};
use serde_json::Value;

#[test]
fn mixture_strings() {
    let d = parse_mixture("4:1, 5:3").unwrap();
    assert_eq!(d.weight(4), 0.25);
    assert_eq!(d.weight(5), 0.75);
    assert!(parse_mixture("4").is_err());
    assert!(parse_mixture("0:1").is_err());
    assert!(parse_mixture("4:0").is_err());
    assert!(parse_mixture("99:1").is_err());
}

#[test]
fn de_curve_decodes_below_threshold() {
    let v: Value = serde_json::from_str(&de_curve("4:1", 6.5, 200).unwrap()).unwrap();
    assert_eq!(v["verdict"], "converged_to_zero");
    assert_eq!(v["x"][0], 1.0);
    let c_star = v["c_star"].as_f64().unwrap();
    assert!((c_star - 6.7992).abs() < 1e-3, "{c_star}");

    let v: Value = serde_json::from_str(&de_curve("4:1", 7.0, 200).unwrap()).unwrap();
    assert_eq!(v["verdict"], "stuck_positive");
    assert!(de_curve("x", 1.0, 10).is_err());
}

#[test]
fn thresholds_sit_below_the_bound() {
    let v: Value = serde_json::from_str(&threshold_curve(5).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let mut prev = 0.0;
    for r in rows {
        let (c, b) = (r["c_star"].as_f64().unwrap(), r["bound"].as_f64().unwrap());
        assert!(c < b && c > prev);
        prev = c;
    }
}

#[test]
fn optimizer_output() {
    let v: Value = serde_json::from_str(&optimize(8.0, 200, 12).unwrap()).unwrap();
    assert_eq!(v["feasible"], true);
    let w: f64 = v["tau"].as_array().unwrap().iter().map(|p| p[1].as_f64().unwrap()).sum();
    assert!((w - 1.0).abs() < 1e-9);
    assert!(v["t_bar"].as_f64().unwrap() >= 4.0);

    let v: Value = serde_json::from_str(&optimize(30.0, 200, 5).unwrap()).unwrap();
    assert_eq!(v["feasible"], false);
    assert!(optimize(-1.0, 200, 5).is_err());
}
