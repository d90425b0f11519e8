use qmac_wasm::{dephasing_profile_json, erasure_region_json, phase_flip_region_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn erasure_region_tracks_its_closed_form() {
    let v = parse(&erasure_region_json(2, 5, 2, 300, 1).unwrap());
    assert_eq!(v["axes"], serde_json::json!(["R", "Q"]));
    assert!(v["hausdorff"].as_f64().unwrap() < 0.05);
    assert_eq!(v["sweep"].as_array().unwrap().len(), 5);
}

#[test]
fn phase_flip_region_and_bad_parameter() {
    let v = parse(&phase_flip_region_json(0.1, 3, 2, 300, 1).unwrap());
    assert!(v["hausdorff"].as_f64().unwrap() < 5e-3);
    assert!(phase_flip_region_json(1.5, 3, 1, 10, 1).is_err());
}

#[test]
fn dephasing_profile_extremes() {
    // identical environment states: the channel is noiseless, capacity 1
    let v = parse(&dephasing_profile_json(0.0, 10).unwrap());
    assert!((v["capacity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    // orthogonal states: completely dephasing, objective identically 0
    let v = parse(&dephasing_profile_json(std::f64::consts::FRAC_PI_2, 10).unwrap());
    for pt in v["curve"].as_array().unwrap() {
        assert!(pt[1].as_f64().unwrap().abs() < 1e-9);
    }
    assert_eq!(v["curve"].as_array().unwrap().len(), 11);
}
