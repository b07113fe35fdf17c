use serde_json::Value;
use wlan_bcmp_web::{simulate_json, throughput_vs_rtpd_json, throughput_vs_window_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn rtpd_curve_has_one_point_per_delay() {
    let v = parse(throughput_vs_rtpd_json("{}", &[10.0, 50.0, 100.0], 100).unwrap());
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 3);
    for p in pts {
        let sum = p["n_ap"].as_f64().unwrap() + p["n_sta"].as_f64().unwrap() + p["n_flight"].as_f64().unwrap();
        assert!((sum - 100.0).abs() < 1e-9);
    }
    assert!((v["model"]["ts_ap_us"].as_f64().unwrap() - 2155.636).abs() < 1e-3);
}

#[test]
fn window_curve_approaches_the_bottleneck() {
    let windows: Vec<u32> = (1..=200).collect();
    let v = parse(throughput_vs_window_json("", 100.0, &windows).unwrap());
    let bound = v["model"]["bottleneck_pps"].as_f64().unwrap();
    let th: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| p["throughput_pps"].as_f64().unwrap()).collect();
    assert!(th.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    assert!(th[199] <= bound && th[199] > 0.99 * bound);
}

#[test]
fn config_keys_pass_through() {
    let slow = parse(throughput_vs_rtpd_json(r#"{"rd_mbps": 2}"#, &[10.0], 70).unwrap());
    let fast = parse(throughput_vs_rtpd_json("{}", &[10.0], 70).unwrap());
    let th = |v: &Value| v["points"][0]["throughput_pps"].as_f64().unwrap();
    assert!(th(&slow) < th(&fast));
}

#[test]
fn simulation_summary() {
    let v = parse(simulate_json("{}", 10.0, 1, 4, 30.0, 3).unwrap());
    assert_eq!(v["collisions"].as_u64(), Some(0));
    let t = &v["throughput_pps"];
    let (lo, hi) = (t["ci_low"].as_f64().unwrap(), t["ci_high"].as_f64().unwrap());
    assert!(lo <= t["mean"].as_f64().unwrap() && t["mean"].as_f64().unwrap() <= hi);
    assert!(v["analysis_pps"].as_f64().unwrap() > 0.0);
}

#[test]
fn errors_are_messages() {
    assert!(throughput_vs_rtpd_json("{\"bogus\": 1}", &[10.0], 70).unwrap_err().contains("bogus"));
    assert!(throughput_vs_rtpd_json("{}", &[], 70).is_err());
    assert!(throughput_vs_window_json("{}", 10.0, &[0]).is_err());
    assert!(simulate_json("{}", 10.0, 5, 1, 10.0, 1).is_err());
    assert!(simulate_json("{}", 10.0, 5, 4, 1e6, 1).is_err());
}
