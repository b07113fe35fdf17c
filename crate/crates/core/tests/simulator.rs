use wlan_bcmp::des::{contention_window, run_replication, run_replication_traced, run_sim, SimConfig};
use wlan_bcmp::params::{PhyMacParams, Scenario};

struct Event {
    kind: String,
    node: String,
    counts: [u32; 3],
}

fn trace(scn: &Scenario, seed: u64, horizon: f64) -> (Vec<Event>, String) {
    let mut buf = Vec::new();
    run_replication_traced(scn, seed, SimConfig::with_horizon(horizon), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let events = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            assert_eq!(f.len(), 6, "{l}");
            Event {
                kind: f[1].to_owned(),
                node: f[2].to_owned(),
                counts: [f[3].parse().unwrap(), f[4].parse().unwrap(), f[5].parse().unwrap()],
            }
        })
        .collect();
    (events, text)
}

#[test]
fn packets_are_conserved_at_every_event() {
    for (w, tau) in [(1, 10.0), (7, 0.0), (40, 50.0)] {
        let (events, _) = trace(&Scenario::new(tau, w), 3, 5.0);
        assert!(events.len() > 100);
        for e in &events {
            assert_eq!(e.counts.iter().sum::<u32>(), w, "{} {}", e.kind, e.node);
        }
    }
}

#[test]
fn nothing_is_lost() {
    let w = 12;
    let (events, _) = trace(&Scenario::new(20.0, w), 5, 10.0);
    let count = |kind: &str, node: &str| events.iter().filter(|e| e.kind == kind && e.node == node).count() as i64;
    let (data, acks, arrivals) = (count("success", "ap"), count("success", "sta"), count("arrival", "ap"));
    // Each stage can run at most W packets ahead of the next one.
    assert!((0..=i64::from(w)).contains(&(data - acks)), "{data} data vs {acks} acks");
    assert!((0..=i64::from(w)).contains(&(acks - arrivals)), "{acks} acks vs {arrivals} arrivals");
    assert!(count("collision", "both") > 0);
}

#[test]
fn single_packet_never_collides() {
    for (seed, horizon) in [(1, 50.0), (2, 120.0), (3, 300.0)] {
        let r = run_replication(&Scenario::new(10.0, 1), seed, SimConfig::with_horizon(horizon)).unwrap();
        assert_eq!(r.collisions, 0);
        assert!(r.ap_successes > 0);
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let scn = Scenario::new(30.0, 20);
    assert_eq!(trace(&scn, 9, 3.0).1, trace(&scn, 9, 3.0).1);
    assert_ne!(trace(&scn, 9, 3.0).1, trace(&scn, 10, 3.0).1);
    let cfg = SimConfig::with_horizon(20.0);
    assert_eq!(run_sim(&scn, 4, 77, cfg).unwrap(), run_sim(&scn, 4, 77, cfg).unwrap());
}

#[test]
fn time_averages_are_consistent() {
    let cfg = SimConfig::with_horizon(60.0);
    for (tau_ms, w) in [(10.0, 20), (50.0, 70), (100.0, 100)] {
        let scn = Scenario::new(tau_ms, w);
        let res = run_sim(&scn, 8, 4, cfg).unwrap();
        for est in [res.throughput_pps, res.n_ap, res.n_sta, res.n_flight] {
            assert!(est.ci_low <= est.mean && est.mean <= est.ci_high);
        }
        for r in &res.runs {
            assert!((r.n_ap + r.n_sta + r.n_flight - f64::from(w)).abs() < 1e-9 * f64::from(w));
        }
        // Little's law at the delay stage, replication by replication.
        let ratios: Vec<f64> = res.runs.iter().map(|r| r.n_flight / r.throughput_pps).collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let tau = scn.tau_rtpd();
        assert!((mean - tau).abs() <= 0.01 * tau, "n_flight/throughput {mean} vs {tau}");
    }
}

#[test]
fn contention_window_doubles_to_the_cap() {
    let p = PhyMacParams::default();
    let cws: Vec<u32> = (0..8).map(|s| contention_window(&p, s)).collect();
    assert_eq!(cws, [31, 63, 127, 255, 511, 1023, 1023, 1023]);
    assert_eq!(contention_window(&p, 60), 1023);
}

#[test]
fn saturated_throughput_near_published_simulation() {
    // The published simulation reports 320.34 pkt/s at W = 100, 10 ms.
    let res = run_sim(&Scenario::new(10.0, 100), 5, 1, SimConfig::with_horizon(100.0)).unwrap();
    let dev = (res.throughput_pps.mean - 320.34).abs() / 320.34;
    assert!(dev < 0.02, "{}", res.throughput_pps.mean);
}

#[test]
fn invalid_runs_rejected() {
    let scn = Scenario::new(10.0, 5);
    assert!(run_sim(&scn, 1, 0, SimConfig::default()).is_err());
    assert!(run_replication(&scn, 0, SimConfig { horizon_s: 0.0, warmup_s: 0.0 }).is_err());
    assert!(run_replication(&scn, 0, SimConfig { horizon_s: 10.0, warmup_s: 10.0 }).is_err());
    assert!(run_replication(&Scenario::new(-1.0, 5), 0, SimConfig::default()).is_err());
}
