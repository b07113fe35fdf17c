//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes a JSON scenario document (any subset of the CLI
//! config keys, `{}` for the defaults) and returns a JSON string. The
//! `*_json` functions hold the logic and are what the native tests call;
//! the exported wrappers only turn errors into JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wlan_bcmp::des::{run_sim, SimConfig};
use wlan_bcmp::mac::DcfServiceModel;
use wlan_bcmp::params::ScenarioConfig;
use wlan_bcmp::{analyze, Scenario};

/// Longest simulation the page will run, in simulated seconds per
/// replication. Keeps the tab responsive on a single thread.
pub const MAX_SIM_SECONDS: f64 = 120.0;
pub const MAX_REPLICATIONS: u32 = 20;

#[derive(Debug, Serialize)]
struct Point {
    rtpd_ms: f64,
    window: u32,
    throughput_pps: f64,
    n_ap: f64,
    n_sta: f64,
    n_flight: f64,
}

#[derive(Debug, Serialize)]
struct ModelSummary {
    ts_ap_us: f64,
    ts_sta_us: f64,
    t_c_us: f64,
    beta2: f64,
    s_ap_us: f64,
    s_sta_us: f64,
    /// `1 / max(s_ap, s_sta)`: the large-window ceiling.
    bottleneck_pps: f64,
}

impl From<&DcfServiceModel> for ModelSummary {
    fn from(m: &DcfServiceModel) -> Self {
        Self {
            ts_ap_us: m.ts_ap * 1e6,
            ts_sta_us: m.ts_sta * 1e6,
            t_c_us: m.t_c * 1e6,
            beta2: m.beta2,
            s_ap_us: m.s_ap * 1e6,
            s_sta_us: m.s_sta * 1e6,
            bottleneck_pps: 1.0 / m.s_ap.max(m.s_sta),
        }
    }
}

#[derive(Debug, Serialize)]
struct Curve {
    model: ModelSummary,
    points: Vec<Point>,
}

#[derive(Debug, Serialize)]
struct Interval {
    mean: f64,
    ci_low: f64,
    ci_high: f64,
}

#[derive(Debug, Serialize)]
struct SimSummary {
    rtpd_ms: f64,
    window: u32,
    replications: u32,
    sim_time_s: f64,
    throughput_pps: Interval,
    n_ap: Interval,
    n_sta: Interval,
    n_flight: Interval,
    collisions: u64,
    analysis_pps: f64,
}

fn base_scenario(config: &str) -> Result<Scenario, String> {
    let text = if config.trim().is_empty() { "{}" } else { config };
    let mut cfg = ScenarioConfig::parse(text).map_err(|e| e.to_string())?;
    cfg.tau_rtpd_ms.get_or_insert(0.0);
    cfg.into_scenario().map_err(|e| e.to_string())
}

fn point(scn: &Scenario) -> Result<(Point, DcfServiceModel), String> {
    let a = analyze(scn).map_err(|e| e.to_string())?;
    let s = &a.solution;
    let p = Point {
        rtpd_ms: scn.tau_rtpd_ms,
        window: scn.window,
        throughput_pps: s.t_h,
        n_ap: s.n_ap,
        n_sta: s.n_sta,
        n_flight: s.n_rtpd,
    };
    Ok((p, a.model))
}

fn curve(base: &Scenario, grid: impl Iterator<Item = (f64, u32)>) -> Result<String, String> {
    let mut points = Vec::new();
    let mut model = None;
    for (rtpd_ms, window) in grid {
        let (p, m) = point(&Scenario { tau_rtpd_ms: rtpd_ms, window, ..*base })?;
        points.push(p);
        model.get_or_insert(m);
    }
    let model = model.ok_or("empty grid")?;
    serde_json::to_string(&Curve { model: (&model).into(), points }).map_err(|e| e.to_string())
}

pub fn throughput_vs_rtpd_json(config: &str, rtpd_ms: &[f64], window: u32) -> Result<String, String> {
    let base = base_scenario(config)?;
    curve(&base, rtpd_ms.iter().map(|&t| (t, window)))
}

pub fn throughput_vs_window_json(config: &str, rtpd_ms: f64, windows: &[u32]) -> Result<String, String> {
    let base = base_scenario(config)?;
    curve(&base, windows.iter().map(|&w| (rtpd_ms, w)))
}

pub fn simulate_json(
    config: &str,
    rtpd_ms: f64,
    window: u32,
    replications: u32,
    sim_time_s: f64,
    seed: u64,
) -> Result<String, String> {
    if !(sim_time_s > 0.0 && sim_time_s <= MAX_SIM_SECONDS) {
        return Err(format!("simulated time must lie in (0, {MAX_SIM_SECONDS}] s"));
    }
    if !(2..=MAX_REPLICATIONS).contains(&replications) {
        return Err(format!("replications must lie in 2..={MAX_REPLICATIONS}"));
    }
    let scn = Scenario { tau_rtpd_ms: rtpd_ms, window, ..base_scenario(config)? };
    let (analysis, _) = point(&scn)?;
    let r = run_sim(&scn, replications, seed, SimConfig::with_horizon(sim_time_s)).map_err(|e| e.to_string())?;
    let iv = |e: wlan_bcmp::des::Estimate| Interval { mean: e.mean, ci_low: e.ci_low, ci_high: e.ci_high };
    let out = SimSummary {
        rtpd_ms,
        window,
        replications,
        sim_time_s,
        throughput_pps: iv(r.throughput_pps),
        n_ap: iv(r.n_ap),
        n_sta: iv(r.n_sta),
        n_flight: iv(r.n_flight),
        collisions: r.collisions,
        analysis_pps: analysis.throughput_pps,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Analytical throughput and occupancies over a list of delays at one window.
#[wasm_bindgen]
pub fn throughput_vs_rtpd(config: &str, rtpd_ms: Vec<f64>, window: u32) -> Result<String, JsError> {
    throughput_vs_rtpd_json(config, &rtpd_ms, window).map_err(|e| JsError::new(&e))
}

/// Analytical throughput and occupancies over a list of windows at one delay.
#[wasm_bindgen]
pub fn throughput_vs_window(config: &str, rtpd_ms: f64, windows: Vec<u32>) -> Result<String, JsError> {
    throughput_vs_window_json(config, rtpd_ms, &windows).map_err(|e| JsError::new(&e))
}

/// Short simulation at one grid point, with the analytical value alongside.
#[wasm_bindgen]
pub fn simulate(
    config: &str,
    rtpd_ms: f64,
    window: u32,
    replications: u32,
    sim_time_s: f64,
    seed: u64,
) -> Result<String, JsError> {
    simulate_json(config, rtpd_ms, window, replications, sim_time_s, seed).map_err(|e| JsError::new(&e))
}
