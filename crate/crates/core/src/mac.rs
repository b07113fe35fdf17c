//! DCF service-time analysis for one AP and one STA.
//!
//! The AP sends TCP data with RTS/CTS, the STA answers each segment with a
//! TCP ACK sent by basic access. Both nodes are treated as saturated when
//! computing the attempt probability.

use crate::error::{Error, Result};
use crate::params::{BackoffMode, CollisionMode, Modes, PhyMacParams, SuccessModel};

/// Default tolerance for the attempt-probability fixed point.
pub const BETA_TOL: f64 = 1e-9;
/// Default geometric tail mass at which the service-time series stops.
pub const TAIL_EPS: f64 = 1e-12;

/// Channel time of one successful RTS / CTS / DATA / ACK exchange from the AP.
pub fn ts_ap(p: &PhyMacParams) -> f64 {
    let data = p.mac_header_bytes + p.ip_header_bytes + p.tcp_header_bytes + p.tcp_payload_bytes;
    p.plcp_overhead()
        + p.at_control_rate(p.rts_bytes)
        + p.sifs()
        + p.plcp_overhead()
        + p.at_control_rate(p.cts_bytes)
        + p.sifs()
        + p.plcp_overhead()
        + p.at_data_rate(data)
        + p.sifs()
        + p.plcp_overhead()
        + p.at_control_rate(p.mac_ack_bytes)
        + p.difs()
}

/// Channel time of one successful basic-access TCP-ACK transmission from the STA.
pub fn ts_sta(p: &PhyMacParams) -> f64 {
    let frame = p.mac_header_bytes + p.ip_header_bytes + p.tcp_header_bytes + p.tcp_ack_bytes;
    p.plcp_overhead()
        + p.at_data_rate(frame)
        + p.sifs()
        + p.plcp_overhead()
        + p.at_control_rate(p.mac_ack_bytes)
        + p.difs()
}

/// Channel time lost to one AP/STA collision, EIFS deferral included.
pub fn t_collision(p: &PhyMacParams, mode: CollisionMode) -> f64 {
    let mut bytes = p.mac_header_bytes + p.ip_header_bytes + p.tcp_ack_bytes;
    if mode == CollisionMode::PaperLiteral {
        bytes += p.tcp_payload_bytes;
    }
    p.plcp_overhead() + p.at_data_rate(bytes) + p.eifs()
}

fn backoff_unchecked(i: u32, p: &PhyMacParams, mode: BackoffMode) -> f64 {
    let cw_min = f64::from(p.cw_min);
    let cw_max = f64::from(p.cw_max);
    // powi saturates to +inf for huge exponents, which min() then caps.
    let exp = i32::try_from(i).unwrap_or(i32::MAX);
    match mode {
        BackoffMode::Paper => ((2f64.powi(exp) * cw_min).min(cw_max) + 1.0) / 2.0,
        BackoffMode::Standard => {
            (2f64.powi(exp - 1) * (cw_min + 1.0)).min(cw_max + 1.0) / 2.0 - 0.5
        }
    }
}

/// Mean backoff, in slots, drawn before attempt `i` (1-based).
pub fn mean_backoff(i: u32, p: &PhyMacParams, mode: BackoffMode) -> Result<f64> {
    if i < 1 {
        return Err(Error::invalid("attempt", "attempt index starts at 1"));
    }
    Ok(backoff_unchecked(i, p, mode))
}

/// Per-attempt backoff means up to the point where the window is capped.
///
/// `head[j]` is the mean before attempt `j + 1`; every attempt past
/// `head.len()` uses `cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackoffSchedule {
    pub head: Vec<f64>,
    pub cap: f64,
}

impl BackoffSchedule {
    pub fn new(p: &PhyMacParams, mode: BackoffMode) -> Self {
        let cap = backoff_unchecked(u32::MAX, p, mode);
        let mut head = Vec::new();
        let mut i = 1;
        loop {
            let eb = backoff_unchecked(i, p, mode);
            if eb >= cap {
                break;
            }
            head.push(eb);
            i += 1;
        }
        Self { head, cap }
    }

    /// Mean backoff before attempt `i` (1-based).
    pub fn at(&self, i: usize) -> f64 {
        debug_assert!(i >= 1);
        self.head.get(i - 1).copied().unwrap_or(self.cap)
    }

    /// Geometric average of the schedule, `(1-γ)·Σ EB^i γ^(i-1)`. This is
    /// the mean backoff per attempt when each attempt collides with
    /// probability `γ`. Continuous on `[0, 1]` with value `cap` at 1.
    pub fn weighted_mean(&self, gamma: f64) -> f64 {
        let mut acc = 0.0;
        let mut pow = 1.0;
        for eb in &self.head {
            acc += eb * pow;
            pow *= gamma;
        }
        (1.0 - gamma) * acc + self.cap * pow
    }
}

/// The attempt-probability map `G(γ) = 1 / [(1-γ)·Σ EB^i γ^(i-1)]`:
/// mean attempts per success over mean backoff slots per success.
pub fn attempt_map(schedule: &BackoffSchedule, gamma: f64) -> f64 {
    1.0 / schedule.weighted_mean(gamma)
}

/// Per-slot attempt probability of either saturated node, the fixed point
/// `β = G(β)` in `(0, 1]`, found by bisection.
///
/// `β·S(β)` is strictly increasing because `S` is a weighted average of a
/// nondecreasing schedule, so the root is unique when it exists.
pub fn solve_beta2(p: &PhyMacParams, mode: BackoffMode, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tol", "tolerance must be positive"));
    }
    let schedule = BackoffSchedule::new(p, mode);
    let f = |b: f64| b * schedule.weighted_mean(b) - 1.0;
    let f_hi = f(1.0);
    if f_hi.is_nan() || f_hi < 0.0 {
        return Err(Error::NoConvergence(format!(
            "no attempt probability in (0, 1]: mean backoff {} slots at the cap",
            schedule.cap
        )));
    }
    if f_hi == 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = if f(hi).abs() < f(lo).abs() { hi } else { lo };
    let residual = (beta - attempt_map(&schedule, beta)).abs();
    if residual < tol {
        Ok(beta)
    } else {
        Err(Error::NoConvergence(format!("residual {residual:e} above {tol:e}")))
    }
}

/// Probability that the AP wins the contention at its first attempt.
pub fn alpha2(beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid("beta", format!("{beta} is not a probability")));
    }
    Ok(beta * (1.0 - beta))
}

/// Success probability per attempt under the chosen model.
pub fn success_probability(beta: f64, model: SuccessModel) -> Result<f64> {
    match model {
        SuccessModel::PerAttempt => {
            if !(0.0..=1.0).contains(&beta) {
                return Err(Error::invalid("beta", format!("{beta} is not a probability")));
            }
            Ok(1.0 - beta)
        }
        SuccessModel::PaperLiteral => alpha2(beta),
    }
}

/// Mean time to deliver a frame that collided exactly `k` times before
/// succeeding: the backoffs of all `k + 1` attempts, `k` collisions and the
/// final success.
pub fn service_time_after_k(k: u32, t_success: f64, p: &PhyMacParams, modes: Modes) -> f64 {
    let schedule = BackoffSchedule::new(p, modes.backoff);
    let slots: f64 = (1..=k as usize + 1).map(|i| schedule.at(i)).sum();
    p.slot() * slots + f64::from(k) * t_collision(p, modes.collision) + t_success
}

/// Result of the truncated mean-service-time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanServiceTime {
    /// Truncated sum, seconds.
    pub mean: f64,
    /// Upper bound on the omitted tail, seconds.
    pub remainder_bound: f64,
    /// Number of series terms summed.
    pub terms: usize,
}

/// Mean service time `Σ_k s^k (1-a)^k a` with collision count geometric in
/// the success probability `a`.
///
/// The series stops at the smallest `K` whose tail mass `(1-a)^(K+1)` is
/// below `tail_eps`. Past `K` every term grows at most linearly, by one
/// capped backoff and one collision per step, which bounds the remainder
/// by `q^(K+1)·(s^K + c/(1-q))`.
pub fn mean_service_time(
    t_success: f64,
    success_prob: f64,
    p: &PhyMacParams,
    modes: Modes,
    tail_eps: f64,
) -> Result<MeanServiceTime> {
    if !(success_prob > 0.0 && success_prob <= 1.0) {
        return Err(Error::invalid(
            "alpha2",
            format!("success probability {success_prob} gives a divergent mean"),
        ));
    }
    if tail_eps.is_nan() || tail_eps <= 0.0 {
        return Err(Error::invalid("tail_eps", "must be positive"));
    }
    let schedule = BackoffSchedule::new(p, modes.backoff);
    let slot = p.slot();
    let tc = t_collision(p, modes.collision);
    let q = 1.0 - success_prob;

    let mut mean = 0.0;
    let mut backoff_slots = 0.0;
    let mut weight = success_prob; // q^k·a
    let mut tail = q; // q^(k+1)
    let mut k = 0usize;
    let s_k = loop {
        backoff_slots += schedule.at(k + 1);
        let s_k = slot * backoff_slots + k as f64 * tc + t_success;
        mean += s_k * weight;
        if tail < tail_eps {
            break s_k;
        }
        weight *= q;
        tail *= q;
        k += 1;
    };
    let step = slot * schedule.cap + tc;
    let remainder_bound = if q == 0.0 { 0.0 } else { tail * (s_k + step / (1.0 - q)) };
    Ok(MeanServiceTime { mean, remainder_bound, terms: k + 1 })
}

/// Derived DCF quantities for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfServiceModel {
    pub ts_ap: f64,
    pub ts_sta: f64,
    pub t_c: f64,
    pub beta2: f64,
    /// `β₂(1-β₂)`.
    pub alpha2: f64,
    /// Per-attempt success probability actually used in the service-time series.
    pub success_prob: f64,
    pub s_ap: f64,
    pub s_sta: f64,
}

pub fn build_service_model(p: &PhyMacParams, modes: Modes) -> Result<DcfServiceModel> {
    let violations = p.validate();
    if !violations.is_empty() {
        return Err(Error::Violations(violations));
    }
    let ts_ap = ts_ap(p);
    let ts_sta = ts_sta(p);
    let beta2 = solve_beta2(p, modes.backoff, BETA_TOL)?;
    let alpha2 = alpha2(beta2)?;
    let success_prob = success_probability(beta2, modes.success)?;
    let s_ap = mean_service_time(ts_ap, success_prob, p, modes, TAIL_EPS)?.mean;
    let s_sta = mean_service_time(ts_sta, success_prob, p, modes, TAIL_EPS)?.mean;
    Ok(DcfServiceModel {
        ts_ap,
        ts_sta,
        t_c: t_collision(p, modes.collision),
        beta2,
        alpha2,
        success_prob,
        s_ap,
        s_sta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const US: f64 = 1e-6;

    fn zero_params() -> PhyMacParams {
        PhyMacParams {
            preamble_us: 0.0,
            phy_header_us: 0.0,
            mac_header_bytes: 0.0,
            rts_bytes: 0.0,
            cts_bytes: 0.0,
            mac_ack_bytes: 0.0,
            ip_header_bytes: 0.0,
            tcp_header_bytes: 0.0,
            tcp_ack_bytes: 0.0,
            tcp_payload_bytes: 0.0,
            difs_us: 0.0,
            sifs_us: 0.0,
            eifs_us: 0.0,
            ..Default::default()
        }
    }

    fn cw(cw_min: u32, cw_max: u32) -> PhyMacParams {
        PhyMacParams { cw_min, cw_max, ..Default::default() }
    }

    #[test]
    fn success_times_of_empty_frames() {
        let z = zero_params();
        assert_eq!(ts_ap(&z), 0.0);
        assert_eq!(ts_sta(&z), 0.0);
        assert_eq!(t_collision(&z, CollisionMode::PaperLiteral), 0.0);
        assert_eq!(t_collision(&z, CollisionMode::AckOnly), 0.0);
    }

    #[test]
    fn doubling_data_rate_halves_data_term() {
        let p = PhyMacParams::default();
        let fast = PhyMacParams { data_rate_mbps: 22.0, ..p };
        let expected = ts_ap(&p) - (1534.0 * 8.0 / 11e6) / 2.0;
        assert!((ts_ap(&fast) - expected).abs() < 1e-15);
    }

    #[test]
    fn sta_exchange_is_ap_exchange_without_handshake() {
        let p = PhyMacParams { tcp_ack_bytes: 1460.0, ..Default::default() };
        let rts_leg = p.plcp_overhead() + p.at_control_rate(p.rts_bytes) + p.sifs();
        let cts_leg = p.plcp_overhead() + p.at_control_rate(p.cts_bytes) + p.sifs();
        assert!((ts_sta(&p) - (ts_ap(&p) - rts_leg - cts_leg)).abs() < 1e-15);
    }

    #[test]
    fn collision_modes_differ_by_payload_airtime() {
        let p = PhyMacParams::default();
        let d = t_collision(&p, CollisionMode::PaperLiteral) - t_collision(&p, CollisionMode::AckOnly);
        assert!((d - 1460.0 * 8.0 / 11e6).abs() < 1e-15);
    }

    #[test]
    fn backoff_means() {
        let p = PhyMacParams::default();
        assert_eq!(mean_backoff(1, &p, BackoffMode::Paper).unwrap(), 31.5);
        assert_eq!(mean_backoff(2, &p, BackoffMode::Paper).unwrap(), 62.5);
        assert_eq!(mean_backoff(6, &p, BackoffMode::Paper).unwrap(), 512.0);
        assert_eq!(mean_backoff(60, &p, BackoffMode::Paper).unwrap(), 512.0);
        assert_eq!(mean_backoff(1, &p, BackoffMode::Standard).unwrap(), 15.5);
        assert_eq!(mean_backoff(6, &p, BackoffMode::Standard).unwrap(), 511.5);
        assert!(mean_backoff(0, &p, BackoffMode::Paper).is_err());
    }

    #[test]
    fn schedule_matches_pointwise_means() {
        let p = PhyMacParams::default();
        for mode in [BackoffMode::Paper, BackoffMode::Standard] {
            let s = BackoffSchedule::new(&p, mode);
            for i in 1..20 {
                assert_eq!(s.at(i as usize), mean_backoff(i, &p, mode).unwrap());
            }
        }
    }

    #[test]
    fn beta_constant_window() {
        let b = solve_beta2(&cw(31, 31), BackoffMode::Paper, 1e-12).unwrap();
        assert!((b - 0.0625).abs() < 1e-12);
        assert_eq!(solve_beta2(&cw(1, 1), BackoffMode::Paper, 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn beta_without_root_errors() {
        // Standard mean over {0, 1} is half a slot: no β ≤ 1 balances it.
        let r = solve_beta2(&cw(1, 1), BackoffMode::Standard, 1e-9);
        assert!(matches!(r, Err(Error::NoConvergence(_))));
    }

    #[test]
    fn beta_defaults_agree_with_damped_iteration() {
        let p = PhyMacParams::default();
        for mode in [BackoffMode::Paper, BackoffMode::Standard] {
            let b = solve_beta2(&p, mode, 1e-12).unwrap();
            let s = BackoffSchedule::new(&p, mode);
            let mut x = 0.1;
            for _ in 0..10_000 {
                x = 0.5 * x + 0.5 * attempt_map(&s, x);
            }
            assert!((b - x).abs() < 1e-8, "{mode:?}: {b} vs {x}");
        }
    }

    #[test]
    fn alpha2_values() {
        assert_eq!(alpha2(0.0).unwrap(), 0.0);
        assert_eq!(alpha2(0.5).unwrap(), 0.25);
        assert_eq!(alpha2(0.0625).unwrap(), 0.05859375);
        assert!(alpha2(1.5).is_err());
        assert!(alpha2(-0.1).is_err());
    }

    #[test]
    fn service_after_k_collisions() {
        let p = PhyMacParams::default();
        let m = Modes::default();
        let t = ts_ap(&p);
        assert!((service_time_after_k(0, t, &p, m) - 2785.6363636 * US).abs() < 1e-9);
        assert!((service_time_after_k(1, t, &p, m) - 5707.2727273 * US).abs() < 1e-9);
        let flat = PhyMacParams { slot_us: 0.0, ..p };
        assert_eq!(service_time_after_k(0, 1.25e-3, &flat, m), 1.25e-3);
    }

    #[test]
    fn certain_success_is_one_backoff_plus_frame() {
        let p = PhyMacParams::default();
        let m = Modes::default();
        let ap = mean_service_time(ts_ap(&p), 1.0, &p, m, TAIL_EPS).unwrap();
        assert!((ap.mean - 2785.6363636 * US).abs() < 1e-9);
        assert_eq!(ap.remainder_bound, 0.0);
        assert_eq!(ap.terms, 1);
        let sta = mean_service_time(ts_sta(&p), 1.0, &p, m, TAIL_EPS).unwrap();
        // 31.5 slots of 20 µs plus the 568.36 µs exchange.
        assert!((sta.mean - 1198.3636364 * US).abs() < 1e-9);
    }

    #[test]
    fn zero_success_probability_diverges() {
        let p = PhyMacParams::default();
        assert!(mean_service_time(1e-3, 0.0, &p, Modes::default(), TAIL_EPS).is_err());
    }

    #[test]
    fn series_matches_closed_form() {
        // E[δ·ΣEB] = δ·Σ_i EB^i q^(i-1), E[K] = q/a.
        let p = PhyMacParams::default();
        for modes in [
            Modes::default(),
            Modes { success: SuccessModel::PaperLiteral, ..Default::default() },
            Modes { backoff: BackoffMode::Standard, collision: CollisionMode::AckOnly, ..Default::default() },
        ] {
            let beta = solve_beta2(&p, modes.backoff, 1e-12).unwrap();
            let a = success_probability(beta, modes.success).unwrap();
            let q = 1.0 - a;
            let t = ts_ap(&p);
            let mut slots = 0.0;
            let mut w = 1.0;
            for i in 1..200_000 {
                slots += mean_backoff(i, &p, modes.backoff).unwrap() * w;
                w *= q;
            }
            let closed = p.slot() * slots + t_collision(&p, modes.collision) * q / a + t;
            let got = mean_service_time(t, a, &p, modes, TAIL_EPS).unwrap();
            assert!(
                (got.mean - closed).abs() <= got.remainder_bound + 1e-12 * closed,
                "{modes:?}: {} vs {closed}",
                got.mean
            );
        }
    }

    #[test]
    fn defaults_model() {
        let m = build_service_model(&PhyMacParams::default(), Modes::default()).unwrap();
        assert!((m.ts_ap - 2155.64 * US).abs() < 0.01 * US);
        assert!((m.ts_sta - 568.36 * US).abs() < 0.01 * US);
        assert!((m.t_c - 1671.64 * US).abs() < 0.01 * US);
        assert_eq!(m.alpha2, m.beta2 * (1.0 - m.beta2));
        assert!(m.s_ap >= m.ts_ap && m.s_sta >= m.ts_sta);
    }

    #[test]
    fn constant_window_model_embeds_beta() {
        let m = build_service_model(&cw(31, 31), Modes::default()).unwrap();
        assert!((m.beta2 - 0.0625).abs() < 1e-9);
    }
}
