//! Discrete-event simulation of the closed TCP loop over a two-node DCF
//! channel.
//!
//! The AP holds TCP data segments and sends each with RTS/CTS. A delivered
//! segment turns into a TCP ACK queued at the STA at once, which the STA
//! sends by basic access. A delivered ACK releases the next segment, which
//! reaches the AP queue one round-trip propagation delay later, so exactly
//! `W` packets circulate. Backoff follows standard 802.11: uniform over
//! `{0..CW}`, `CW` doubling per collision up to `CWmax`, counters frozen
//! while the medium is busy. Collisions are the only loss and cost the
//! longer of the two frames plus EIFS.

use std::collections::VecDeque;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::mac::{ts_ap, ts_sta};
use crate::params::{PhyMacParams, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Simulated seconds per replication.
    pub horizon_s: f64,
    /// Initial seconds discarded from every statistic.
    pub warmup_s: f64,
}

impl SimConfig {
    /// Horizon with the customary 10% warmup.
    pub fn with_horizon(horizon_s: f64) -> Self {
        Self { horizon_s, warmup_s: 0.1 * horizon_s }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon_s > 0.0 && self.horizon_s.is_finite()) {
            return Err(Error::invalid("sim_time_s", "horizon must be positive"));
        }
        if !(self.warmup_s >= 0.0 && self.warmup_s < self.horizon_s) {
            return Err(Error::invalid("warmup_s", "warmup must lie inside the horizon"));
        }
        Ok(())
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::with_horizon(300.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Ap,
    Sta,
}

impl Role {
    fn name(self) -> &'static str {
        match self {
            Role::Ap => "ap",
            Role::Sta => "sta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub role: Role,
    /// Packets queued, including the one being sent.
    pub queue_len: u32,
    /// Remaining idle slots before the next attempt; meaningful while attempting.
    pub backoff_counter: u32,
    pub cw_stage: u32,
    /// Whether the node is contending for the medium.
    pub attempting: bool,
}

impl NodeState {
    fn new(role: Role) -> Self {
        Self { role, queue_len: 0, backoff_counter: 0, cw_stage: 0, attempting: false }
    }

    fn draw<R: Rng>(&mut self, p: &PhyMacParams, rng: &mut R) {
        self.backoff_counter = rng.random_range(0..=contention_window(p, self.cw_stage));
        self.attempting = true;
    }
}

/// `CW = min(2^stage · (CWmin + 1) - 1, CWmax)`.
pub fn contention_window(p: &PhyMacParams, stage: u32) -> u32 {
    let base = u64::from(p.cw_min) + 1;
    let cw = base.checked_shl(stage.min(40)).map_or(u64::MAX, |v| v - 1);
    cw.min(u64::from(p.cw_max)) as u32
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Success(Role),
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Medium {
    /// Idle; counters count slots from this slot boundary.
    Idle { since: f64 },
    Busy { until: f64, outcome: Outcome },
}

/// Observables of one replication, averaged over `[warmup, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationStats {
    /// TCP segments delivered per second.
    pub throughput_pps: f64,
    pub n_ap: f64,
    pub n_sta: f64,
    pub n_flight: f64,
    /// Collisions over the whole run, warmup included.
    pub collisions: u64,
    pub ap_successes: u64,
    pub sta_successes: u64,
    /// Mean length of a contention cycle: the interval between consecutive
    /// successful transmissions, backoffs and collisions included.
    pub mean_cycle_s: f64,
    pub cycles: u64,
}

struct Sim<'a, R> {
    p: PhyMacParams,
    cfg: SimConfig,
    window: u32,
    tau: f64,
    ts: [f64; 2],
    collision_time: f64,
    nodes: [NodeState; 2],
    in_flight: VecDeque<f64>,
    medium: Medium,
    rng: R,
    trace: Option<&'a mut dyn Write>,
    // time-average accumulators
    last_t: f64,
    area: [f64; 3],
    collisions: u64,
    successes: [u64; 2],
    last_success: Option<f64>,
    cycle_sum: f64,
    cycles: u64,
}

fn idx(r: Role) -> usize {
    match r {
        Role::Ap => 0,
        Role::Sta => 1,
    }
}

impl<'a, R: Rng> Sim<'a, R> {
    fn new(scn: &Scenario, cfg: SimConfig, rng: R, trace: Option<&'a mut dyn Write>) -> Self {
        let p = scn.params;
        let rts = p.plcp_overhead() + p.at_control_rate(p.rts_bytes);
        let ack_frame = p.plcp_overhead()
            + p.at_data_rate(p.mac_header_bytes + p.ip_header_bytes + p.tcp_header_bytes + p.tcp_ack_bytes);
        let mut sim = Self {
            p,
            cfg,
            window: scn.window,
            tau: scn.tau_rtpd(),
            ts: [ts_ap(&p), ts_sta(&p)],
            collision_time: rts.max(ack_frame) + p.eifs(),
            nodes: [NodeState::new(Role::Ap), NodeState::new(Role::Sta)],
            in_flight: VecDeque::new(),
            medium: Medium::Idle { since: 0.0 },
            rng,
            trace,
            last_t: 0.0,
            area: [0.0; 3],
            collisions: 0,
            successes: [0; 2],
            last_success: None,
            cycle_sum: 0.0,
            cycles: 0,
        };
        sim.nodes[0].queue_len = scn.window;
        sim.nodes[0].draw(&p, &mut sim.rng);
        sim
    }

    fn counts(&self) -> [u32; 3] {
        [self.nodes[0].queue_len, self.nodes[1].queue_len, self.in_flight.len() as u32]
    }

    /// Integrates the occupancies from the last change up to `t`.
    fn advance(&mut self, t: f64) {
        let lo = self.last_t.max(self.cfg.warmup_s);
        let hi = t.min(self.cfg.horizon_s);
        if hi > lo {
            let counts = self.counts();
            for (a, c) in self.area.iter_mut().zip(counts) {
                *a += f64::from(c) * (hi - lo);
            }
        }
        self.last_t = t;
    }

    fn log(&mut self, t: f64, kind: &str, node: &str) -> Result<()> {
        let [a, s, f] = self.counts();
        debug_assert_eq!(a + s + f, self.window);
        if let Some(out) = self.trace.as_mut() {
            writeln!(out, "{t:.9} {kind} {node} {a} {s} {f}")?;
        }
        Ok(())
    }

    fn arrival(&mut self, t: f64) -> Result<()> {
        self.advance(t);
        self.in_flight.pop_front();
        if let Medium::Idle { since } = self.medium {
            // Idle slots already elapsed, rounded up to the boundary at
            // which the newcomer joins the countdown.
            let slot = self.p.slot();
            let elapsed = if slot > 0.0 { ((t - since) / slot - 1e-9).ceil().max(0.0) as u32 } else { 0 };
            for n in self.nodes.iter_mut().filter(|n| n.attempting) {
                n.backoff_counter -= elapsed.min(n.backoff_counter);
            }
            self.medium = Medium::Idle { since: since + f64::from(elapsed) * slot };
        }
        let ap = &mut self.nodes[0];
        ap.queue_len += 1;
        if !ap.attempting {
            ap.draw(&self.p, &mut self.rng);
        }
        self.log(t, "arrival", "ap")
    }

    fn start_transmission(&mut self, since: f64, slots: u32) {
        let t = since + f64::from(slots) * self.p.slot();
        let mut senders = Vec::with_capacity(2);
        for n in self.nodes.iter_mut().filter(|n| n.attempting) {
            n.backoff_counter -= slots;
            if n.backoff_counter == 0 {
                senders.push(n.role);
            }
        }
        self.medium = match senders.as_slice() {
            [one] => Medium::Busy { until: t + self.ts[idx(*one)], outcome: Outcome::Success(*one) },
            _ => Medium::Busy { until: t + self.collision_time, outcome: Outcome::Collision },
        };
    }

    fn finish_transmission(&mut self, t: f64, outcome: Outcome) -> Result<()> {
        self.advance(t);
        match outcome {
            Outcome::Collision => {
                self.collisions += 1;
                for n in &mut self.nodes {
                    n.cw_stage += 1;
                    n.draw(&self.p, &mut self.rng);
                }
                self.medium = Medium::Idle { since: t };
                return self.log(t, "collision", "both");
            }
            Outcome::Success(role) => {
                let i = idx(role);
                let node = &mut self.nodes[i];
                node.queue_len -= 1;
                node.cw_stage = 0;
                node.attempting = false;
                if node.queue_len > 0 {
                    node.draw(&self.p, &mut self.rng);
                }
                match role {
                    Role::Ap => {
                        let sta = &mut self.nodes[1];
                        sta.queue_len += 1;
                        if !sta.attempting {
                            sta.draw(&self.p, &mut self.rng);
                        }
                    }
                    Role::Sta => self.in_flight.push_back(t + self.tau),
                }
                if t > self.cfg.warmup_s && t <= self.cfg.horizon_s {
                    self.successes[i] += 1;
                    if let Some(prev) = self.last_success {
                        self.cycle_sum += t - prev;
                        self.cycles += 1;
                    }
                    self.last_success = Some(t);
                }
            }
        }
        self.medium = Medium::Idle { since: t };
        self.log(t, "success", role_of(outcome))
    }

    fn run(mut self) -> Result<ReplicationStats> {
        loop {
            let next_arrival = self.in_flight.front().copied().unwrap_or(f64::INFINITY);
            match self.medium {
                Medium::Busy { until, outcome } => {
                    if next_arrival < until {
                        if next_arrival > self.cfg.horizon_s {
                            break;
                        }
                        self.arrival(next_arrival)?;
                    } else {
                        if until > self.cfg.horizon_s {
                            break;
                        }
                        self.finish_transmission(until, outcome)?;
                    }
                }
                Medium::Idle { since } => {
                    let slots = self.nodes.iter().filter(|n| n.attempting).map(|n| n.backoff_counter).min();
                    let next_tx = slots.map_or(f64::INFINITY, |s| since + f64::from(s) * self.p.slot());
                    if next_arrival < next_tx {
                        if next_arrival > self.cfg.horizon_s {
                            break;
                        }
                        self.arrival(next_arrival)?;
                    } else if let Some(s) = slots {
                        if next_tx > self.cfg.horizon_s {
                            break;
                        }
                        self.start_transmission(since, s);
                    } else {
                        // Nothing queued and nothing in flight: only possible with W = 0.
                        break;
                    }
                }
            }
        }
        self.advance(self.cfg.horizon_s);
        let span = self.cfg.horizon_s - self.cfg.warmup_s;
        Ok(ReplicationStats {
            throughput_pps: self.successes[0] as f64 / span,
            n_ap: self.area[0] / span,
            n_sta: self.area[1] / span,
            n_flight: self.area[2] / span,
            collisions: self.collisions,
            ap_successes: self.successes[0],
            sta_successes: self.successes[1],
            mean_cycle_s: if self.cycles > 0 { self.cycle_sum / self.cycles as f64 } else { f64::NAN },
            cycles: self.cycles,
        })
    }
}

fn role_of(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Success(r) => r.name(),
        Outcome::Collision => "both",
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs one replication.
pub fn run_replication(scn: &Scenario, seed: u64, cfg: SimConfig) -> Result<ReplicationStats> {
    scn.validate()?;
    cfg.validate()?;
    Sim::new(scn, cfg, rng_for(seed), None).run()
}

/// Runs one replication and writes every event as a line
/// `time_s event_kind node ap_queue sta_queue in_flight`.
pub fn run_replication_traced(
    scn: &Scenario,
    seed: u64,
    cfg: SimConfig,
    out: &mut dyn Write,
) -> Result<ReplicationStats> {
    scn.validate()?;
    cfg.validate()?;
    Sim::new(scn, cfg, rng_for(seed), Some(out)).run()
}

/// Seed of replication `i`, derived from the base seed by SplitMix64.
pub fn replication_seed(base_seed: u64, i: u32) -> u64 {
    let mut z = base_seed.wrapping_add(u64::from(i).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample mean with a Student-t confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    /// Two-sided 95% interval; needs at least two samples.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::invalid("replications", "at least two samples are needed"));
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.975);
        let half = t * (var / n as f64).sqrt();
        Ok(Self { mean, ci_low: mean - half, ci_high: mean + half })
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub throughput_pps: Estimate,
    pub n_ap: Estimate,
    pub n_sta: Estimate,
    pub n_flight: Estimate,
    pub replications: u32,
    pub sim_time: f64,
    pub seed: u64,
    pub collisions: u64,
    pub runs: Vec<ReplicationStats>,
}

/// Independent replications with 95% confidence intervals. Identical
/// inputs give identical results, whatever the thread count.
pub fn run_sim(scn: &Scenario, replications: u32, base_seed: u64, cfg: SimConfig) -> Result<SimResult> {
    if replications < 2 {
        return Err(Error::invalid("replications", "at least two replications are needed"));
    }
    scn.validate()?;
    cfg.validate()?;
    let one = |i: u32| run_replication(scn, replication_seed(base_seed, i), cfg);
    #[cfg(feature = "parallel")]
    let runs: Vec<ReplicationStats> = {
        use rayon::prelude::*;
        (0..replications).into_par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<ReplicationStats> = (0..replications).map(one).collect::<Result<_>>()?;

    let est = |f: fn(&ReplicationStats) -> f64| {
        Estimate::from_samples(&runs.iter().map(f).collect::<Vec<_>>())
    };
    Ok(SimResult {
        throughput_pps: est(|r| r.throughput_pps)?,
        n_ap: est(|r| r.n_ap)?,
        n_sta: est(|r| r.n_sta)?,
        n_flight: est(|r| r.n_flight)?,
        replications,
        sim_time: cfg.horizon_s,
        seed: base_seed,
        collisions: runs.iter().map(|r| r.collisions).sum(),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> SimConfig {
        SimConfig::with_horizon(20.0)
    }

    #[test]
    fn contention_windows() {
        let p = PhyMacParams::default();
        let cws: Vec<u32> = (0..8).map(|s| contention_window(&p, s)).collect();
        assert_eq!(cws, vec![31, 63, 127, 255, 511, 1023, 1023, 1023]);
        assert_eq!(contention_window(&p, 500), 1023);
    }

    #[test]
    fn single_packet_never_collides() {
        let r = run_replication(&Scenario::new(10.0, 1), 7, short()).unwrap();
        assert_eq!(r.collisions, 0);
        assert!(r.ap_successes > 0);
    }

    #[test]
    fn single_packet_no_delay_cycle() {
        let r = run_replication(&Scenario::new(0.0, 1), 3, SimConfig::with_horizon(60.0)).unwrap();
        let want = 1.0 / (0.31e-3 + 2.155_636e-3 + 0.31e-3 + 0.568_364e-3);
        assert!((r.throughput_pps / want - 1.0).abs() < 0.01, "{}", r.throughput_pps);
    }

    #[test]
    fn zero_frame_times_give_pure_backoff() {
        let scn = Scenario {
            params: PhyMacParams {
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
            },
            ..Scenario::new(0.0, 1)
        };
        // Frame sizes of zero are outside the validated domain, so drive
        // the simulator directly.
        let r = Sim::new(&scn, SimConfig::with_horizon(20.0), rng_for(1), None).run().unwrap();
        let want = 1.0 / (31.0 * 20e-6);
        assert!((r.throughput_pps / want - 1.0).abs() < 0.01, "{}", r.throughput_pps);
    }

    #[test]
    fn occupancies_sum_to_window() {
        let r = run_replication(&Scenario::new(20.0, 30), 11, short()).unwrap();
        assert!((r.n_ap + r.n_sta + r.n_flight - 30.0).abs() < 1e-6);
        assert!(r.ap_successes.abs_diff(r.sta_successes) <= 30);
    }

    #[test]
    fn replication_determinism() {
        let scn = Scenario::new(10.0, 20);
        let a = run_replication(&scn, 42, short()).unwrap();
        let b = run_replication(&scn, 42, short()).unwrap();
        assert_eq!(a, b);
        let c = run_replication(&scn, 43, short()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_few_replications() {
        assert!(run_sim(&Scenario::new(10.0, 5), 1, 0, short()).is_err());
    }

    #[test]
    fn estimate_interval() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.mean, 2.0);
        // t(0.975, 2) = 4.302653
        assert!((e.half_width() - 4.302_652_73 * (1.0f64 / 3.0).sqrt()).abs() < 1e-6);
        assert!(Estimate::from_samples(&[1.0]).is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| replication_seed(9, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
