//! PHY/MAC parameter set and scenario configuration.
//!
//! Values are held in the units of the configuration document (Mbps, µs,
//! bytes, ms) so that a scenario survives a save/load cycle bit for bit.
//! Formulas read them through the SI accessors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 802.11b DCF timing and framing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhyMacParams {
    pub data_rate_mbps: f64,
    pub control_rate_mbps: f64,
    pub preamble_us: f64,
    pub phy_header_us: f64,
    pub mac_header_bytes: f64,
    pub rts_bytes: f64,
    pub cts_bytes: f64,
    pub mac_ack_bytes: f64,
    pub ip_header_bytes: f64,
    pub tcp_header_bytes: f64,
    pub tcp_ack_bytes: f64,
    pub tcp_payload_bytes: f64,
    pub slot_us: f64,
    pub difs_us: f64,
    pub sifs_us: f64,
    pub eifs_us: f64,
    pub cw_min: u32,
    pub cw_max: u32,
}

impl Default for PhyMacParams {
    /// The 802.11b profile: 11 Mbps data, 2 Mbps control, long preamble.
    fn default() -> Self {
        Self {
            data_rate_mbps: 11.0,
            control_rate_mbps: 2.0,
            preamble_us: 144.0,
            phy_header_us: 48.0,
            mac_header_bytes: 34.0,
            rts_bytes: 20.0,
            cts_bytes: 14.0,
            mac_ack_bytes: 14.0,
            ip_header_bytes: 20.0,
            tcp_header_bytes: 20.0,
            tcp_ack_bytes: 20.0,
            tcp_payload_bytes: 1460.0,
            slot_us: 20.0,
            difs_us: 50.0,
            sifs_us: 10.0,
            eifs_us: 364.0,
            cw_min: 31,
            cw_max: 1023,
        }
    }
}

const US: f64 = 1e6;

impl PhyMacParams {
    pub fn data_rate_bps(&self) -> f64 {
        self.data_rate_mbps * 1e6
    }
    pub fn control_rate_bps(&self) -> f64 {
        self.control_rate_mbps * 1e6
    }
    pub fn preamble(&self) -> f64 {
        self.preamble_us / US
    }
    pub fn phy_header(&self) -> f64 {
        self.phy_header_us / US
    }
    pub fn slot(&self) -> f64 {
        self.slot_us / US
    }
    pub fn difs(&self) -> f64 {
        self.difs_us / US
    }
    pub fn sifs(&self) -> f64 {
        self.sifs_us / US
    }
    pub fn eifs(&self) -> f64 {
        self.eifs_us / US
    }

    /// Airtime of `bytes` at the data rate.
    pub fn at_data_rate(&self, bytes: f64) -> f64 {
        bytes * 8.0 / self.data_rate_bps()
    }

    /// Airtime of `bytes` at the control rate.
    pub fn at_control_rate(&self, bytes: f64) -> f64 {
        bytes * 8.0 / self.control_rate_bps()
    }

    /// Preamble plus PLCP header, paid by every frame.
    pub fn plcp_overhead(&self) -> f64 {
        self.preamble() + self.phy_header()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }
}

/// What is wrong with one field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    NonPositive,
    NotFinite,
    CwOrdering,
    CwMinZero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::NonPositive => "must be strictly positive",
            ViolationKind::NotFinite => "must be finite",
            ViolationKind::CwOrdering => "cwmin must not exceed cwmax",
            ViolationKind::CwMinZero => "must be at least 1",
        };
        write!(f, "{} {}", self.field, what)
    }
}

/// Checks every parameter invariant and reports each violation by its
/// configuration key. An empty list means the set is usable.
pub fn validate(p: &PhyMacParams) -> Vec<Violation> {
    let reals: [(&'static str, f64); 16] = [
        ("rd_mbps", p.data_rate_mbps),
        ("rc_mbps", p.control_rate_mbps),
        ("tp_us", p.preamble_us),
        ("tphy_us", p.phy_header_us),
        ("lmac_bytes", p.mac_header_bytes),
        ("lrts_bytes", p.rts_bytes),
        ("lcts_bytes", p.cts_bytes),
        ("lack_bytes", p.mac_ack_bytes),
        ("liph_bytes", p.ip_header_bytes),
        ("ltcph_bytes", p.tcp_header_bytes),
        ("ltcpack_bytes", p.tcp_ack_bytes),
        ("ltcp_bytes", p.tcp_payload_bytes),
        ("slot_us", p.slot_us),
        ("difs_us", p.difs_us),
        ("sifs_us", p.sifs_us),
        ("eifs_us", p.eifs_us),
    ];
    let mut out = Vec::new();
    for (field, v) in reals {
        if !v.is_finite() {
            out.push(Violation { field, kind: ViolationKind::NotFinite });
        } else if v <= 0.0 {
            out.push(Violation { field, kind: ViolationKind::NonPositive });
        }
    }
    if p.cw_min == 0 {
        out.push(Violation { field: "cwmin", kind: ViolationKind::CwMinZero });
    }
    if p.cw_min > p.cw_max {
        out.push(Violation { field: "cwmax", kind: ViolationKind::CwOrdering });
    }
    out
}

/// Which frame sizes enter the wasted airtime of a collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionMode {
    /// MAC, IP, TCP-ACK and TCP payload sizes, as the collision formula is printed.
    #[default]
    PaperLiteral,
    /// The payload term dropped: only the TCP-ACK frame is on the air.
    AckOnly,
}

/// Convention for the mean backoff at a given attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackoffMode {
    /// `(min(2^i·CWmin, CWmax) + 1) / 2` slots.
    #[default]
    Paper,
    /// Mean of a uniform draw over `{0..CW}` with `CW = 2^(i-1)·(CWmin+1) - 1`.
    Standard,
}

/// Probability that a single attempt succeeds, as used by the geometric
/// collision-count law of the mean service time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessModel {
    /// `1 - β₂`: the attempt succeeds unless the other node also attempts.
    #[default]
    PerAttempt,
    /// `β₂(1 - β₂)`: the first-attempt win probability used as printed.
    PaperLiteral,
}

/// Analysis conventions bundled together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Modes {
    pub collision: CollisionMode,
    pub backoff: BackoffMode,
    pub success: SuccessModel,
}

/// One operating point: parameters, propagation delay and TCP window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub params: PhyMacParams,
    pub tau_rtpd_ms: f64,
    pub window: u32,
    pub collision_mode: CollisionMode,
    pub backoff_mode: BackoffMode,
    pub success_model: SuccessModel,
}

impl Scenario {
    pub fn new(tau_rtpd_ms: f64, window: u32) -> Self {
        Self {
            params: PhyMacParams::default(),
            tau_rtpd_ms,
            window,
            collision_mode: CollisionMode::default(),
            backoff_mode: BackoffMode::default(),
            success_model: SuccessModel::default(),
        }
    }

    /// Round-trip propagation delay in seconds.
    pub fn tau_rtpd(&self) -> f64 {
        self.tau_rtpd_ms / 1e3
    }

    pub fn modes(&self) -> Modes {
        Modes {
            collision: self.collision_mode,
            backoff: self.backoff_mode,
            success: self.success_model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = validate(&self.params);
        if !v.is_empty() {
            return Err(Error::Violations(v));
        }
        if !self.tau_rtpd_ms.is_finite() {
            return Err(Error::invalid("tau_rtpd_ms", "must be finite"));
        }
        if self.tau_rtpd_ms < 0.0 {
            return Err(Error::invalid("tau_rtpd_ms", "negative delay"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window", "must be at least 1"));
        }
        Ok(())
    }

    pub fn to_config(&self) -> ScenarioConfig {
        let p = &self.params;
        ScenarioConfig {
            rd_mbps: Some(p.data_rate_mbps),
            rc_mbps: Some(p.control_rate_mbps),
            tp_us: Some(p.preamble_us),
            tphy_us: Some(p.phy_header_us),
            lmac_bytes: Some(p.mac_header_bytes),
            lrts_bytes: Some(p.rts_bytes),
            lcts_bytes: Some(p.cts_bytes),
            lack_bytes: Some(p.mac_ack_bytes),
            liph_bytes: Some(p.ip_header_bytes),
            ltcph_bytes: Some(p.tcp_header_bytes),
            ltcpack_bytes: Some(p.tcp_ack_bytes),
            ltcp_bytes: Some(p.tcp_payload_bytes),
            slot_us: Some(p.slot_us),
            difs_us: Some(p.difs_us),
            sifs_us: Some(p.sifs_us),
            eifs_us: Some(p.eifs_us),
            cwmin: Some(p.cw_min),
            cwmax: Some(p.cw_max),
            tau_rtpd_ms: Some(self.tau_rtpd_ms),
            window: Some(self.window),
            collision_mode: Some(self.collision_mode),
            backoff_mode: Some(self.backoff_mode),
            success_model: Some(self.success_model),
        }
    }

    /// Serializes to the flat JSON configuration document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_config()).expect("config is always serializable")
    }
}

/// The flat key/value configuration document. Every key is optional on
/// input; PHY/MAC keys fall back to the 802.11b defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rd_mbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rc_mbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tp_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tphy_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmac_bytes: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lrts_bytes: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lcts_bytes: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lack_bytes: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub liph_bytes: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ltcph_bytes: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ltcpack_bytes: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ltcp_bytes: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difs_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sifs_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eifs_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cwmin: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cwmax: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_rtpd_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision_mode: Option<CollisionMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backoff_mode: Option<BackoffMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_model: Option<SuccessModel>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// PHY/MAC parameters with defaults filled in. Not validated.
    pub fn params(&self) -> PhyMacParams {
        let d = PhyMacParams::default();
        PhyMacParams {
            data_rate_mbps: self.rd_mbps.unwrap_or(d.data_rate_mbps),
            control_rate_mbps: self.rc_mbps.unwrap_or(d.control_rate_mbps),
            preamble_us: self.tp_us.unwrap_or(d.preamble_us),
            phy_header_us: self.tphy_us.unwrap_or(d.phy_header_us),
            mac_header_bytes: self.lmac_bytes.unwrap_or(d.mac_header_bytes),
            rts_bytes: self.lrts_bytes.unwrap_or(d.rts_bytes),
            cts_bytes: self.lcts_bytes.unwrap_or(d.cts_bytes),
            mac_ack_bytes: self.lack_bytes.unwrap_or(d.mac_ack_bytes),
            ip_header_bytes: self.liph_bytes.unwrap_or(d.ip_header_bytes),
            tcp_header_bytes: self.ltcph_bytes.unwrap_or(d.tcp_header_bytes),
            tcp_ack_bytes: self.ltcpack_bytes.unwrap_or(d.tcp_ack_bytes),
            tcp_payload_bytes: self.ltcp_bytes.unwrap_or(d.tcp_payload_bytes),
            slot_us: self.slot_us.unwrap_or(d.slot_us),
            difs_us: self.difs_us.unwrap_or(d.difs_us),
            sifs_us: self.sifs_us.unwrap_or(d.sifs_us),
            eifs_us: self.eifs_us.unwrap_or(d.eifs_us),
            cw_min: self.cwmin.unwrap_or(d.cw_min),
            cw_max: self.cwmax.unwrap_or(d.cw_max),
        }
    }

    /// Builds and validates a scenario. `tau_rtpd_ms` is required; the
    /// window defaults to 70 packets.
    pub fn into_scenario(self) -> Result<Scenario> {
        let tau = self.tau_rtpd_ms.ok_or(Error::Missing("tau_rtpd"))?;
        let scn = Scenario {
            params: self.params(),
            tau_rtpd_ms: tau,
            window: self.window.unwrap_or(DEFAULT_WINDOW),
            collision_mode: self.collision_mode.unwrap_or_default(),
            backoff_mode: self.backoff_mode.unwrap_or_default(),
            success_model: self.success_model.unwrap_or_default(),
        };
        scn.validate()?;
        Ok(scn)
    }
}

pub const DEFAULT_WINDOW: u32 = 70;

/// Parses and validates a configuration document.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    ScenarioConfig::parse(text)?.into_scenario()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(validate(&PhyMacParams::default()).is_empty());
    }

    #[test]
    fn defaults_in_si_units() {
        let p = PhyMacParams::default();
        assert_eq!(p.data_rate_bps(), 11e6);
        assert_eq!(p.control_rate_bps(), 2e6);
        assert_eq!(p.preamble(), 144e-6);
        assert_eq!(p.phy_header(), 48e-6);
        assert_eq!(p.slot(), 20e-6);
        assert_eq!(p.difs(), 50e-6);
        assert_eq!(p.sifs(), 10e-6);
        assert_eq!(p.eifs(), 364e-6);
        assert_eq!((p.cw_min, p.cw_max), (31, 1023));
        assert_eq!(p.tcp_payload_bytes, 1460.0);
    }

    #[test]
    fn cw_ordering_violation() {
        let p = PhyMacParams { cw_min: 1023, cw_max: 31, ..Default::default() };
        let v = validate(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::CwOrdering);
    }

    #[test]
    fn zero_rate_violation() {
        let p = PhyMacParams { data_rate_mbps: 0.0, ..Default::default() };
        assert_eq!(
            validate(&p),
            vec![Violation { field: "rd_mbps", kind: ViolationKind::NonPositive }]
        );
    }

    #[test]
    fn empty_document_needs_tau() {
        let err = load_scenario("{}").unwrap_err();
        assert_eq!(err.to_string(), "missing tau_rtpd");
    }

    #[test]
    fn minimal_document() {
        let s = load_scenario(r#"{"tau_rtpd_ms": 10, "window": 70}"#).unwrap();
        assert_eq!(s.params, PhyMacParams::default());
        assert_eq!(s.tau_rtpd(), 0.01);
        assert_eq!(s.window, 70);
        assert_eq!(s.collision_mode, CollisionMode::PaperLiteral);
        assert_eq!(s.backoff_mode, BackoffMode::Paper);
    }

    #[test]
    fn negative_delay_rejected() {
        let err = load_scenario(r#"{"tau_rtpd_ms": -1, "window": 70}"#).unwrap_err();
        assert!(matches!(err, Error::Invalid { field: "tau_rtpd_ms", .. }), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = load_scenario(r#"{"tau_rtpd_ms": 1, "bogus": 2}"#).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn malformed_rejected() {
        assert!(matches!(load_scenario("{tau"), Err(Error::Parse(_))));
    }

    #[test]
    fn violation_names_key() {
        let err = load_scenario(r#"{"tau_rtpd_ms": 1, "sifs_us": 0}"#).unwrap_err();
        assert!(err.to_string().contains("sifs_us"), "{err}");
    }

    #[test]
    fn mode_keys() {
        let s = load_scenario(
            r#"{"tau_rtpd_ms": 1, "collision_mode": "ack-only", "backoff_mode": "standard",
                "success_model": "paper-literal"}"#,
        )
        .unwrap();
        assert_eq!(s.collision_mode, CollisionMode::AckOnly);
        assert_eq!(s.backoff_mode, BackoffMode::Standard);
        assert_eq!(s.success_model, SuccessModel::PaperLiteral);
    }
}
