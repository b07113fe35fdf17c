//! Three-center closed product-form network: AP queue, STA queue and the
//! round-trip propagation delay as an infinite-server center.
//!
//! Packets cycle AP → STA → delay → AP, and the population is the TCP
//! window. Two solvers are provided: the convolution algorithm, which also
//! yields marginal distributions, and exact mean value analysis.

use crate::error::{Error, Result};
use crate::mac::DcfServiceModel;
use crate::params::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnetSpec {
    /// Number of circulating packets.
    pub population: u32,
    /// Mean service time of the AP queue, seconds.
    pub s_ap: f64,
    /// Mean service time of the STA queue, seconds.
    pub s_sta: f64,
    /// Mean sojourn in the delay center, seconds.
    pub tau_rtpd: f64,
    /// Relative visit rates of (AP, STA, delay). Only their ratios matter.
    pub visit_ratios: [f64; 3],
}

/// Visit ratios of the cyclic route, normalized to sum to one.
pub const CYCLIC_VISITS: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

impl QnetSpec {
    pub fn new(population: u32, s_ap: f64, s_sta: f64, tau_rtpd: f64) -> Self {
        Self { population, s_ap, s_sta, tau_rtpd, visit_ratios: CYCLIC_VISITS }
    }

    pub fn from_model(model: &DcfServiceModel, scn: &Scenario) -> Self {
        Self::new(scn.window, model.s_ap, model.s_sta, scn.tau_rtpd())
    }

    pub fn with_visit_ratios(mut self, e: [f64; 3]) -> Self {
        self.visit_ratios = e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_ap > 0.0 && self.s_ap.is_finite()) {
            return Err(Error::invalid("s_ap", "service time must be positive"));
        }
        if !(self.s_sta > 0.0 && self.s_sta.is_finite()) {
            return Err(Error::invalid("s_sta", "service time must be positive"));
        }
        if !(self.tau_rtpd >= 0.0 && self.tau_rtpd.is_finite()) {
            return Err(Error::invalid("tau_rtpd", "delay must be nonnegative"));
        }
        let e = self.visit_ratios;
        if e.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || e.iter().all(|v| *v == 0.0) {
            return Err(Error::invalid("visit_ratios", "nonnegative and not all zero"));
        }
        Ok(())
    }

    /// Visit ratios rescaled to sum to 3, so the cyclic route becomes
    /// (1, 1, 1) and the chain throughput is the per-center packet rate.
    pub fn unit_visits(&self) -> [f64; 3] {
        let e = self.visit_ratios;
        let sum: f64 = e.iter().sum();
        e.map(|v| v * 3.0 / sum)
    }

    /// Relative loads `e_i · s_i` with the delay center last.
    pub fn loads(&self) -> [f64; 3] {
        let e = self.unit_visits();
        [e[0] * self.s_ap, e[1] * self.s_sta, e[2] * self.tau_rtpd]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Center {
    Ap,
    Sta,
    Delay,
}

impl Center {
    pub const ALL: [Center; 3] = [Center::Ap, Center::Sta, Center::Delay];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<u8> for Center {
    type Error = Error;

    /// 1-based center numbering: 1 = AP, 2 = STA, 3 = delay.
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Center::Ap),
            2 => Ok(Center::Sta),
            3 => Ok(Center::Delay),
            _ => Err(Error::invalid("center", format!("{v} is not one of 1, 2, 3"))),
        }
    }
}

/// `G(0..=W)` held as natural logarithms, since `y^W` under- or overflows
/// long before W reaches the thousands.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationConstants {
    pub log_g: Vec<f64>,
}

impl NormalizationConstants {
    pub fn get(&self, n: usize) -> f64 {
        self.log_g[n].exp()
    }

    pub fn ln(&self, n: usize) -> f64 {
        self.log_g[n]
    }

    pub fn values(&self) -> Vec<f64> {
        self.log_g.iter().map(|v| v.exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QnetSolution {
    /// Normalization constants; absent for mean value analysis.
    pub g: Option<NormalizationConstants>,
    /// Packet rate through the AP, packets/s.
    pub t_h: f64,
    pub n_ap: f64,
    pub n_sta: f64,
    pub n_rtpd: f64,
    /// Per-center pmfs over `0..=W`, indexed by [`Center::index`].
    pub marginals: Option<[Vec<f64>; 3]>,
}

impl QnetSolution {
    fn empty() -> Self {
        Self {
            g: Some(NormalizationConstants { log_g: vec![0.0] }),
            t_h: 0.0,
            n_ap: 0.0,
            n_sta: 0.0,
            n_rtpd: 0.0,
            marginals: Some([vec![1.0], vec![1.0], vec![1.0]]),
        }
    }

    pub fn mean(&self, c: Center) -> f64 {
        match c {
            Center::Ap => self.n_ap,
            Center::Sta => self.n_sta,
            Center::Delay => self.n_rtpd,
        }
    }

    pub fn marginal(&self, c: Center) -> Option<&[f64]> {
        self.marginals.as_ref().map(|m| m[c.index()].as_slice())
    }
}

fn ln_or_neg_inf(y: f64) -> f64 {
    if y == 0.0 {
        f64::NEG_INFINITY
    } else {
        y.ln()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `k·ln y`, treating `0·ln 0` as zero.
fn log_pow(ln_y: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_y
    }
}

/// Log of the delay center's own term `y^n / n!`, n = 0..=w.
fn delay_terms(y: f64, w: usize) -> Vec<f64> {
    let ln_y = ln_or_neg_inf(y);
    let mut out = Vec::with_capacity(w + 1);
    let mut ln_fact = 0.0;
    for n in 0..=w {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        out.push(log_pow(ln_y, n) - ln_fact);
    }
    out
}

/// Log of a lone FCFS center's term `y^n`.
fn queue_terms(y: f64, w: usize) -> Vec<f64> {
    let ln_y = ln_or_neg_inf(y);
    (0..=w).map(|n| log_pow(ln_y, n)).collect()
}

/// Convolves a load-independent queue into `prev`:
/// `G'(n) = G(n) + y·G'(n-1)`.
fn add_queue(prev: &[f64], y: f64) -> Vec<f64> {
    let ln_y = ln_or_neg_inf(y);
    let mut out = Vec::with_capacity(prev.len());
    for (n, &g) in prev.iter().enumerate() {
        let v = if n == 0 { g } else { log_add(g, ln_y + out[n - 1]) };
        out.push(v);
    }
    out
}

/// Loads divided by the larger queue load. Every state of population n
/// has total degree n, so this rescales `G(n)` by `c^-n` and leaves all
/// ratios intact while keeping the logs small.
fn scaled_loads(spec: &QnetSpec) -> ([f64; 3], f64) {
    let [y1, y2, y3] = spec.loads();
    let c = [y1.max(y2), y3].into_iter().find(|v| *v > 0.0).unwrap_or(1.0);
    ([y1 / c, y2 / c, y3 / c], c)
}

fn scaled_constants(y: [f64; 3], w: usize) -> Vec<f64> {
    add_queue(&add_queue(&delay_terms(y[2], w), y[0]), y[1])
}

/// `G(0..=W)` by convolving the delay center, then the AP, then the STA.
pub fn normalization_constants(spec: &QnetSpec) -> Result<NormalizationConstants> {
    spec.validate()?;
    let w = spec.population as usize;
    let (y, c) = scaled_loads(spec);
    let ln_c = c.ln();
    let log_g = scaled_constants(y, w)
        .into_iter()
        .enumerate()
        .map(|(n, g)| g + log_pow(ln_c, n))
        .collect();
    Ok(NormalizationConstants { log_g })
}

/// Marginal pmf of one center over `0..=W`.
pub fn marginal_distribution(spec: &QnetSpec, center: Center) -> Result<Vec<f64>> {
    spec.validate()?;
    let w = spec.population as usize;
    let ([y1, y2, y3], _) = scaled_loads(spec);
    let total = scaled_constants([y1, y2, y3], w)[w];
    // Log-weight of the center holding k customers, and the constant of
    // the two remaining centers.
    let (own, rest) = match center {
        Center::Ap => (queue_terms(y1, w), add_queue(&delay_terms(y3, w), y2)),
        Center::Sta => (queue_terms(y2, w), add_queue(&delay_terms(y3, w), y1)),
        Center::Delay => (delay_terms(y3, w), add_queue(&queue_terms(y1, w), y2)),
    };
    let mut pmf: Vec<f64> = (0..=w).map(|k| (own[k] + rest[w - k] - total).exp()).collect();
    // Rounding in the large logs leaves the mass off 1 by ~W·eps; divide it out.
    let mass: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= mass);
    Ok(pmf)
}

fn pmf_mean(pmf: &[f64]) -> f64 {
    pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
}

/// Solves the network with the convolution algorithm.
///
/// A zero population yields the empty network: zero throughput and all
/// marginals concentrated at zero.
pub fn solve_convolution(spec: &QnetSpec) -> Result<QnetSolution> {
    spec.validate()?;
    if spec.population == 0 {
        return Ok(QnetSolution::empty());
    }
    let w = spec.population as usize;
    let g = normalization_constants(spec)?;
    let (y, c) = scaled_loads(spec);
    let scaled = scaled_constants(y, w);
    let chain_rate = (scaled[w - 1] - scaled[w]).exp() / c;
    let t_h = spec.unit_visits()[0] * chain_rate;
    let marginals = [
        marginal_distribution(spec, Center::Ap)?,
        marginal_distribution(spec, Center::Sta)?,
        marginal_distribution(spec, Center::Delay)?,
    ];
    Ok(QnetSolution {
        g: Some(g),
        t_h,
        n_ap: pmf_mean(&marginals[0]),
        n_sta: pmf_mean(&marginals[1]),
        n_rtpd: pmf_mean(&marginals[2]),
        marginals: Some(marginals),
    })
}

/// Solves the network by exact mean value analysis. Means and throughput
/// only.
pub fn solve_mva(spec: &QnetSpec) -> Result<QnetSolution> {
    spec.validate()?;
    let [d1, d2, d3] = spec.loads();
    let (mut n1, mut n2, mut n3) = (0.0, 0.0, 0.0);
    let mut x = 0.0;
    for w in 1..=spec.population {
        let r1 = d1 * (1.0 + n1);
        let r2 = d2 * (1.0 + n2);
        let r3 = d3;
        x = f64::from(w) / (r1 + r2 + r3);
        n1 = x * r1;
        n2 = x * r2;
        n3 = x * r3;
    }
    Ok(QnetSolution {
        g: None,
        t_h: spec.unit_visits()[0] * x,
        n_ap: n1,
        n_sta: n2,
        n_rtpd: n3,
        marginals: None,
    })
}
