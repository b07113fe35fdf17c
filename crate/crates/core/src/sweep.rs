//! Grid sweeps over RTPD and window, emitted as CSV rows.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::des::{replication_seed, run_sim, SimConfig};
use crate::error::{Error, Result};
use crate::params::Scenario;

pub const CSV_HEADER: &str = "rtpd_ms,window,source,throughput_pps,n_ap,n_sta,n_flight,ci_low,ci_high";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analysis,
    Sim,
    Paper,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Analysis => "analysis",
            Source::Sim => "sim",
            Source::Paper => "paper",
        })
    }
}

/// One observation of one grid point. Blank cells are `None`: confidence
/// bounds exist only for simulation rows, and a reference row carries only
/// the observables its table reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rtpd_ms: f64,
    pub window: u32,
    pub source: Source,
    pub throughput_pps: Option<f64>,
    pub n_ap: Option<f64>,
    pub n_sta: Option<f64>,
    pub n_flight: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Analysis,
    Sim,
    Both,
}

impl SweepMode {
    fn analysis(self) -> bool {
        matches!(self, SweepMode::Analysis | SweepMode::Both)
    }
    fn sim(self) -> bool {
        matches!(self, SweepMode::Sim | SweepMode::Both)
    }
}

impl FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analysis" => Ok(SweepMode::Analysis),
            "sim" => Ok(SweepMode::Sim),
            "both" => Ok(SweepMode::Both),
            other => Err(Error::invalid("mode", format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub mode: SweepMode,
    pub replications: u32,
    pub seed: u64,
    pub sim: SimConfig,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { mode: SweepMode::Analysis, replications: 20, seed: 1, sim: SimConfig::default() }
    }
}

/// Seed of one grid point, independent of the rest of the grid.
pub fn point_seed(seed: u64, rtpd_ms: f64, window: u32) -> u64 {
    replication_seed(seed ^ rtpd_ms.to_bits().rotate_left(17), window)
}

fn sweep_point(base: &Scenario, rtpd_ms: f64, window: u32, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    let scn = Scenario { tau_rtpd_ms: rtpd_ms, window, ..*base };
    scn.validate()?;
    let mut rows = Vec::with_capacity(2);
    if opts.mode.analysis() {
        let a = crate::analyze(&scn)?.solution;
        rows.push(SweepRow {
            rtpd_ms,
            window,
            source: Source::Analysis,
            throughput_pps: Some(a.t_h),
            n_ap: Some(a.n_ap),
            n_sta: Some(a.n_sta),
            n_flight: Some(a.n_rtpd),
            ci_low: None,
            ci_high: None,
        });
    }
    if opts.mode.sim() {
        let s = run_sim(&scn, opts.replications, point_seed(opts.seed, rtpd_ms, window), opts.sim)?;
        rows.push(SweepRow {
            rtpd_ms,
            window,
            source: Source::Sim,
            throughput_pps: Some(s.throughput_pps.mean),
            n_ap: Some(s.n_ap.mean),
            n_sta: Some(s.n_sta.mean),
            n_flight: Some(s.n_flight.mean),
            ci_low: Some(s.throughput_pps.ci_low),
            ci_high: Some(s.throughput_pps.ci_high),
        });
    }
    Ok(rows)
}

/// Evaluates every `(window, rtpd)` grid point, windows outermost. Rows
/// come back in grid order even when points run in parallel.
pub fn run_sweep(
    base: &Scenario,
    rtpd_list: &[f64],
    window_list: &[u32],
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    if rtpd_list.is_empty() {
        return Err(Error::invalid("rtpd_ms", "empty RTPD list"));
    }
    if window_list.is_empty() {
        return Err(Error::invalid("window", "empty window list"));
    }
    if let Some(bad) = rtpd_list.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::invalid("rtpd_ms", format!("{bad} is not a nonnegative delay")));
    }
    if window_list.contains(&0) {
        return Err(Error::invalid("window", "windows must be at least 1"));
    }
    let points: Vec<(u32, f64)> =
        window_list.iter().flat_map(|&w| rtpd_list.iter().map(move |&t| (w, t))).collect();
    let eval = |&(w, t): &(u32, f64)| sweep_point(base, t, w, opts);
    #[cfg(feature = "parallel")]
    let blocks: Vec<Vec<SweepRow>> = {
        use rayon::prelude::*;
        points.par_iter().map(eval).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<Vec<SweepRow>> = points.iter().map(eval).collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    // An empty sweep still gets its header.
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::invalid("csv header", header.join(",")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
