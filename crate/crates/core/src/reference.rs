//! Published reference tables and the deviation report that compares a
//! sweep against them.
//!
//! The tables are shipped as CSV files under `data/` and embedded at build
//! time. Tables II–IV were measured with a 70-packet window, Table V with
//! 100 packets.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mac::mean_backoff;
use crate::params::{BackoffMode, PhyMacParams};
use crate::sweep::{Source, SweepRow};

/// Relative deviation above which a compared row is flagged.
pub const DEVIATION_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableId {
    /// Mean packets in the AP buffer.
    Table2,
    /// Mean packets in flight.
    Table3,
    /// Mean packets in the STA buffer.
    Table4,
    /// AP throughput, packets/s.
    Table5,
}

impl TableId {
    pub const ALL: [TableId; 4] = [TableId::Table2, TableId::Table3, TableId::Table4, TableId::Table5];

    pub fn window(self) -> u32 {
        match self {
            TableId::Table5 => 100,
            _ => 70,
        }
    }

    pub fn observable(self) -> &'static str {
        match self {
            TableId::Table2 => "n_ap",
            TableId::Table3 => "n_flight",
            TableId::Table4 => "n_sta",
            TableId::Table5 => "throughput_pps",
        }
    }

    fn raw(self) -> &'static str {
        match self {
            TableId::Table2 => include_str!("../data/table2_ap_buffer.csv"),
            TableId::Table3 => include_str!("../data/table3_in_flight.csv"),
            TableId::Table4 => include_str!("../data/table4_sta_buffer.csv"),
            TableId::Table5 => include_str!("../data/table5_throughput.csv"),
        }
    }

    /// The observable this table reports, read from a sweep row.
    pub fn pick(self, row: &SweepRow) -> Option<f64> {
        match self {
            TableId::Table2 => row.n_ap,
            TableId::Table3 => row.n_flight,
            TableId::Table4 => row.n_sta,
            TableId::Table5 => row.throughput_pps,
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            TableId::Table2 => 2,
            TableId::Table3 => 3,
            TableId::Table4 => 4,
            TableId::Table5 => 5,
        };
        write!(f, "table{n}")
    }
}

impl FromStr for TableId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table2" => Ok(TableId::Table2),
            "table3" => Ok(TableId::Table3),
            "table4" => Ok(TableId::Table4),
            "table5" => Ok(TableId::Table5),
            _ => Err(Error::invalid("compare", format!("{s:?} is not one of table2..table5"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ReferenceRow {
    pub rtpd_ms: f64,
    pub analysis: f64,
    pub sim_mean: f64,
    pub sim_max: f64,
    pub sim_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub id: TableId,
    pub rows: Vec<ReferenceRow>,
}

impl ReferenceTable {
    pub fn at(&self, rtpd_ms: f64) -> Option<&ReferenceRow> {
        self.rows.iter().find(|r| r.rtpd_ms == rtpd_ms)
    }

    pub fn rtpd_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rtpd_ms).collect()
    }

    /// The table's analysis column as `paper` sweep rows.
    pub fn paper_rows(&self) -> Vec<SweepRow> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = SweepRow {
                    rtpd_ms: r.rtpd_ms,
                    window: self.id.window(),
                    source: Source::Paper,
                    throughput_pps: None,
                    n_ap: None,
                    n_sta: None,
                    n_flight: None,
                    ci_low: None,
                    ci_high: None,
                };
                let slot = match self.id {
                    TableId::Table2 => &mut row.n_ap,
                    TableId::Table3 => &mut row.n_flight,
                    TableId::Table4 => &mut row.n_sta,
                    TableId::Table5 => &mut row.throughput_pps,
                };
                *slot = Some(r.analysis);
                row
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTables {
    pub tables: Vec<ReferenceTable>,
}

impl ReferenceTables {
    /// Parses the embedded data files.
    pub fn bundled() -> Result<Self> {
        let tables = TableId::ALL
            .iter()
            .map(|&id| {
                let mut r = csv::Reader::from_reader(id.raw().as_bytes());
                let rows = r.deserialize().collect::<std::result::Result<Vec<ReferenceRow>, _>>()?;
                Ok(ReferenceTable { id, rows })
            })
            .collect::<Result<_>>()?;
        Ok(Self { tables })
    }

    pub fn get(&self, id: TableId) -> &ReferenceTable {
        self.tables.iter().find(|t| t.id == id).expect("every table is bundled")
    }

    pub fn raw_csv(id: TableId) -> &'static str {
        id.raw()
    }
}

fn rel_dev(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationRow {
    pub rtpd_ms: f64,
    pub paper_analysis: f64,
    pub analysis: Option<f64>,
    pub analysis_dev: Option<f64>,
    pub paper_sim: f64,
    pub sim: Option<f64>,
    pub sim_ci: Option<(f64, f64)>,
    pub sim_dev: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviationSummary {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl DeviationSummary {
    fn of(devs: impl Iterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = devs.collect();
        if v.is_empty() {
            return None;
        }
        Some(Self {
            max: v.iter().copied().fold(0.0, f64::max),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            count: v.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub table: TableId,
    pub window: u32,
    pub threshold: f64,
    pub rows: Vec<DeviationRow>,
    pub analysis_summary: Option<DeviationSummary>,
    pub sim_summary: Option<DeviationSummary>,
}

impl DeviationReport {
    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }
}

/// Compares the sweep rows at the table's window against the table's
/// analysis column (for `analysis` rows) and simulation means (for `sim`
/// rows). Every RTPD of the table must be covered by at least one source.
pub fn compare_with_paper(rows: &[SweepRow], table: &ReferenceTable) -> Result<DeviationReport> {
    let window = table.id.window();
    let find = |src: Source, t: f64| {
        rows.iter().find(|r| r.source == src && r.window == window && r.rtpd_ms == t)
    };
    let mut out = Vec::with_capacity(table.rows.len());
    let mut missing = Vec::new();
    for reference in &table.rows {
        let t = reference.rtpd_ms;
        let a = find(Source::Analysis, t).and_then(|r| table.id.pick(r));
        let s_row = find(Source::Sim, t);
        let s = s_row.and_then(|r| table.id.pick(r));
        if a.is_none() && s.is_none() {
            missing.push(t);
            continue;
        }
        let analysis_dev = a.map(|v| rel_dev(v, reference.analysis));
        let sim_dev = s.map(|v| rel_dev(v, reference.sim_mean));
        let sim_ci = match (table.id, s_row) {
            (TableId::Table5, Some(r)) => r.ci_low.zip(r.ci_high),
            _ => None,
        };
        let flagged = analysis_dev.into_iter().chain(sim_dev).any(|d| d > DEVIATION_THRESHOLD);
        out.push(DeviationRow {
            rtpd_ms: t,
            paper_analysis: reference.analysis,
            analysis: a,
            analysis_dev,
            paper_sim: reference.sim_mean,
            sim: s,
            sim_ci,
            sim_dev,
            flagged,
        });
    }
    if !missing.is_empty() {
        return Err(Error::GridMismatch(format!(
            "{} needs window {window} at rtpd_ms {missing:?}",
            table.id
        )));
    }
    Ok(DeviationReport {
        table: table.id,
        window,
        threshold: DEVIATION_THRESHOLD,
        analysis_summary: DeviationSummary::of(out.iter().filter_map(|r| r.analysis_dev)),
        sim_summary: DeviationSummary::of(out.iter().filter_map(|r| r.sim_dev)),
        rows: out,
    })
}

/// One row of the in-flight versus throughput·RTPD check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LittleRow {
    pub rtpd_ms: f64,
    pub n_flight: f64,
    pub throughput_pps: f64,
    /// `throughput · rtpd`.
    pub predicted: f64,
    pub residual: f64,
}

/// Little's law on the published data: in-flight packets of Table III
/// against Table V throughput times the delay, per column.
pub fn little_cross_check(tables: &ReferenceTables, column: Source) -> Vec<LittleRow> {
    let flight = tables.get(TableId::Table3);
    let thr = tables.get(TableId::Table5);
    flight
        .rows
        .iter()
        .filter_map(|f| {
            let x = thr.at(f.rtpd_ms)?;
            let (n, th) = match column {
                Source::Sim => (f.sim_mean, x.sim_mean),
                _ => (f.analysis, x.analysis),
            };
            let predicted = th * f.rtpd_ms / 1e3;
            Some(LittleRow {
                rtpd_ms: f.rtpd_ms,
                n_flight: n,
                throughput_pps: th,
                predicted,
                residual: rel_dev(n, predicted),
            })
        })
        .collect()
}

/// Analytical throughput against the simulated confidence interval at one
/// grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSimRow {
    pub rtpd_ms: f64,
    pub window: u32,
    pub analysis: f64,
    pub sim_mid: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `|analysis - mid| / mid`.
    pub deviation: f64,
}

/// Pairs every analysis row with the sim row of the same grid point.
pub fn model_vs_sim(rows: &[SweepRow]) -> Vec<ModelSimRow> {
    rows.iter()
        .filter(|r| r.source == Source::Analysis)
        .filter_map(|a| {
            let s = rows.iter().find(|s| {
                s.source == Source::Sim && s.window == a.window && s.rtpd_ms == a.rtpd_ms
            })?;
            let (lo, hi) = s.ci_low.zip(s.ci_high)?;
            let analysis = a.throughput_pps?;
            let mid = 0.5 * (lo + hi);
            Some(ModelSimRow {
                rtpd_ms: a.rtpd_ms,
                window: a.window,
                analysis,
                sim_mid: mid,
                ci_low: lo,
                ci_high: hi,
                deviation: rel_dev(analysis, mid),
            })
        })
        .collect()
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.prec$}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{:.2}%", 100.0 * x))
}

impl fmt::Display for DeviationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} ({}), window {}; rows deviating more than {:.0}% are flagged",
            self.table,
            self.table.observable(),
            self.window,
            100.0 * self.threshold
        )?;
        writeln!(
            f,
            "{:>8} {:>10} {:>10} {:>8} {:>10} {:>10} {:>8}  flag",
            "rtpd_ms", "paper_an", "analysis", "dev", "paper_sim", "sim", "dev"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>8} {:>10.3} {:>10} {:>8} {:>10.3} {:>10} {:>8}  {}",
                r.rtpd_ms,
                r.paper_analysis,
                opt(r.analysis, 3),
                pct(r.analysis_dev),
                r.paper_sim,
                opt(r.sim, 3),
                pct(r.sim_dev),
                if r.flagged { "*" } else { "" }
            )?;
        }
        for (name, s) in [("analysis", self.analysis_summary), ("sim", self.sim_summary)] {
            if let Some(s) = s {
                writeln!(
                    f,
                    "{name} vs paper: max {:.2}%, mean {:.2}% over {} rows",
                    100.0 * s.max,
                    100.0 * s.mean,
                    s.count
                )?;
            }
        }
        writeln!(f, "{} of {} rows flagged", self.flagged(), self.rows.len())
    }
}

/// Human-readable report: the table comparison, the model-versus-simulator
/// gap per grid point, and Little's law checked on the published data.
pub fn render_report(
    report: &DeviationReport,
    rows: &[SweepRow],
    tables: &ReferenceTables,
    params: &PhyMacParams,
    analysis_backoff: BackoffMode,
) -> String {
    let mut s = report.to_string();
    let pairs = model_vs_sim(rows);
    if !pairs.is_empty() {
        let eb = |m| mean_backoff(1, params, m).unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            "\nanalysis vs simulator throughput (analysis backoff {:?}: first-stage mean {} slots; \
             simulator standard 802.11: {} slots)",
            analysis_backoff,
            eb(analysis_backoff),
            eb(BackoffMode::Standard)
        );
        let _ = writeln!(s, "{:>8} {:>6} {:>10} {:>10} {:>21} {:>8}", "rtpd_ms", "window", "analysis", "sim_mid", "sim 95% ci", "dev");
        for p in pairs {
            let _ = writeln!(
                s,
                "{:>8} {:>6} {:>10.3} {:>10.3} {:>10.3}..{:<10.3} {:>7.2}%",
                p.rtpd_ms,
                p.window,
                p.analysis,
                p.sim_mid,
                p.ci_low,
                p.ci_high,
                100.0 * p.deviation
            );
        }
    }
    let _ = writeln!(s, "\npublished in-flight vs throughput x rtpd (table3 vs table5)");
    let _ = writeln!(s, "{:>8} {:>10} {:>10} {:>10} {:>8} {:>10} {:>10} {:>8}", "rtpd_ms", "an_flight", "an_thr*t", "an_thr", "resid", "sim_flight", "sim_thr*t", "resid");
    let an = little_cross_check(tables, Source::Analysis);
    let sim = little_cross_check(tables, Source::Sim);
    for (a, b) in an.iter().zip(&sim) {
        let _ = writeln!(
            s,
            "{:>8} {:>10.3} {:>10.3} {:>10.2} {:>7.2}% {:>10.3} {:>10.3} {:>7.2}%",
            a.rtpd_ms,
            a.n_flight,
            a.predicted,
            a.throughput_pps,
            100.0 * a.residual,
            b.n_flight,
            b.predicted,
            100.0 * b.residual
        );
    }
    s
}
