use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use wlan_bcmp::des::{run_replication_traced, SimConfig};
use wlan_bcmp::params::{BackoffMode, CollisionMode, ScenarioConfig, SuccessModel, DEFAULT_WINDOW};
use wlan_bcmp::reference::{compare_with_paper, render_report, ReferenceTables, TableId};
use wlan_bcmp::sweep::{point_seed, run_sweep, write_csv, SweepMode, SweepOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Analysis,
    Sim,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CollisionArg {
    PaperLiteral,
    AckOnly,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackoffArg {
    Paper,
    Standard,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuccessArg {
    PerAttempt,
    PaperLiteral,
}

/// Sweep TCP download throughput and queue occupancy of a single-STA
/// 802.11 WLAN over round-trip delays and windows.
#[derive(Debug, Parser)]
#[command(name = "wlan-bcmp", version)]
struct Args {
    /// JSON scenario document; absent keys take the 802.11b defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-separated round-trip propagation delays, ms.
    #[arg(long = "rtpd-ms", value_delimiter = ',', allow_negative_numbers = true)]
    rtpd_ms: Vec<f64>,

    /// Comma-separated TCP windows, packets.
    #[arg(long, value_delimiter = ',')]
    window: Vec<u32>,

    #[arg(long, value_enum, default_value = "analysis")]
    mode: Mode,

    /// Simulation replications per grid point.
    #[arg(long, default_value_t = 20)]
    replications: u32,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Simulated seconds per replication; the first 10% is warmup.
    #[arg(long = "sim-time-s", default_value_t = 300.0)]
    sim_time_s: f64,

    #[arg(long = "collision-mode", value_enum)]
    collision_mode: Option<CollisionArg>,

    #[arg(long = "backoff-mode", value_enum)]
    backoff_mode: Option<BackoffArg>,

    #[arg(long = "success-model", value_enum)]
    success_model: Option<SuccessArg>,

    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Compare against a bundled reference table (table2..table5).
    #[arg(long)]
    compare: Option<String>,

    /// Write the event trace of the first simulated grid point here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn run(args: Args) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ScenarioConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(m) = args.collision_mode {
        cfg.collision_mode = Some(match m {
            CollisionArg::PaperLiteral => CollisionMode::PaperLiteral,
            CollisionArg::AckOnly => CollisionMode::AckOnly,
        });
    }
    if let Some(m) = args.backoff_mode {
        cfg.backoff_mode = Some(match m {
            BackoffArg::Paper => BackoffMode::Paper,
            BackoffArg::Standard => BackoffMode::Standard,
        });
    }
    if let Some(m) = args.success_model {
        cfg.success_model = Some(match m {
            SuccessArg::PerAttempt => SuccessModel::PerAttempt,
            SuccessArg::PaperLiteral => SuccessModel::PaperLiteral,
        });
    }

    let tables = ReferenceTables::bundled()?;
    let compare: Option<TableId> = args.compare.as_deref().map(str::parse).transpose()?;

    let rtpd_list = if !args.rtpd_ms.is_empty() {
        args.rtpd_ms.clone()
    } else if let Some(id) = compare {
        tables.get(id).rtpd_grid()
    } else {
        vec![cfg.tau_rtpd_ms.context("missing tau_rtpd: pass --rtpd-ms or set tau_rtpd_ms")?]
    };
    let window_list = if !args.window.is_empty() {
        args.window.clone()
    } else if let Some(id) = compare {
        vec![id.window()]
    } else {
        vec![cfg.window.unwrap_or(DEFAULT_WINDOW)]
    };

    // The grid supplies delay and window; validate the rest through the
    // regular loader.
    cfg.tau_rtpd_ms.get_or_insert(rtpd_list[0]);
    let base = cfg.into_scenario()?;

    let mode = match args.mode {
        Mode::Analysis => SweepMode::Analysis,
        Mode::Sim => SweepMode::Sim,
        Mode::Both => SweepMode::Both,
    };
    let opts = SweepOptions {
        mode,
        replications: args.replications,
        seed: args.seed,
        sim: SimConfig::with_horizon(args.sim_time_s),
    };
    let mut rows = run_sweep(&base, &rtpd_list, &window_list, &opts)?;

    let report = match compare {
        Some(id) => {
            let table = tables.get(id);
            let report = compare_with_paper(&rows, table)?;
            rows.extend(
                table.paper_rows().into_iter().filter(|p| window_list.contains(&p.window) && rtpd_list.contains(&p.rtpd_ms)),
            );
            Some(render_report(&report, &rows, &tables, &base.params, base.backoff_mode))
        }
        None => None,
    };

    if let Some(path) = &args.trace {
        let scn = wlan_bcmp::Scenario { tau_rtpd_ms: rtpd_list[0], window: window_list[0], ..base };
        let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        run_replication_traced(&scn, point_seed(args.seed, rtpd_list[0], window_list[0]), opts.sim, &mut out)?;
        out.flush()?;
    }

    match &args.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, BufWriter::new(f))?;
            if let Some(r) = report {
                print!("{r}");
            }
        }
        None => {
            write_csv(&rows, io::stdout().lock())?;
            if let Some(r) = report {
                eprint!("{r}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
