//! Throughput and queue occupancy of a TCP bulk download to a single
//! 802.11 station behind a long-delay path.
//!
//! The pipeline has three parts:
//!
//! * [`mac`] turns PHY/MAC parameters into mean service times of the AP
//!   (TCP data, RTS/CTS) and the STA (TCP ACKs, basic access).
//! * [`qnet`] feeds those into a closed three-center network whose
//!   population is the TCP window and solves it exactly.
//! * [`des`] simulates the same loop packet by packet as a cross-check.
//!
//! ```
//! use wlan_bcmp::{analyze, Scenario};
//!
//! let a = analyze(&Scenario::new(10.0, 70)).unwrap();
//! assert!(a.solution.t_h > 300.0 && a.solution.t_h < 360.0);
//! ```

pub mod des;
pub mod error;
pub mod mac;
pub mod oracle;
pub mod params;
pub mod qnet;
pub mod reference;
pub mod sweep;

pub use error::{Error, Result};
pub use mac::DcfServiceModel;
pub use params::{load_scenario, PhyMacParams, Scenario};
pub use qnet::{QnetSolution, QnetSpec};

/// Service model and network solution for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub model: DcfServiceModel,
    pub spec: QnetSpec,
    pub solution: QnetSolution,
}

/// Runs the analytical pipeline: DCF service times, then the convolution
/// solver.
pub fn analyze(scn: &Scenario) -> Result<Analysis> {
    scn.validate()?;
    let model = mac::build_service_model(&scn.params, scn.modes())?;
    let spec = QnetSpec::from_model(&model, scn);
    let solution = qnet::solve_convolution(&spec)?;
    Ok(Analysis { model, spec, solution })
}
