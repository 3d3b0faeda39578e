//! Workloads shared by the benchmarks.

use fsm_core::scenario::synth::{synth_tailgate, TailgateParams};
use fsm_core::Scenario;

/// Tailgating freeway frame with five agents: ego, lead, two neighbors and
/// a trailing car.
pub fn five_agent_scenario() -> Scenario {
    let mut p = TailgateParams::new(0.5, 30.0, 3);
    p.trailer_gap_s = Some(1.0);
    p.duration_s = 0.5;
    synth_tailgate(&p)
}
