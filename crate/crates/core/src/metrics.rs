//! Safety metrics derived from per-frame drivable areas.

use serde::{Deserialize, Serialize};

use crate::error::{FsmError, Result};
use crate::raster::GroundRaster;
use crate::reachability::ReachablePerTau;

/// Relative frame-spacing deviation tolerated before a timeline is rejected.
pub const CADENCE_JITTER: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauArea {
    pub tau: f64,
    pub nonempty: bool,
    pub area_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub t: f64,
    pub drivable_per_tau: Vec<TauArea>,
    /// First τ with an empty drivable area, or `H + Δτ` when there is none.
    pub generalized_ttc: f64,
    /// Set when `generalized_ttc` holds the sentinel.
    pub no_violation: bool,
    pub frame_violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationInterval {
    pub t_start: f64,
    /// End of the last violating frame's slot (its `t` plus one cadence).
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaDelta {
    pub t: f64,
    /// `area(t, τ) − area(t − k, τ)` for every τ.
    pub delta_m2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub frame_violation_rate: f64,
    pub fsm_violations: Vec<ViolationInterval>,
    /// Per frame, drivable area at every τ.
    pub area_series: Vec<Vec<f64>>,
    pub area_delta_series: Vec<AreaDelta>,
}

/// Metrics of one frame from its drivable masks at τ = 0…H.
pub fn frame_metrics(t: f64, drivable: &[ReachablePerTau], horizon: f64, dt: f64) -> FrameResult {
    frame_metrics_from_masks(t, drivable.iter().map(|r| &r.occupied_mask), horizon, dt)
}

/// Rounds to the nanosecond so step multiples print as written (3.3, not
/// 3.3000000000000003).
fn snap(tau: f64) -> f64 {
    (tau * 1e9).round() / 1e9
}

pub fn frame_metrics_from_masks<'a>(
    t: f64,
    masks: impl IntoIterator<Item = &'a GroundRaster>,
    horizon: f64,
    dt: f64,
) -> FrameResult {
    let drivable_per_tau: Vec<TauArea> = masks
        .into_iter()
        .enumerate()
        .map(|(k, m)| TauArea {
            tau: snap(k as f64 * dt),
            nonempty: !m.is_empty(),
            area_m2: m.area_m2(),
        })
        .collect();
    let first_empty = drivable_per_tau.iter().find(|a| !a.nonempty).map(|a| a.tau);
    let frame_violation = drivable_per_tau.last().is_none_or(|a| !a.nonempty);
    FrameResult {
        t,
        generalized_ttc: first_empty.unwrap_or(snap(horizon + dt)),
        no_violation: first_empty.is_none(),
        frame_violation,
        drivable_per_tau,
    }
}

/// Rate, FSM violations and area series over a timeline sampled every
/// `cadence` seconds. `r` is the minimum violation duration and `k` the lag
/// of the area-delta series.
pub fn scenario_metrics(
    frames: &[FrameResult],
    cadence: f64,
    r: f64,
    k: f64,
) -> Result<ScenarioMetrics> {
    if cadence.is_nan() || cadence <= 0.0 || r < 0.0 || k < 0.0 {
        return Err(FsmError::config(
            "cadence must be positive, r and k non-negative",
        ));
    }
    for w in frames.windows(2) {
        let gap = w[1].t - w[0].t;
        if (gap - cadence).abs() > CADENCE_JITTER * cadence {
            return Err(FsmError::validation(format!(
                "frame spacing {gap:.4} s at t={:.3} deviates from cadence {cadence} s",
                w[0].t
            )));
        }
    }

    let violating = frames.iter().filter(|f| f.frame_violation).count();
    let frame_violation_rate = if frames.is_empty() {
        0.0
    } else {
        violating as f64 / frames.len() as f64
    };

    let mut fsm_violations = Vec::new();
    let mut i = 0;
    while i < frames.len() {
        if !frames[i].frame_violation {
            i += 1;
            continue;
        }
        let start = i;
        while i < frames.len() && frames[i].frame_violation {
            i += 1;
        }
        let duration = (i - start) as f64 * cadence;
        if duration >= r - 1e-9 {
            fsm_violations.push(ViolationInterval {
                t_start: frames[start].t,
                t_end: frames[i - 1].t + cadence,
            });
        }
    }

    let area_series: Vec<Vec<f64>> = frames
        .iter()
        .map(|f| f.drivable_per_tau.iter().map(|a| a.area_m2).collect())
        .collect();
    let lag = (k / cadence).round() as usize;
    let area_delta_series = (lag..frames.len())
        .map(|i| AreaDelta {
            t: frames[i].t,
            delta_m2: area_series[i]
                .iter()
                .zip(&area_series[i - lag])
                .map(|(now, then)| now - then)
                .collect(),
        })
        .collect();

    Ok(ScenarioMetrics {
        frame_violation_rate,
        fsm_violations,
        area_series,
        area_delta_series,
    })
}
