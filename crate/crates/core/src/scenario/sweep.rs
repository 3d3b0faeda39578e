use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use super::{analyze, ArtifactOptions, RunConfig, Scenario};
use crate::error::{FsmError, Result};
use crate::reachability::EgoLaneRestriction;

/// Assumption varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Ego replanning delay ρ [s].
    ReplanningDelay,
    /// Ego responder braking limit a⁻ [m/s²].
    AMin,
    /// Ego lane restriction: `unrestricted` or `in_lane`.
    Roadgraph,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::ReplanningDelay => "replanning_delay",
            SweepParam::AMin => "a_min",
            SweepParam::Roadgraph => "roadgraph",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(&self, base: &RunConfig, scenario: &Scenario, value: &str) -> Result<RunConfig> {
        let mut cfg = base.clone();
        let number = || {
            value.trim().parse::<f64>().map_err(|_| {
                FsmError::config(format!("{}: '{value}' is not a number", self.name()))
            })
        };
        let mut pair = base.ego_profiles(scenario.ego().kind);
        match self {
            SweepParam::ReplanningDelay => {
                pair.normal.replanning_delay = Some(number()?);
                cfg.ego_profiles = Some(pair);
            }
            SweepParam::AMin => {
                pair.surprising.accel_min = number()?;
                cfg.ego_profiles = Some(pair);
            }
            SweepParam::Roadgraph => {
                cfg.ego_lane_restriction = match value.trim() {
                    "unrestricted" => EgoLaneRestriction::Unrestricted,
                    "in_lane" | "in-lane" => EgoLaneRestriction::InLane,
                    other => {
                        return Err(FsmError::config(format!(
                            "roadgraph: expected 'unrestricted' or 'in_lane', got '{other}'"
                        )))
                    }
                };
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepParam {
    type Err = FsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replanning_delay" => Ok(SweepParam::ReplanningDelay),
            "a_min" => Ok(SweepParam::AMin),
            "roadgraph" => Ok(SweepParam::Roadgraph),
            other => Err(FsmError::config(format!(
                "unknown sweep parameter '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    /// Scenario name.
    pub agent: String,
    pub frame_violation_rate: f64,
}

/// Frame violation rate of every scenario at every value, ordered by value
/// then by scenario.
pub fn sweep(
    scenarios: &[Scenario],
    base: &RunConfig,
    param: SweepParam,
    values: &[String],
) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(&String, &Scenario)> = values
        .iter()
        .flat_map(|v| scenarios.iter().map(move |s| (v, s)))
        .collect();
    jobs.par_iter()
        .map(|(value, scenario)| {
            let cfg = param.apply(base, scenario, value)?;
            let (report, _) = analyze(scenario, &cfg, ArtifactOptions::default())?;
            Ok(SweepRow {
                param: param.name().to_string(),
                value: value.trim().to_string(),
                agent: scenario.name.clone(),
                frame_violation_rate: report.metrics.frame_violation_rate,
            })
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| FsmError::io("sweep table", std::io::Error::other(e)))?;
    }
    w.flush().map_err(|e| FsmError::io("sweep table", e))
}
