//! Scenario files, run configuration, the per-frame analysis pipeline,
//! synthetic scenario generators and frame rendering.

mod pipeline;
mod render;
mod sweep;
pub mod synth;

pub use pipeline::{
    analyze, analyze_frame, AnalysisReport, ArtifactOptions, FrameArtifacts, FrameOutput,
};
pub use render::render_frame;
pub use sweep::{sweep, write_sweep_csv, SweepParam, SweepRow};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{FsmError, Result};
use crate::kinematics::{AgentBody, KinematicState};
use crate::reachability::{
    AgentInput, AssumptionSet, EgoLaneRestriction, ProfilePair, RoadUserType,
};
use crate::roadgraph::Roadgraph;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Ego,
    Oru,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: String,
    pub role: Role,
    #[serde(default)]
    pub kind: RoadUserType,
    pub body: AgentBody,
}

/// Observed state of one agent at one real time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservedState {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
    pub yaw: f64,
    pub speed: f64,
    #[serde(default)]
    pub accel_long: f64,
    #[serde(default)]
    pub accel_lat: f64,
}

impl ObservedState {
    pub fn kinematic(&self) -> KinematicState {
        KinematicState {
            x: self.x,
            y: self.y,
            yaw: self.yaw,
            speed: self.speed,
            accel_long: self.accel_long,
            accel_lat: self.accel_lat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineEntry {
    pub t: f64,
    pub states: BTreeMap<String, ObservedState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    /// Spacing of timeline entries [s].
    pub cadence_s: f64,
    pub roadgraph: Roadgraph,
    pub agents: Vec<AgentSpec>,
    pub timeline: Vec<TimelineEntry>,
}

impl Scenario {
    /// Checks every invariant and builds the roadgraph lookup tables.
    pub fn validate(&mut self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(FsmError::validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.cadence_s.is_nan() || self.cadence_s <= 0.0 {
            return Err(FsmError::validation("cadence_s must be positive"));
        }
        self.roadgraph.build()?;

        let mut ids = BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            if !ids.insert(a.id.as_str()) {
                return Err(FsmError::validation(format!(
                    "agents[{i}]: duplicate id '{}'",
                    a.id
                )));
            }
            a.body
                .validate()
                .map_err(|e| FsmError::validation(format!("agents[{i}] ('{}'): {e}", a.id)))?;
        }
        match self.agents.iter().filter(|a| a.role == Role::Ego).count() {
            0 => return Err(FsmError::validation("no ego agent")),
            1 => {}
            n => {
                return Err(FsmError::validation(format!(
                    "{n} ego agents; exactly one allowed"
                )))
            }
        }

        if self.timeline.is_empty() {
            return Err(FsmError::validation("timeline is empty"));
        }
        for (i, entry) in self.timeline.iter().enumerate() {
            if let Some(missing) = ids.iter().find(|id| !entry.states.contains_key(**id)) {
                return Err(FsmError::validation(format!(
                    "timeline[{i}]: no state for agent '{missing}'"
                )));
            }
            if let Some(extra) = entry.states.keys().find(|k| !ids.contains(k.as_str())) {
                return Err(FsmError::validation(format!(
                    "timeline[{i}]: state for unknown agent '{extra}'"
                )));
            }
            if let Some((id, _)) = entry
                .states
                .iter()
                .find(|(_, s)| s.speed.is_nan() || s.speed < 0.0)
            {
                return Err(FsmError::validation(format!(
                    "timeline[{i}].states.{id}: speed must be non-negative"
                )));
            }
        }
        for (i, w) in self.timeline.windows(2).enumerate() {
            let gap = w[1].t - w[0].t;
            if (gap - self.cadence_s).abs() > crate::metrics::CADENCE_JITTER * self.cadence_s {
                return Err(FsmError::validation(format!(
                    "timeline[{}]: spacing {gap:.4} s does not match cadence {} s",
                    i + 1,
                    self.cadence_s
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut s: Scenario = serde_path_to_error::deserialize(de)
            .map_err(|e| FsmError::validation(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Canonical text form: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn ego(&self) -> &AgentSpec {
        self.agents
            .iter()
            .find(|a| a.role == Role::Ego)
            .expect("validated scenario has an ego")
    }

    /// Agent inputs at timeline entry `frame`, ego first.
    pub fn agent_inputs(&self, frame: usize) -> (AgentInput, Vec<AgentInput>) {
        let entry = &self.timeline[frame];
        let input = |a: &AgentSpec| {
            let s = &entry.states[&a.id];
            AgentInput {
                id: a.id.clone(),
                kind: a.kind,
                body: a.body,
                state: s.kinematic(),
                z: s.z,
            }
        };
        let ego = input(self.ego());
        let orus = self
            .agents
            .iter()
            .filter(|a| a.role == Role::Oru)
            .map(input)
            .collect();
        (ego, orus)
    }

    /// Drops the named agents from the scenario.
    pub fn without_agents(&self, ids: &[&str]) -> Scenario {
        let mut s = self.clone();
        s.agents.retain(|a| !ids.contains(&a.id.as_str()));
        for e in &mut s.timeline {
            e.states.retain(|k, _| !ids.contains(&k.as_str()));
        }
        s
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| FsmError::io(path.display().to_string(), e))?;
    Scenario::from_json(&text).map_err(|e| match e {
        FsmError::Validation(m) => FsmError::validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json())
        .map_err(|e| FsmError::io(path.display().to_string(), e))
}

/// Everything that controls an analysis run besides the scenario itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub assumptions: AssumptionSet,
    pub ego_lane_restriction: EgoLaneRestriction,
    /// Minimum duration of an FSM violation [s].
    pub r: f64,
    /// Lag of the area-delta series [s].
    pub k: f64,
    pub seed: u64,
    pub render: bool,
    /// Limits for the ego in place of its road-user type's defaults.
    pub ego_profiles: Option<ProfilePair>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            assumptions: AssumptionSet::default(),
            ego_lane_restriction: EgoLaneRestriction::Unrestricted,
            r: 1.0,
            k: 1.0,
            seed: 0,
            render: false,
            ego_profiles: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.assumptions.validate()?;
        if let Some(p) = &self.ego_profiles {
            p.normal.validate()?;
            p.surprising.validate()?;
            if !p.normal.is_within(&p.surprising) {
                return Err(FsmError::config(
                    "ego_profiles: normal limits must lie within the surprising limits",
                ));
            }
        }
        if self.r < 0.0 || self.k < 0.0 {
            return Err(FsmError::config("r and k must be non-negative"));
        }
        Ok(())
    }

    pub fn ego_profiles(&self, kind: RoadUserType) -> ProfilePair {
        self.ego_profiles
            .unwrap_or(*self.assumptions.profiles(kind))
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let c: RunConfig =
            serde_path_to_error::deserialize(de).map_err(|e| FsmError::config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| FsmError::io(path.display().to_string(), e))?;
    RunConfig::from_json(&text).map_err(|e| match e {
        FsmError::Config(m) => FsmError::config(format!("{}: {m}", path.display())),
        other => other,
    })
}
