use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{render_frame, RunConfig, Scenario};
use crate::error::Result;
use crate::geometry::dist;
use crate::metrics::{frame_metrics, scenario_metrics, FrameResult, ScenarioMetrics};
use crate::raster::{GroundRaster, RasterSpec};
use crate::reachability::{
    compute_ego_layers, compute_occupied_areas, frame_raster_spec, AgentInput, AssumptionSet,
    EgoLaneRestriction, EgoLayers, OruOccupancy,
};

/// Everything computed for one frame.
#[derive(Debug, Clone)]
pub struct FrameArtifacts {
    pub t: f64,
    pub spec: RasterSpec,
    pub ego: AgentInput,
    pub orus: Vec<OruOccupancy>,
    pub layers: EgoLayers,
    pub result: FrameResult,
}

impl FrameArtifacts {
    /// Union of every ORU's occupied area at step `k`.
    pub fn oru_union(&self, k: usize) -> GroundRaster {
        let mut m = GroundRaster::empty(self.spec);
        for o in &self.orus {
            m.union_into(&o.per_tau[k].occupied_mask);
        }
        m
    }

    pub fn drivable_at_horizon(&self) -> &GroundRaster {
        &self
            .layers
            .drivable
            .last()
            .expect("at least τ = 0")
            .occupied_mask
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ArtifactOptions {
    pub svg: bool,
    pub pgm: bool,
}

/// Files produced for one frame besides its metrics.
#[derive(Debug, Clone, Default)]
pub struct FrameOutput {
    pub svg: Option<String>,
    /// (file stem, PGM bytes)
    pub pgm: Vec<(String, Vec<u8>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub scenario: String,
    pub seed: u64,
    pub ego_lane_restriction: EgoLaneRestriction,
    pub horizon_s: f64,
    pub time_step_s: f64,
    pub cadence_s: f64,
    pub frames: Vec<FrameResult>,
    pub metrics: ScenarioMetrics,
}

/// Whether two agents can come within reach of each other inside the horizon.
fn can_interact(a: &AgentInput, b: &AgentInput, assumptions: &AssumptionSet) -> bool {
    let reach = |x: &AgentInput| {
        assumptions.profiles(x.kind).surprising.speed_max * assumptions.horizon
            + x.body.length.hypot(x.body.width)
    };
    let gap = dist([a.state.x, a.state.y], [b.state.x, b.state.y]);
    gap <= reach(a) + reach(b) + 2.0 * assumptions.raster_resolution
}

/// Runs the full pipeline for timeline entry `frame`.
pub fn analyze_frame(scenario: &Scenario, config: &RunConfig, frame: usize) -> FrameArtifacts {
    let a = &config.assumptions;
    let (ego, all_orus) = scenario.agent_inputs(frame);
    let orus: Vec<AgentInput> = all_orus
        .into_iter()
        .filter(|o| can_interact(&ego, o, a))
        .collect();
    let mut agents = vec![ego.clone()];
    agents.extend(orus.iter().cloned());
    let spec = frame_raster_spec(&scenario.roadgraph, &agents, a);

    let graph = &scenario.roadgraph;
    let occupied = compute_occupied_areas(&orus, graph, &spec, a, config.seed, frame as u64);
    let profiles = config.ego_profiles(ego.kind);
    let layers = compute_ego_layers(
        &ego,
        &profiles,
        &occupied,
        graph,
        &spec,
        a,
        config.ego_lane_restriction,
        config.seed,
        frame as u64,
    );
    let t = scenario.timeline[frame].t;
    let result = frame_metrics(t, &layers.drivable, a.horizon, a.time_step);
    FrameArtifacts {
        t,
        spec,
        ego,
        orus: occupied,
        layers,
        result,
    }
}

fn outputs(scenario: &Scenario, art: &FrameArtifacts, opts: ArtifactOptions) -> FrameOutput {
    let mut out = FrameOutput::default();
    if opts.svg {
        out.svg = Some(render_frame(scenario, art));
    }
    if opts.pgm {
        let stem = |what: &str| format!("t{:06}ms_{what}", art.result.t_index());
        let last = art.layers.kinematic.len() - 1;
        out.pgm
            .push((stem("drivable_h"), art.drivable_at_horizon().to_pgm()));
        out.pgm
            .push((stem("occupied_h"), art.oru_union(last).to_pgm()));
        out.pgm
            .push((stem("permitted"), art.layers.permitted.to_pgm()));
    }
    out
}

/// Analyzes every frame, in parallel across frames, and reduces them into
/// the scenario metrics in timeline order.
pub fn analyze(
    scenario: &Scenario,
    config: &RunConfig,
    opts: ArtifactOptions,
) -> Result<(AnalysisReport, Vec<FrameOutput>)> {
    config.validate()?;
    let n = scenario.timeline.len();
    info!("analyzing '{}': {n} frames", scenario.name);
    let per_frame: Vec<(FrameResult, FrameOutput)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let art = analyze_frame(scenario, config, i);
            let out = outputs(scenario, &art, opts);
            (art.result, out)
        })
        .collect();
    let (frames, files): (Vec<_>, Vec<_>) = per_frame.into_iter().unzip();
    let metrics = scenario_metrics(&frames, scenario.cadence_s, config.r, config.k)?;
    let a = &config.assumptions;
    let report = AnalysisReport {
        scenario: scenario.name.clone(),
        seed: config.seed,
        ego_lane_restriction: config.ego_lane_restriction,
        horizon_s: a.horizon,
        time_step_s: a.time_step,
        cadence_s: scenario.cadence_s,
        frames,
        metrics,
    };
    Ok((report, files))
}

impl FrameResult {
    /// Frame time in whole milliseconds, used in artifact file names.
    pub fn t_index(&self) -> i64 {
        (self.t * 1000.0).round() as i64
    }
}
