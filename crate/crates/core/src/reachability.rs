//! Sampled reachable sets for other road users and the ego.
//!
//! Every agent is rolled out as a fixed bundle of trajectory samples
//! (particles): `S_PER` fixed-control particles on the friction-ellipse
//! perimeter and `S_INT` interior particles that draw a fresh random
//! setpoint every step. Projection onto the ground raster then prunes
//! particles that leave the permitted area or, for the ego, touch another
//! road user's occupied area at the same future time. Death is permanent,
//! so a particle alive at the horizon is a conflict-free trajectory.

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{FsmError, Result};
use crate::geometry::Bounds;
use crate::kinematics::{
    perimeter_angle, sample_interior_control, step, AgentBody, ControlTarget, KinematicProfile,
    KinematicState,
};
use crate::raster::{box_coverage, Coverage, GroundRaster, RasterSpec};
use crate::roadgraph::{lane_restriction, permitted_mask, LaneSet, Roadgraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RoadUserType {
    #[default]
    LightVehicle,
    Cyclist,
    Pedestrian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePair {
    pub normal: KinematicProfile,
    pub surprising: KinematicProfile,
}

impl ProfilePair {
    pub fn light_vehicle() -> Self {
        ProfilePair {
            normal: KinematicProfile::light_vehicle_normal(),
            surprising: KinematicProfile::light_vehicle_surprising(),
        }
    }

    pub fn cyclist() -> Self {
        ProfilePair {
            normal: KinematicProfile {
                speed_min: 0.0,
                speed_max: 12.0,
                accel_min: -2.0,
                accel_max: 1.5,
                lat_accel_max: 1.5,
                jerk_decel: 2.0,
                jerk_accel: 1.5,
                jerk_lat: 1.0,
                replanning_delay: Some(1.0),
            },
            surprising: KinematicProfile {
                speed_min: 0.0,
                speed_max: 15.0,
                accel_min: -5.0,
                accel_max: 3.0,
                lat_accel_max: 4.0,
                jerk_decel: 6.0,
                jerk_accel: 4.0,
                jerk_lat: 4.0,
                replanning_delay: None,
            },
        }
    }

    pub fn pedestrian() -> Self {
        ProfilePair {
            normal: KinematicProfile {
                speed_min: 0.0,
                speed_max: 2.5,
                accel_min: -1.5,
                accel_max: 1.5,
                lat_accel_max: 1.5,
                jerk_decel: 3.0,
                jerk_accel: 3.0,
                jerk_lat: 3.0,
                replanning_delay: Some(1.0),
            },
            surprising: KinematicProfile {
                speed_min: 0.0,
                speed_max: 6.0,
                accel_min: -4.0,
                accel_max: 3.0,
                lat_accel_max: 4.0,
                jerk_decel: 10.0,
                jerk_accel: 10.0,
                jerk_lat: 10.0,
                replanning_delay: None,
            },
        }
    }

    pub fn replanning_delay(&self) -> f64 {
        self.normal.replanning_delay.unwrap_or(0.0)
    }

    fn validate(&self, what: &str) -> Result<()> {
        self.normal.validate()?;
        self.surprising.validate()?;
        if !self.normal.is_within(&self.surprising) {
            return Err(FsmError::config(format!(
                "{what}: normal limits must lie within the surprising limits"
            )));
        }
        if self.normal.replanning_delay.is_none() {
            return Err(FsmError::config(format!(
                "{what}: normal profile needs a replanning delay"
            )));
        }
        Ok(())
    }
}

/// Kinematic limits per road-user type plus the non-kinematic knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssumptionSet {
    pub light_vehicle: ProfilePair,
    pub cyclist: ProfilePair,
    pub pedestrian: ProfilePair,
    /// Δτ [s].
    pub time_step: f64,
    /// H [s].
    pub horizon: f64,
    /// ε [rad].
    pub lane_align_eps: f64,
    /// δ [m].
    pub raster_resolution: f64,
    pub interior_samples: usize,
    pub perimeter_samples: usize,
    /// Vertical distance beyond which a lane is not assigned [m].
    pub z_max: f64,
    /// Spatial margin added around ORU boxes in occupied areas [m].
    pub padding: f64,
}

impl Default for AssumptionSet {
    fn default() -> Self {
        AssumptionSet {
            light_vehicle: ProfilePair::light_vehicle(),
            cyclist: ProfilePair::cyclist(),
            pedestrian: ProfilePair::pedestrian(),
            time_step: 0.1,
            horizon: 4.0,
            lane_align_eps: 30f64.to_radians(),
            raster_resolution: 0.3,
            interior_samples: 100,
            perimeter_samples: 32,
            z_max: 3.0,
            padding: 0.0,
        }
    }
}

impl AssumptionSet {
    pub fn validate(&self) -> Result<()> {
        self.light_vehicle.validate("light_vehicle")?;
        self.cyclist.validate("cyclist")?;
        self.pedestrian.validate("pedestrian")?;
        let ratio = self.horizon / self.time_step;
        if self.time_step <= 0.0 || self.horizon <= 0.0 || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(FsmError::config("time_step must divide horizon"));
        }
        if !(self.lane_align_eps > 0.0 && self.lane_align_eps < std::f64::consts::FRAC_PI_2) {
            return Err(FsmError::config("lane_align_eps must lie in (0, π/2)"));
        }
        if self.raster_resolution <= 0.0 || self.z_max <= 0.0 || self.padding < 0.0 {
            return Err(FsmError::config(
                "raster_resolution and z_max must be positive, padding non-negative",
            ));
        }
        if self.perimeter_samples < 4 {
            return Err(FsmError::config("perimeter_samples must be at least 4"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.time_step).round() as usize
    }

    pub fn profiles(&self, kind: RoadUserType) -> &ProfilePair {
        match kind {
            RoadUserType::LightVehicle => &self.light_vehicle,
            RoadUserType::Cyclist => &self.cyclist,
            RoadUserType::Pedestrian => &self.pedestrian,
        }
    }

    pub fn tau(&self, index: usize) -> f64 {
        index as f64 * self.time_step
    }
}

/// Which limits apply at each future time: `before` until `switch_at`,
/// `after` from then on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSchedule {
    pub before: KinematicProfile,
    pub after: KinematicProfile,
    pub switch_at: f64,
}

impl ProfileSchedule {
    pub fn constant(p: KinematicProfile) -> Self {
        ProfileSchedule {
            before: p,
            after: p,
            switch_at: 0.0,
        }
    }

    /// Normal limits during the replanning delay, responder limits after.
    pub fn ego(pair: &ProfilePair) -> Self {
        ProfileSchedule {
            before: pair.normal,
            after: pair.surprising,
            switch_at: pair.replanning_delay(),
        }
    }

    pub fn profile_at(&self, tau: f64) -> &KinematicProfile {
        if tau < self.switch_at - 1e-9 {
            &self.before
        } else {
            &self.after
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleKind {
    Perimeter,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub state: KinematicState,
    /// Setpoint applied on the step that produced `state` (the first
    /// setpoint at τ = 0).
    pub control: ControlTarget,
    pub kind: ParticleKind,
    pub alive: bool,
    /// Perimeter particles only.
    pub birth_control_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachablePerTau {
    pub tau_index: usize,
    pub occupied_mask: GroundRaster,
    pub alive_particles: Vec<Particle>,
}

/// One agent's observed situation at the analyzed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentInput {
    pub id: String,
    pub kind: RoadUserType,
    pub body: AgentBody,
    pub state: KinematicState,
    pub z: f64,
}

/// Unpruned trajectory samples: `per_tau[k][p]` is particle `p` at step `k`.
#[derive(Debug, Clone)]
pub struct Trajectories {
    pub per_tau: Vec<Vec<Particle>>,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit key for an agent id.
pub fn agent_key(id: &str) -> u64 {
    // FNV-1a
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed of the private random stream of one particle.
pub fn stream_seed(seed: u64, frame: u64, agent: u64, particle: u64) -> u64 {
    [frame, agent, particle]
        .iter()
        .fold(splitmix(seed), |acc, v| splitmix(acc ^ splitmix(*v)))
}

/// Propagates every particle over the horizon without any pruning.
pub fn sample_trajectories(
    initial: &KinematicState,
    body: &AgentBody,
    schedule: &ProfileSchedule,
    assumptions: &AssumptionSet,
    stream: impl Fn(u64) -> u64,
) -> Trajectories {
    let steps = assumptions.steps();
    let dt = assumptions.time_step;
    let n_per = assumptions.perimeter_samples;
    let n = n_per + assumptions.interior_samples;
    let mut per_tau: Vec<Vec<Particle>> = (0..=steps).map(|_| Vec::with_capacity(n)).collect();

    for p in 0..n {
        let angle = (p < n_per).then(|| perimeter_angle(p, n_per));
        let kind = if angle.is_some() {
            ParticleKind::Perimeter
        } else {
            ParticleKind::Interior
        };
        let mut rng = ChaCha8Rng::seed_from_u64(stream(p as u64));
        let mut state = *initial;
        for k in 0..steps {
            let profile = schedule.profile_at(assumptions.tau(k));
            let control = match angle {
                Some(theta) => profile.perimeter_point(theta),
                None => sample_interior_control(profile, &mut rng),
            };
            if k == 0 {
                per_tau[0].push(Particle {
                    state,
                    control,
                    kind,
                    alive: true,
                    birth_control_angle: angle,
                });
            }
            state = step(&state, control, profile, body, dt);
            per_tau[k + 1].push(Particle {
                state,
                control,
                kind,
                alive: true,
                birth_control_angle: angle,
            });
        }
    }
    Trajectories { per_tau }
}

/// Rasterizes trajectories, killing particles that leave `permitted` or
/// touch `obstacles[τ]`. τ = 0 is the observed box and is never pruned.
pub fn project(
    traj: &Trajectories,
    body: &AgentBody,
    spec: &RasterSpec,
    padding: f64,
    permitted: Option<&GroundRaster>,
    obstacles: Option<&[GroundRaster]>,
) -> Vec<ReachablePerTau> {
    let mut cov = Coverage::default();
    let mut alive = vec![true; traj.per_tau.first().map_or(0, Vec::len)];
    let mut out = Vec::with_capacity(traj.per_tau.len());
    for (k, particles) in traj.per_tau.iter().enumerate() {
        let mut mask = GroundRaster::empty(*spec);
        let mut survivors = Vec::new();
        for (p, particle) in particles.iter().enumerate() {
            if !alive[p] {
                continue;
            }
            let s = &particle.state;
            box_coverage(
                spec,
                s.x,
                s.y,
                s.yaw,
                body.length,
                body.width,
                padding,
                &mut cov,
            );
            if k > 0 {
                let leaves = permitted.is_some_and(|m| !m.contains_coverage(&cov));
                let hits = !leaves && obstacles.is_some_and(|o| o[k].intersects_coverage(&cov));
                if leaves || hits {
                    alive[p] = false;
                    continue;
                }
            }
            mask.set_coverage(&cov);
            survivors.push(*particle);
        }
        out.push(ReachablePerTau {
            tau_index: k,
            occupied_mask: mask,
            alive_particles: survivors,
        });
    }
    out
}

/// Rolls one agent out under `schedule` and prunes against `permitted`.
#[allow(clippy::too_many_arguments)]
pub fn rollout_agent(
    initial: &KinematicState,
    body: &AgentBody,
    schedule: &ProfileSchedule,
    permitted: &GroundRaster,
    assumptions: &AssumptionSet,
    padding: f64,
    stream: impl Fn(u64) -> u64,
) -> Vec<ReachablePerTau> {
    let traj = sample_trajectories(initial, body, schedule, assumptions, stream);
    project(
        &traj,
        body,
        permitted.spec(),
        padding,
        Some(permitted),
        None,
    )
}

/// Occupied areas of one other road user.
#[derive(Debug, Clone)]
pub struct OruOccupancy {
    pub id: String,
    pub lanes: LaneSet,
    pub per_tau: Vec<ReachablePerTau>,
}

/// Raster covering the road around the agents with room for the furthest
/// reach within the horizon.
pub fn frame_raster_spec(
    graph: &Roadgraph,
    agents: &[AgentInput],
    assumptions: &AssumptionSet,
) -> RasterSpec {
    let mut around = Bounds::empty();
    let mut reach: f64 = 0.0;
    for a in agents {
        around.include([a.state.x, a.state.y]);
        let p = assumptions.profiles(a.kind).surprising;
        reach = reach.max(p.speed_max * assumptions.horizon + a.body.length);
    }
    let road = graph.bounds().expand(assumptions.raster_resolution);
    let b = if around.is_empty() {
        road
    } else {
        let crop = road.intersect(&around.expand(reach + 1.0));
        if crop.is_empty() {
            road
        } else {
            crop
        }
    };
    RasterSpec::covering(&b, assumptions.raster_resolution)
}

fn restriction_for(agent: &AgentInput, graph: &Roadgraph, assumptions: &AssumptionSet) -> LaneSet {
    let p = assumptions.profiles(agent.kind).surprising;
    let depth = p.speed_max * assumptions.horizon + agent.body.length;
    lane_restriction(
        &agent.body,
        &agent.state,
        agent.z,
        graph,
        assumptions.lane_align_eps,
        assumptions.z_max,
        depth,
    )
}

/// Per-ORU occupied areas under initiator limits. ORUs do not interact, so
/// each one is computed independently (and in parallel).
pub fn compute_occupied_areas(
    orus: &[AgentInput],
    graph: &Roadgraph,
    spec: &RasterSpec,
    assumptions: &AssumptionSet,
    seed: u64,
    frame: u64,
) -> Vec<OruOccupancy> {
    orus.par_iter()
        .map(|oru| {
            let lanes = restriction_for(oru, graph, assumptions);
            if lanes == LaneSet::Unrestricted {
                debug!("ORU '{}' has no lane restriction", oru.id);
            }
            let permitted = permitted_mask(&lanes, graph, spec);
            let schedule = ProfileSchedule::constant(assumptions.profiles(oru.kind).surprising);
            let key = agent_key(&oru.id);
            let per_tau = rollout_agent(
                &oru.state,
                &oru.body,
                &schedule,
                &permitted,
                assumptions,
                assumptions.padding,
                |p| stream_seed(seed, frame, key, p),
            );
            OruOccupancy {
                id: oru.id.clone(),
                lanes,
                per_tau,
            }
        })
        .collect()
}

/// Union of all ORU occupied masks at each τ.
pub fn union_occupied(
    oru_areas: &[OruOccupancy],
    spec: &RasterSpec,
    steps: usize,
) -> Vec<GroundRaster> {
    (0..=steps)
        .map(|k| {
            let mut m = GroundRaster::empty(*spec);
            for o in oru_areas {
                m.union_into(&o.per_tau[k].occupied_mask);
            }
            m
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EgoLaneRestriction {
    /// Limited only by the physical road.
    #[default]
    Unrestricted,
    /// Same lane rules as other road users.
    InLane,
}

/// Ego reachable sets at the three pruning levels.
#[derive(Debug, Clone)]
pub struct EgoLayers {
    pub lanes: LaneSet,
    pub permitted: GroundRaster,
    /// No pruning at all.
    pub kinematic: Vec<GroundRaster>,
    /// Pruned by the roadgraph only.
    pub road: Vec<GroundRaster>,
    /// Pruned by the roadgraph and by ORU occupied areas.
    pub drivable: Vec<ReachablePerTau>,
}

#[allow(clippy::too_many_arguments)]
pub fn compute_ego_layers(
    ego: &AgentInput,
    profiles: &ProfilePair,
    oru_areas: &[OruOccupancy],
    graph: &Roadgraph,
    spec: &RasterSpec,
    assumptions: &AssumptionSet,
    restriction: EgoLaneRestriction,
    seed: u64,
    frame: u64,
) -> EgoLayers {
    let lanes = match restriction {
        EgoLaneRestriction::Unrestricted => LaneSet::Unrestricted,
        EgoLaneRestriction::InLane => restriction_for(ego, graph, assumptions),
    };
    let permitted = permitted_mask(&lanes, graph, spec);
    let obstacles = union_occupied(oru_areas, spec, assumptions.steps());
    let schedule = ProfileSchedule::ego(profiles);
    let key = agent_key(&ego.id);
    let traj = sample_trajectories(&ego.state, &ego.body, &schedule, assumptions, |p| {
        stream_seed(seed, frame, key, p)
    });
    let masks = |v: Vec<ReachablePerTau>| v.into_iter().map(|r| r.occupied_mask).collect();
    let kinematic = masks(project(&traj, &ego.body, spec, 0.0, None, None));
    let road = masks(project(&traj, &ego.body, spec, 0.0, Some(&permitted), None));
    let drivable = project(
        &traj,
        &ego.body,
        spec,
        0.0,
        Some(&permitted),
        Some(&obstacles),
    );
    EgoLayers {
        lanes,
        permitted,
        kinematic,
        road,
        drivable,
    }
}

/// Ego drivable areas: normal limits until the replanning delay, responder
/// limits after, pruned by the roadgraph and by ORU occupied areas.
#[allow(clippy::too_many_arguments)]
pub fn compute_drivable_area(
    ego: &AgentInput,
    oru_areas: &[OruOccupancy],
    graph: &Roadgraph,
    spec: &RasterSpec,
    assumptions: &AssumptionSet,
    restriction: EgoLaneRestriction,
    seed: u64,
    frame: u64,
) -> Vec<ReachablePerTau> {
    let profiles = assumptions.profiles(ego.kind);
    compute_ego_layers(
        ego,
        profiles,
        oru_areas,
        graph,
        spec,
        assumptions,
        restriction,
        seed,
        frame,
    )
    .drivable
}

pub const ORACLE_MAX_HORIZON: f64 = 1.5;
pub const ORACLE_MAX_GRID: usize = 5;

/// Control grid used by the exhaustive oracle: `grid_n²` normalized points,
/// corners pulled radially onto the ellipse. `grid_n = 1` is the zero
/// control.
fn oracle_controls(profile: &KinematicProfile, grid_n: usize) -> Vec<ControlTarget> {
    let axis = |i: usize| {
        if grid_n == 1 {
            0.0
        } else {
            -1.0 + 2.0 * i as f64 / (grid_n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(grid_n * grid_n);
    for i in 0..grid_n {
        for j in 0..grid_n {
            let (mut u, mut v) = (axis(i), axis(j));
            let r = u.hypot(v);
            if r > 1.0 {
                u /= r;
                v /= r;
            }
            let a = if u >= 0.0 {
                u * profile.accel_max
            } else {
                -u * profile.accel_min
            };
            out.push(ControlTarget::new(a, v * profile.lat_accel_max));
        }
    }
    out
}

/// Exhaustive reference rollout over a `grid_n × grid_n` control grid at
/// every step, with states merged on a coarse lattice. Only for short
/// horizons; refuses anything beyond the caps.
pub fn dense_oracle_rollout(
    initial: &KinematicState,
    body: &AgentBody,
    schedule: &ProfileSchedule,
    permitted: &GroundRaster,
    assumptions: &AssumptionSet,
    grid_n: usize,
) -> Result<Vec<ReachablePerTau>> {
    if assumptions.horizon > ORACLE_MAX_HORIZON + 1e-9 {
        return Err(FsmError::OracleTooLarge(format!(
            "horizon {} s exceeds {ORACLE_MAX_HORIZON} s",
            assumptions.horizon
        )));
    }
    if grid_n == 0 || grid_n > ORACLE_MAX_GRID {
        return Err(FsmError::OracleTooLarge(format!(
            "grid_n {grid_n} outside 1..={ORACLE_MAX_GRID}"
        )));
    }
    let spec = *permitted.spec();
    let dt = assumptions.time_step;
    let q_xy = spec.resolution / 3.0;
    let key = |s: &KinematicState| {
        (
            (s.x / q_xy).round() as i64,
            (s.y / q_xy).round() as i64,
            (s.yaw / 0.005).round() as i64,
            (s.speed / 0.05).round() as i64,
            (s.accel_long / 0.1).round() as i64,
            (s.accel_lat / 0.1).round() as i64,
        )
    };

    let mut cov = Coverage::default();
    let mut out = Vec::new();
    let mut frontier = vec![*initial];
    let s = initial;
    box_coverage(
        &spec,
        s.x,
        s.y,
        s.yaw,
        body.length,
        body.width,
        0.0,
        &mut cov,
    );
    out.push(ReachablePerTau {
        tau_index: 0,
        occupied_mask: GroundRaster::from_coverage(spec, &cov),
        alive_particles: Vec::new(),
    });

    for k in 0..assumptions.steps() {
        let profile = schedule.profile_at(assumptions.tau(k));
        let controls = oracle_controls(profile, grid_n);
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        let mut mask = GroundRaster::empty(spec);
        for st in &frontier {
            for &c in &controls {
                let n = step(st, c, profile, body, dt);
                if !seen.insert(key(&n)) {
                    continue;
                }
                box_coverage(
                    &spec,
                    n.x,
                    n.y,
                    n.yaw,
                    body.length,
                    body.width,
                    0.0,
                    &mut cov,
                );
                if !permitted.contains_coverage(&cov) {
                    continue;
                }
                mask.set_coverage(&cov);
                next.push(n);
            }
        }
        out.push(ReachablePerTau {
            tau_index: k + 1,
            occupied_mask: mask,
            alive_particles: Vec::new(),
        });
        frontier = next;
    }
    Ok(out)
}
