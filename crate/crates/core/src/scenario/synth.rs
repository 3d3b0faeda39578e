//! Synthetic analogs of the following-distance, same-direction lateral
//! incursion and straight-crossing-path case studies.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use super::{AgentSpec, ObservedState, Role, Scenario, TimelineEntry, SCHEMA_VERSION};
use crate::geometry::Point;
use crate::kinematics::AgentBody;
use crate::reachability::RoadUserType;
use crate::roadgraph::{Lane, Roadgraph};

pub const LANE_WIDTH: f64 = 3.5;

fn car(id: &str, role: Role) -> AgentSpec {
    AgentSpec {
        id: id.to_string(),
        role,
        kind: RoadUserType::LightVehicle,
        body: AgentBody::car(),
    }
}

fn cruise(x: f64, y: f64, yaw: f64, speed: f64) -> ObservedState {
    ObservedState {
        x,
        y,
        z: 0.0,
        yaw,
        speed,
        accel_long: 0.0,
        accel_lat: 0.0,
    }
}

fn frame_times(duration_s: f64, cadence_s: f64) -> Vec<f64> {
    let n = (duration_s / cadence_s).round() as usize;
    (0..n.max(1)).map(|i| i as f64 * cadence_s).collect()
}

fn assemble(
    name: String,
    cadence_s: f64,
    roadgraph: Roadgraph,
    agents: Vec<AgentSpec>,
    times: &[f64],
    mut state_at: impl FnMut(&str, f64) -> ObservedState,
) -> Scenario {
    let timeline = times
        .iter()
        .map(|&t| TimelineEntry {
            t,
            states: agents
                .iter()
                .map(|a| (a.id.clone(), state_at(&a.id, t)))
                .collect::<BTreeMap<_, _>>(),
        })
        .collect();
    let mut s = Scenario {
        schema_version: SCHEMA_VERSION,
        name,
        cadence_s,
        roadgraph,
        agents,
        timeline,
    };
    s.validate().expect("generated scenario is valid");
    s
}

/// Parallel eastbound lanes numbered from the south, lane `i` centered at
/// `y = (i + 0.5)·w`, with an optional shoulder north of the last lane.
fn freeway(lanes: usize, length: f64, shoulder_m: f64) -> Roadgraph {
    let ls = (0..lanes)
        .map(|i| {
            let y = (i as f64 + 0.5) * LANE_WIDTH;
            Lane::straight(&format!("lane{i}"), [0.0, y], [length, y], LANE_WIDTH, 0.0)
        })
        .collect();
    let top = lanes as f64 * LANE_WIDTH + shoulder_m;
    Roadgraph::new(
        ls,
        vec![[0.0, 0.0], [length, 0.0], [length, top], [0.0, top]],
    )
    .expect("freeway geometry is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailgateParams {
    /// Center-to-center time gap to the lead vehicle [s].
    pub gap_s: f64,
    pub speed: f64,
    pub lanes: usize,
    /// Ego lane, counted from the south.
    pub ego_lane: usize,
    /// Width of a paved shoulder north of the last lane [m].
    pub shoulder_m: f64,
    /// Vehicles alongside the ego in the adjacent lanes.
    pub neighbors: bool,
    /// Time gap of a car following the ego in its lane [s].
    pub trailer_gap_s: Option<f64>,
    pub duration_s: f64,
    pub cadence_s: f64,
    pub name: Option<String>,
}

impl TailgateParams {
    pub fn new(gap_s: f64, speed: f64, lanes: usize) -> Self {
        TailgateParams {
            gap_s,
            speed,
            lanes,
            ego_lane: lanes / 2,
            shoulder_m: 0.0,
            neighbors: true,
            trailer_gap_s: None,
            duration_s: 2.0,
            cadence_s: 0.1,
            name: None,
        }
    }
}

/// Straight freeway with the ego following a lead vehicle at `gap_s·speed`
/// center-to-center spacing, everybody at constant speed.
pub fn synth_tailgate(p: &TailgateParams) -> Scenario {
    assert!(p.gap_s > 0.0 && p.lanes > 0 && p.ego_lane < p.lanes);
    let x0 = 200.0;
    let spacing = p.gap_s * p.speed;
    let length = x0 + spacing + p.speed * p.duration_s + 400.0;
    let graph = freeway(p.lanes, length, p.shoulder_m);
    let lane_y = |i: usize| (i as f64 + 0.5) * LANE_WIDTH;

    let mut agents = vec![car("ego", Role::Ego), car("lead", Role::Oru)];
    let mut placed: Vec<(String, f64, f64)> = vec![
        ("ego".into(), 0.0, lane_y(p.ego_lane)),
        ("lead".into(), spacing, lane_y(p.ego_lane)),
    ];
    if p.neighbors {
        let adjacent = [p.ego_lane.checked_sub(1), Some(p.ego_lane + 1)];
        for lane in adjacent.into_iter().flatten().filter(|l| *l < p.lanes) {
            let id = format!("beside{lane}");
            agents.push(car(&id, Role::Oru));
            placed.push((id, 1.0, lane_y(lane)));
        }
    }
    if let Some(gap) = p.trailer_gap_s {
        agents.push(car("trailer", Role::Oru));
        placed.push(("trailer".into(), -gap * p.speed, lane_y(p.ego_lane)));
    }
    let name = p
        .name
        .clone()
        .unwrap_or_else(|| format!("tailgate-gap{}s", p.gap_s));
    let times = frame_times(p.duration_s, p.cadence_s);
    assemble(name, p.cadence_s, graph, agents, &times, |id, t| {
        let (_, dx, y) = placed
            .iter()
            .find(|(n, _, _)| n == id)
            .expect("placed agent");
        cruise(x0 + dx + p.speed * t, *y, 0.0, p.speed)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdliParams {
    /// Time the initiator starts moving into the ego lane [s].
    pub cut_in_time: f64,
    /// Lateral speed of the initiator during the lane change [m/s].
    pub lateral_rate: f64,
    pub ego_speed: f64,
    pub initiator_speed: f64,
    /// Center-to-center spacing when the cut-in starts [m].
    pub spacing_at_cut_in: f64,
    /// Delay from the start of the cut-in to the ego's braking [s].
    pub reaction_s: f64,
    pub brake_min: f64,
    pub brake_jerk: f64,
    /// Ego speed at which braking is released [m/s].
    pub release_speed: f64,
    pub duration_s: f64,
    pub cadence_s: f64,
}

impl SdliParams {
    pub fn new(cut_in_time: f64, lateral_rate: f64) -> Self {
        SdliParams {
            cut_in_time,
            lateral_rate,
            ego_speed: 25.0,
            initiator_speed: 22.0,
            spacing_at_cut_in: 14.0,
            reaction_s: 0.6,
            brake_min: -4.0,
            brake_jerk: 5.0,
            release_speed: 16.0,
            duration_s: 10.0,
            cadence_s: 0.1,
        }
    }
}

/// Ego speed profile: cruise, jerk-limited braking to `brake_min` after the
/// reaction time, release back to zero acceleration near `release_speed`.
/// Integrated at 1 ms; returns (x offset, speed, accel) at each sample time.
pub fn sdli_ego_script(p: &SdliParams, times: &[f64]) -> Vec<(f64, f64, f64)> {
    let dt = 1e-3;
    let t_brake = p.cut_in_time + p.reaction_s;
    let (mut x, mut v, mut a) = (0.0, p.ego_speed, 0.0);
    let mut releasing = false;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &sample in times {
        while t < sample - 1e-9 {
            let release_margin = a * a / (2.0 * p.brake_jerk);
            if t >= t_brake && !releasing && v - p.release_speed <= release_margin && a < 0.0 {
                releasing = true;
            }
            let target = if t < t_brake || releasing {
                0.0
            } else {
                p.brake_min
            };
            a = if target < a {
                (a - p.brake_jerk * dt).max(target)
            } else {
                (a + p.brake_jerk * dt).min(target)
            };
            x += v * dt + 0.5 * a * dt * dt;
            v = (v + a * dt).max(0.0);
            t += dt;
        }
        out.push((x, v, a));
    }
    out
}

/// Two eastbound lanes; the initiator moves from the north lane into the
/// ego lane ahead of the ego, which then brakes and drops back.
pub fn synth_sdli(p: &SdliParams) -> Scenario {
    assert!(p.cut_in_time >= 0.0 && p.lateral_rate > 0.0);
    let x0 = 200.0;
    let length = x0 + p.ego_speed.max(p.initiator_speed) * p.duration_s + 400.0;
    let graph = freeway(2, length, 0.0);
    let (ego_y, far_y) = (0.5 * LANE_WIDTH, 1.5 * LANE_WIDTH);
    let times = frame_times(p.duration_s, p.cadence_s);
    let script = sdli_ego_script(p, &times);
    let d0 = p.spacing_at_cut_in + (p.ego_speed - p.initiator_speed) * p.cut_in_time;
    let lc_duration = (far_y - ego_y) / p.lateral_rate;

    let agents = vec![car("ego", Role::Ego), car("initiator", Role::Oru)];
    assemble(
        "sdli".into(),
        p.cadence_s,
        graph,
        agents,
        &times,
        |id, t| {
            if id == "ego" {
                let (dx, v, a) = script[(t / p.cadence_s).round() as usize];
                let mut s = cruise(x0 + dx, ego_y, 0.0, v);
                s.accel_long = a;
                s
            } else {
                let x = x0 + d0 + p.initiator_speed * t;
                let into = ((t - p.cut_in_time) / lc_duration).clamp(0.0, 1.0);
                let moving = into > 0.0 && into < 1.0;
                let yaw = if moving {
                    (-p.lateral_rate).atan2(p.initiator_speed)
                } else {
                    0.0
                };
                let speed = if moving {
                    p.initiator_speed.hypot(p.lateral_rate)
                } else {
                    p.initiator_speed
                };
                cruise(x, far_y + (ego_y - far_y) * into, yaw, speed)
            }
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScpParams {
    /// Distance west of the crossing of the eastbound car in lane C [m].
    pub c_west_m: f64,
    /// Distance east of the crossing of the westbound car in lane B [m].
    pub b_east_m: f64,
    /// Distance east of the crossing of an extra westbound car in lane A.
    pub a_east_m: Option<f64>,
    pub cross_speed: f64,
    /// Without cross traffic only the ego remains.
    pub cross_traffic: bool,
    /// Paved margin north of lane A [m].
    pub north_shoulder_m: f64,
    /// Width of the shared middle lane [m].
    pub middle_width_m: f64,
    /// Distance from the ego's front bumper to the edge of the crossing road [m].
    pub stop_setback_m: f64,
    /// Size of the chamfer standing in for each curb return [m].
    pub corner_m: f64,
    pub duration_s: f64,
    pub cadence_s: f64,
}

impl Default for ScpParams {
    fn default() -> Self {
        ScpParams {
            c_west_m: 60.0,
            b_east_m: 55.0,
            a_east_m: None,
            cross_speed: 10.0,
            cross_traffic: true,
            north_shoulder_m: 2.0,
            middle_width_m: 4.8,
            stop_setback_m: 2.0,
            corner_m: 8.0,
            duration_s: 0.5,
            cadence_s: 0.1,
        }
    }
}

/// Lanes of the crossing road from south to north.
pub const SCP_LANES: [&str; 5] = ["D", "C", "M", "B", "A"];

/// Five-lane east-west road (D and C eastbound, shared middle lane M,
/// B and A westbound) with a minor road meeting it from the south. The
/// ego waits at the stop line of the minor road, facing north.
pub fn synth_scp(p: &ScpParams) -> Scenario {
    let half = 150.0;
    let stub = 40.0;
    let w = LANE_WIDTH;
    let widths = [w, w, p.middle_width_m, w, w];
    let edges: Vec<f64> = std::iter::once(0.0)
        .chain(widths.iter().scan(0.0, |acc, wi| {
            *acc += wi;
            Some(*acc)
        }))
        .collect();
    let y = |i: usize| 0.5 * (edges[i] + edges[i + 1]);
    let mut lanes = Vec::new();
    for (i, id) in SCP_LANES.iter().enumerate() {
        let eastbound = i <= 2;
        let (start, end) = if eastbound {
            ([-half, y(i)], [half, y(i)])
        } else {
            ([half, y(i)], [-half, y(i)])
        };
        lanes.push(Lane::straight(id, start, end, widths[i], 0.0));
    }
    lanes.push(Lane::straight(
        "minor_nb",
        [0.5 * w, -stub],
        [0.5 * w, 0.0],
        w,
        0.0,
    ));
    lanes.push(Lane::straight(
        "minor_sb",
        [-0.5 * w, 0.0],
        [-0.5 * w, -stub],
        w,
        0.0,
    ));
    let top = edges[5] + p.north_shoulder_m;
    let polygon: Vec<Point> = vec![
        [-half, 0.0],
        [-w - p.corner_m, 0.0],
        [-w, -p.corner_m],
        [-w, -stub],
        [w, -stub],
        [w, -p.corner_m],
        [w + p.corner_m, 0.0],
        [half, 0.0],
        [half, top],
        [-half, top],
    ];
    let graph = Roadgraph::new(lanes, polygon).expect("crossing geometry is valid");

    let mut agents = vec![car("ego", Role::Ego)];
    let mut movers: Vec<(String, f64, f64, f64)> = Vec::new();
    if p.cross_traffic {
        movers.push(("cross_c".into(), -p.c_west_m, y(1), 0.0));
        movers.push(("cross_b".into(), p.b_east_m, y(3), PI));
        if let Some(d) = p.a_east_m {
            movers.push(("cross_a".into(), d, y(4), PI));
        }
    }
    for (id, ..) in &movers {
        agents.push(car(id, Role::Oru));
    }
    let ego_y = -p.stop_setback_m - 0.5 * AgentBody::car().length;
    let times = frame_times(p.duration_s, p.cadence_s);
    let name = if p.cross_traffic { "scp" } else { "scp-empty" };
    assemble(name.into(), p.cadence_s, graph, agents, &times, |id, t| {
        if id == "ego" {
            return cruise(0.5 * w, ego_y, FRAC_PI_2, 0.0);
        }
        let (_, x0, yy, yaw) = movers.iter().find(|m| m.0 == id).expect("mover");
        cruise(x0 + yaw.cos() * p.cross_speed * t, *yy, *yaw, p.cross_speed)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tailgate_spacing_is_gap_times_speed() {
        for (gap, spacing) in [(0.5, 15.0), (1.5, 45.0)] {
            let s = synth_tailgate(&TailgateParams::new(gap, 30.0, 3));
            let e = &s.timeline[0].states;
            assert!((e["lead"].x - e["ego"].x - spacing).abs() < 1e-9);
            assert_eq!(s.agents.len(), 4);
            let back = Scenario::from_json(&s.to_json()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn sdli_braking_script_shape() {
        let p = SdliParams::new(2.0, 1.5);
        let times = frame_times(p.duration_s, p.cadence_s);
        let script = sdli_ego_script(&p, &times);
        let accel: Vec<f64> = script.iter().map(|s| s.2).collect();
        let (imin, amin) =
            accel
                .iter()
                .enumerate()
                .fold((0, 0.0), |m, (i, a)| if *a < m.1 { (i, *a) } else { m });
        assert!((amin - p.brake_min).abs() < 1e-6);
        assert!(times[imin] > p.cut_in_time);
        assert!(accel[..imin].iter().all(|a| *a <= 0.0));
        assert!(accel.last().unwrap().abs() < 1e-6);
        let v_end = script.last().unwrap().1;
        assert!((v_end - p.release_speed).abs() < 0.5, "{v_end}");
        synth_sdli(&p);
    }

    #[test]
    fn scp_layout() {
        let s = synth_scp(&ScpParams::default());
        assert_eq!(s.agents.len(), 3);
        let g = &s.roadgraph;
        let c = g.lane(g.lane_index("C").unwrap());
        assert_eq!(c.centerline[0].heading, 0.0);
        let b = g.lane(g.lane_index("B").unwrap());
        assert!((b.centerline[0].heading - PI).abs() < 1e-12);
        let empty = synth_scp(&ScpParams {
            cross_traffic: false,
            ..Default::default()
        });
        assert_eq!(empty.agents.len(), 1);
    }
}
