//! Lane-level map, agent footprints and the lane-based limits on where an
//! agent may be expected to go.

use log::debug;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use crate::error::{FsmError, Result};
use crate::geometry::{
    closest_on_segment, dist, point_in_polygon, polyline_distance, polyline_length,
    self_intersection, wrap_angle, Bounds, Point,
};
use crate::kinematics::{AgentBody, KinematicState};
use crate::raster::{rasterize_polygon, GroundRaster, RasterSpec};

const HEADING_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub centerline: Vec<LanePoint>,
    pub left_boundary: Vec<Point>,
    pub right_boundary: Vec<Point>,
    #[serde(default)]
    pub successors: Vec<String>,
}

impl Lane {
    /// Straight lane from `start` to `end` with constant `width` and `z`.
    pub fn straight(id: &str, start: Point, end: Point, width: f64, z: f64) -> Lane {
        let heading = (end[1] - start[1]).atan2(end[0] - start[0]);
        let (s, c) = heading.sin_cos();
        let (nx, ny) = (-s * 0.5 * width, c * 0.5 * width);
        Lane {
            id: id.to_string(),
            centerline: vec![
                LanePoint {
                    x: start[0],
                    y: start[1],
                    z,
                    heading,
                },
                LanePoint {
                    x: end[0],
                    y: end[1],
                    z,
                    heading,
                },
            ],
            left_boundary: vec![[start[0] + nx, start[1] + ny], [end[0] + nx, end[1] + ny]],
            right_boundary: vec![[start[0] - nx, start[1] - ny], [end[0] - nx, end[1] - ny]],
            successors: Vec::new(),
        }
    }

    pub fn with_successors(mut self, ids: &[&str]) -> Lane {
        self.successors = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn centerline_xy(&self) -> Vec<Point> {
        self.centerline.iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.centerline_xy())
    }

    /// Area between the two boundaries.
    pub fn polygon(&self) -> Vec<Point> {
        self.left_boundary
            .iter()
            .copied()
            .chain(self.right_boundary.iter().rev().copied())
            .collect()
    }

    /// Centerline point nearest to `p`: (heading, z).
    fn nearest_heading_z(&self, p: Point) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for w in self.centerline.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (q, t) = closest_on_segment(p, [a.x, a.y], [b.x, b.y]);
            let d = dist(p, q);
            if d < best.0 {
                let heading = a.heading + t * wrap_angle(b.heading - a.heading);
                best = (d, heading, a.z + t * (b.z - a.z));
            }
        }
        (best.1, best.2)
    }

    fn validate(&self) -> Result<()> {
        let err = |m: String| Err(FsmError::validation(format!("lane '{}': {m}", self.id)));
        if self.centerline.len() < 2 {
            return err("centerline needs at least 2 points".into());
        }
        if self.left_boundary.len() < 2 || self.right_boundary.len() < 2 {
            return err("boundaries need at least 2 points".into());
        }
        let n = self.centerline.len();
        for (i, p) in self.centerline.iter().enumerate() {
            let mut dirs = Vec::with_capacity(2);
            if i + 1 < n {
                let q = &self.centerline[i + 1];
                dirs.push((q.y - p.y).atan2(q.x - p.x));
            }
            if i > 0 {
                let q = &self.centerline[i - 1];
                dirs.push((p.y - q.y).atan2(p.x - q.x));
            }
            let mean = if dirs.len() == 2 {
                dirs[0] + 0.5 * wrap_angle(dirs[1] - dirs[0])
            } else {
                dirs[0]
            };
            dirs.push(mean);
            let ok = dirs
                .iter()
                .any(|d| wrap_angle(p.heading - d).abs() <= HEADING_TOL);
            if !ok {
                return err(format!(
                    "centerline point {i} heading {} disagrees with centerline direction",
                    p.heading
                ));
            }
        }
        let dir = |a: Point, b: Point| [b[0] - a[0], b[1] - a[1]];
        let c = self.centerline_xy();
        let dc = dir(c[0], c[n - 1]);
        for (name, line) in [
            ("left", &self.left_boundary),
            ("right", &self.right_boundary),
        ] {
            let d = dir(line[0], line[line.len() - 1]);
            if dc[0] * d[0] + dc[1] * d[1] <= 0.0 {
                return err(format!("{name} boundary runs against the centerline"));
            }
        }
        if let Some((i, j)) = self_intersection(&self.polygon()) {
            return err(format!("lane polygon self-intersects (edges {i} and {j})"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Roadgraph {
    pub lanes: Vec<Lane>,
    pub road_polygon: Vec<Point>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    #[serde(skip)]
    successor_idx: Vec<Vec<usize>>,
}

impl PartialEq for Roadgraph {
    fn eq(&self, other: &Self) -> bool {
        self.lanes == other.lanes && self.road_polygon == other.road_polygon
    }
}

impl Roadgraph {
    pub fn new(lanes: Vec<Lane>, road_polygon: Vec<Point>) -> Result<Self> {
        let mut g = Roadgraph {
            lanes,
            road_polygon,
            index: HashMap::new(),
            successor_idx: Vec::new(),
        };
        g.build()?;
        Ok(g)
    }

    /// Validates the graph and builds lookup tables. Needed after
    /// deserialization.
    pub fn build(&mut self) -> Result<()> {
        self.index.clear();
        for (i, lane) in self.lanes.iter().enumerate() {
            if self.index.insert(lane.id.clone(), i).is_some() {
                return Err(FsmError::validation(format!(
                    "duplicate lane id '{}'",
                    lane.id
                )));
            }
        }
        if self.road_polygon.len() < 3 {
            return Err(FsmError::validation("road polygon needs at least 3 points"));
        }
        if let Some((i, j)) = self_intersection(&self.road_polygon) {
            return Err(FsmError::validation(format!(
                "road polygon self-intersects (edges {i} and {j})"
            )));
        }
        let mut succ = Vec::with_capacity(self.lanes.len());
        for lane in &self.lanes {
            lane.validate()?;
            let mut ids = Vec::new();
            for s in &lane.successors {
                match self.index.get(s) {
                    Some(&j) => ids.push(j),
                    None => {
                        return Err(FsmError::validation(format!(
                            "lane '{}' has dangling successor '{s}'",
                            lane.id
                        )))
                    }
                }
            }
            succ.push(ids);
            for p in lane.left_boundary.iter().chain(&lane.right_boundary) {
                if !self.point_on_road(*p, 1e-6) {
                    return Err(FsmError::validation(format!(
                        "lane '{}' extends outside the road polygon at ({}, {})",
                        lane.id, p[0], p[1]
                    )));
                }
            }
        }
        self.successor_idx = succ;
        Ok(())
    }

    fn point_on_road(&self, p: Point, tol: f64) -> bool {
        if point_in_polygon(p, &self.road_polygon) {
            return true;
        }
        let mut ring = self.road_polygon.clone();
        ring.push(ring[0]);
        polyline_distance(p, &ring) <= tol
    }

    pub fn lane_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn lane(&self, idx: usize) -> &Lane {
        &self.lanes[idx]
    }

    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.successor_idx[idx]
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::of_points(&self.road_polygon)
    }

    pub fn ids(&self, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&i| self.lanes[i].id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub circles: Vec<Circle>,
}

impl Footprint {
    pub fn center(&self) -> Point {
        let n = self.circles.len() as f64;
        let (sx, sy) = self
            .circles
            .iter()
            .fold((0.0, 0.0), |(a, b), c| (a + c.x, b + c.y));
        [sx / n, sy / n]
    }

    pub fn covers(&self, p: Point) -> bool {
        self.circles
            .iter()
            .any(|c| dist([c.x, c.y], p) <= c.r + 1e-12)
    }

    fn touches_polyline(&self, line: &[Point]) -> bool {
        self.circles
            .iter()
            .any(|c| polyline_distance([c.x, c.y], line) <= c.r)
    }
}

/// `ceil(length / width)` circles of radius `width / √2`, evenly spaced
/// along the heading axis.
pub fn agent_footprint(body: &AgentBody, state: &KinematicState) -> Footprint {
    let n = ((body.length / body.width) - 1e-9).ceil().max(1.0) as usize;
    let r = body.width / std::f64::consts::SQRT_2;
    let spacing = body.length / n as f64;
    let (s, c) = state.yaw.sin_cos();
    let circles = (0..n)
        .map(|i| {
            let off = -0.5 * body.length + (i as f64 + 0.5) * spacing;
            Circle {
                x: state.x + off * c,
                y: state.y + off * s,
                r,
            }
        })
        .collect();
    Footprint { circles }
}

/// Lanes an agent is currently assigned to. An empty result means the agent
/// carries no lane restriction: either it overlaps an anti-aligned lane or
/// it covers no aligned lane.
pub fn seed_lanes(
    footprint: &Footprint,
    agent_yaw: f64,
    agent_z: f64,
    graph: &Roadgraph,
    align_eps: f64,
    z_max: f64,
) -> BTreeSet<usize> {
    let center = footprint.center();
    let mut seed = BTreeSet::new();
    for (i, lane) in graph.lanes.iter().enumerate() {
        let covered = footprint.touches_polyline(&lane.centerline_xy())
            || footprint.touches_polyline(&lane.left_boundary)
            || footprint.touches_polyline(&lane.right_boundary);
        if !covered {
            continue;
        }
        let (heading, z) = lane.nearest_heading_z(center);
        if (agent_z - z).abs() >= z_max {
            continue;
        }
        let d = wrap_angle(agent_yaw - heading).abs();
        if d > std::f64::consts::PI - align_eps {
            return BTreeSet::new();
        }
        if d < align_eps {
            seed.insert(i);
        }
    }
    seed
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by index
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Seed lanes plus every downstream lane whose start lies within
/// `max_depth_m` of centerline travel from the seed.
pub fn available_lanes(
    seed: &BTreeSet<usize>,
    graph: &Roadgraph,
    max_depth_m: f64,
) -> BTreeSet<usize> {
    let mut start = vec![f64::INFINITY; graph.lanes.len()];
    let mut heap = BinaryHeap::new();
    for &s in seed {
        start[s] = 0.0;
        heap.push(Frontier(0.0, s));
    }
    while let Some(Frontier(d, i)) = heap.pop() {
        if d > start[i] {
            continue;
        }
        let next = d + graph.lanes[i].length();
        if next > max_depth_m {
            continue;
        }
        for &j in graph.successors(i) {
            if next < start[j] {
                start[j] = next;
                heap.push(Frontier(next, j));
            }
        }
    }
    start
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite())
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LaneSet {
    /// Limited only by the physical road.
    Unrestricted,
    Lanes(BTreeSet<usize>),
}

pub fn permitted_mask(lanes: &LaneSet, graph: &Roadgraph, spec: &RasterSpec) -> GroundRaster {
    match lanes {
        LaneSet::Unrestricted => rasterize_polygon(spec, &graph.road_polygon),
        LaneSet::Lanes(set) => {
            let mut mask = GroundRaster::empty(*spec);
            for &i in set {
                mask.union_into(&rasterize_polygon(spec, &graph.lanes[i].polygon()));
            }
            mask
        }
    }
}

/// Footprint → seed → downstream closure, as one call.
pub fn lane_restriction(
    body: &AgentBody,
    state: &KinematicState,
    agent_z: f64,
    graph: &Roadgraph,
    align_eps: f64,
    z_max: f64,
    max_depth_m: f64,
) -> LaneSet {
    let fp = agent_footprint(body, state);
    if !fp
        .circles
        .iter()
        .any(|c| graph.point_on_road([c.x, c.y], c.r))
    {
        debug!(
            "agent at ({:.1}, {:.1}) is off the road polygon; no lane restriction",
            state.x, state.y
        );
        return LaneSet::Unrestricted;
    }
    let seed = seed_lanes(&fp, state.yaw, agent_z, graph, align_eps, z_max);
    if seed.is_empty() {
        LaneSet::Unrestricted
    } else {
        LaneSet::Lanes(available_lanes(&seed, graph, max_depth_m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RasterSpec;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn two_lane_road() -> Roadgraph {
        // two eastbound lanes, 3.5 m each, y in [0, 7]
        Roadgraph::new(
            vec![
                Lane::straight("R", [0.0, 1.75], [100.0, 1.75], 3.5, 0.0),
                Lane::straight("L", [0.0, 5.25], [100.0, 5.25], 3.5, 0.0),
            ],
            vec![[0.0, 0.0], [100.0, 0.0], [100.0, 7.0], [0.0, 7.0]],
        )
        .unwrap()
    }

    fn ids(g: &Roadgraph, s: &BTreeSet<usize>) -> Vec<String> {
        g.ids(s)
    }

    #[test]
    fn footprint_circles() {
        let st = KinematicState::default();
        let fp = agent_footprint(&AgentBody::car(), &st);
        assert_eq!(fp.circles.len(), 3);
        for c in &fp.circles {
            assert!((c.r - std::f64::consts::SQRT_2).abs() < 1e-6);
            assert_eq!(c.y, 0.0);
        }
        let sq = AgentBody {
            length: 2.0,
            ..AgentBody::car()
        };
        assert_eq!(agent_footprint(&sq, &st).circles.len(), 1);
    }

    #[test]
    fn footprint_covers_rectangle_when_rotated() {
        let body = AgentBody::car();
        for yaw in [0.0, PI / 2.0, 1.1] {
            let st = KinematicState::at_rest(3.0, -1.0, yaw);
            let fp = agent_footprint(&body, &st);
            let (s, c) = yaw.sin_cos();
            for i in 0..=48 {
                for j in 0..=20 {
                    let lx = -2.4 + 0.1 * i as f64;
                    let ly = -1.0 + 0.1 * j as f64;
                    let p = [3.0 + lx * c - ly * s, -1.0 + lx * s + ly * c];
                    assert!(fp.covers(p), "uncovered {p:?} at yaw {yaw}");
                }
            }
        }
    }

    #[test]
    fn straddling_vehicle_gets_both_lanes() {
        let g = two_lane_road();
        let fp = agent_footprint(&AgentBody::car(), &KinematicState::at_rest(50.0, 3.5, 0.05));
        let seed = seed_lanes(&fp, 0.05, 0.0, &g, PI / 6.0, 3.0);
        assert_eq!(ids(&g, &seed), vec!["R", "L"]);
    }

    #[test]
    fn centered_vehicle_gets_one_lane() {
        let g = two_lane_road();
        let fp = agent_footprint(&AgentBody::car(), &KinematicState::at_rest(50.0, 1.75, 0.0));
        let seed = seed_lanes(&fp, 0.0, 0.0, &g, PI / 6.0, 3.0);
        assert_eq!(ids(&g, &seed), vec!["R"]);
    }

    #[test]
    fn anti_aligned_vehicle_is_unrestricted() {
        let g = Roadgraph::new(
            vec![
                Lane::straight("E", [0.0, 1.75], [100.0, 1.75], 3.5, 0.0),
                Lane::straight("W", [100.0, 5.25], [0.0, 5.25], 3.5, 0.0),
            ],
            vec![[0.0, 0.0], [100.0, 0.0], [100.0, 7.0], [0.0, 7.0]],
        )
        .unwrap();
        let fp = agent_footprint(&AgentBody::car(), &KinematicState::at_rest(50.0, 5.25, 0.0));
        assert!(seed_lanes(&fp, 0.0, 0.0, &g, PI / 6.0, 3.0).is_empty());
        // straddling an aligned and the oncoming lane also yields no restriction
        let fp = agent_footprint(&AgentBody::car(), &KinematicState::at_rest(50.0, 3.5, 0.0));
        assert!(seed_lanes(&fp, 0.0, 0.0, &g, PI / 6.0, 3.0).is_empty());
    }

    #[test]
    fn overpass_lane_ignored_by_z() {
        let g = Roadgraph::new(
            vec![
                Lane::straight("ground", [0.0, 1.75], [100.0, 1.75], 3.5, 0.0),
                Lane::straight("bridge", [50.0, -20.0], [50.0, 20.0], 3.5, 8.0),
            ],
            vec![[0.0, -20.0], [100.0, -20.0], [100.0, 20.0], [0.0, 20.0]],
        )
        .unwrap();
        let fp = agent_footprint(&AgentBody::car(), &KinematicState::at_rest(50.0, 1.75, 0.0));
        let seed = seed_lanes(&fp, 0.0, 0.0, &g, PI / 6.0, 3.0);
        assert_eq!(ids(&g, &seed), vec!["ground"]);
    }

    fn chain(len: f64) -> Roadgraph {
        Roadgraph::new(
            vec![
                Lane::straight("L1", [0.0, 0.0], [len, 0.0], 3.5, 0.0)
                    .with_successors(&["L2", "L4"]),
                Lane::straight("L2", [len, 0.0], [2.0 * len, 0.0], 3.5, 0.0)
                    .with_successors(&["L3"]),
                Lane::straight("L3", [2.0 * len, 0.0], [3.0 * len, 0.0], 3.5, 0.0),
                Lane::straight("L4", [len, 0.0], [2.0 * len, 1.0], 3.5, 0.0),
            ],
            vec![
                [-1.0, -3.0],
                [3.0 * len + 1.0, -3.0],
                [3.0 * len + 1.0, 4.0],
                [-1.0, 4.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn closure_chain_and_branch() {
        let g = chain(8.0);
        let seed: BTreeSet<usize> = [0].into();
        assert_eq!(
            ids(&g, &available_lanes(&seed, &g, 1000.0)),
            vec!["L1", "L2", "L3", "L4"]
        );
        // lanes start at 0, 8, 16 m from the seed; a 10 m cap keeps the first two levels
        assert_eq!(
            ids(&g, &available_lanes(&seed, &g, 10.0)),
            vec!["L1", "L2", "L4"]
        );
        assert_eq!(ids(&g, &available_lanes(&seed, &g, 5.0)), vec!["L1"]);

        let linear = Roadgraph::new(
            vec![
                Lane::straight("L1", [0.0, 0.0], [8.0, 0.0], 3.5, 0.0).with_successors(&["L2"]),
                Lane::straight("L2", [8.0, 0.0], [16.0, 0.0], 3.5, 0.0).with_successors(&["L3"]),
                Lane::straight("L3", [16.0, 0.0], [24.0, 0.0], 3.5, 0.0),
            ],
            vec![[-1.0, -3.0], [25.0, -3.0], [25.0, 3.0], [-1.0, 3.0]],
        )
        .unwrap();
        assert_eq!(
            ids(&linear, &available_lanes(&seed, &linear, 10.0)),
            vec!["L1", "L2"]
        );
    }

    #[test]
    fn dangling_successor_rejected() {
        let err = Roadgraph::new(
            vec![Lane::straight("A", [0.0, 0.0], [10.0, 0.0], 3.5, 0.0).with_successors(&["nope"])],
            vec![[-1.0, -3.0], [11.0, -3.0], [11.0, 3.0], [-1.0, 3.0]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("'nope'"));
    }

    #[test]
    fn degenerate_lane_rejected() {
        let mut lane = Lane::straight("A", [0.0, 0.0], [10.0, 0.0], 3.5, 0.0);
        // crossed boundaries make a bow-tie polygon
        lane.right_boundary = vec![[0.0, 1.75], [10.0, -1.75]];
        lane.left_boundary = vec![[0.0, -1.75], [10.0, 1.75]];
        let err = Roadgraph::new(
            vec![lane],
            vec![[-1.0, -3.0], [11.0, -3.0], [11.0, 3.0], [-1.0, 3.0]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("self-intersects"), "{err}");
    }

    #[test]
    fn permitted_masks() {
        let g = two_lane_road();
        let spec = RasterSpec::new(0.0, 0.0, 0.3, 334, 24);
        let all = permitted_mask(&LaneSet::Unrestricted, &g, &spec);
        let r = permitted_mask(&LaneSet::Lanes([0].into()), &g, &spec);
        let l = permitted_mask(&LaneSet::Lanes([1].into()), &g, &spec);
        assert!(r.is_subset_of(&all) && l.is_subset_of(&all));
        let both = permitted_mask(&LaneSet::Lanes([0, 1].into()), &g, &spec);
        assert_eq!(both, all);
    }

    #[test]
    fn disjoint_lane_masks_add() {
        let g = Roadgraph::new(
            vec![
                Lane::straight("A", [0.0, 1.8], [30.0, 1.8], 3.6, 0.0),
                Lane::straight("B", [0.0, 9.0], [30.0, 9.0], 3.6, 0.0),
            ],
            vec![[0.0, 0.0], [30.0, 0.0], [30.0, 12.0], [0.0, 12.0]],
        )
        .unwrap();
        let spec = RasterSpec::new(0.0, 0.0, 0.3, 100, 40);
        let a = permitted_mask(&LaneSet::Lanes([0].into()), &g, &spec);
        let b = permitted_mask(&LaneSet::Lanes([1].into()), &g, &spec);
        let ab = permitted_mask(&LaneSet::Lanes([0, 1].into()), &g, &spec);
        assert_eq!(ab.count(), a.count() + b.count());
    }

    proptest! {
        #[test]
        fn seed_invariant_under_rigid_motion(
            ay in 0.5f64..6.5, yaw in -0.6f64..0.6, rot in -3.2f64..3.2, tx in -50.0f64..50.0, ty in -50.0f64..50.0
        ) {
            let g = two_lane_road();
            let st = KinematicState::at_rest(50.0, ay, yaw);
            let body = AgentBody::car();
            let base = seed_lanes(&agent_footprint(&body, &st), yaw, 0.0, &g, PI / 6.0, 3.0);

            let (s, c) = rot.sin_cos();
            let tf = |p: Point| [p[0] * c - p[1] * s + tx, p[0] * s + p[1] * c + ty];
            let lanes = g.lanes.iter().map(|l| Lane {
                id: l.id.clone(),
                centerline: l.centerline.iter().map(|p| {
                    let q = tf([p.x, p.y]);
                    LanePoint { x: q[0], y: q[1], z: p.z, heading: p.heading + rot }
                }).collect(),
                left_boundary: l.left_boundary.iter().map(|p| tf(*p)).collect(),
                right_boundary: l.right_boundary.iter().map(|p| tf(*p)).collect(),
                successors: l.successors.clone(),
            }).collect();
            let road = g.road_polygon.iter().map(|p| tf(*p)).collect();
            let moved = Roadgraph::new(lanes, road).unwrap();
            let p = tf([50.0, ay]);
            let st2 = KinematicState::at_rest(p[0], p[1], yaw + rot);
            let got = seed_lanes(&agent_footprint(&body, &st2), yaw + rot, 0.0, &moved, PI / 6.0, 3.0);
            prop_assert_eq!(base, got);
        }

        #[test]
        fn closure_is_monotone(extra in proptest::collection::btree_set(0usize..4, 0..4), cap in 1.0f64..40.0) {
            let g = chain(8.0);
            let seed: BTreeSet<usize> = [0].into();
            let mut sup = seed.clone();
            sup.extend(extra);
            let a = available_lanes(&seed, &g, cap);
            let b = available_lanes(&sup, &g, cap);
            prop_assert!(a.is_subset(&b));
        }
    }
}
