use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fsm_bench::five_agent_scenario;
use fsm_core::scenario::analyze_frame;
use fsm_core::RunConfig;

fn frame(c: &mut Criterion) {
    let scenario = five_agent_scenario();
    assert_eq!(scenario.agents.len(), 5);
    let config = RunConfig::default();
    c.bench_function("analyze_frame/5_agents", |b| {
        b.iter(|| analyze_frame(black_box(&scenario), &config, 0))
    });
    let in_lane = RunConfig {
        ego_lane_restriction: fsm_core::EgoLaneRestriction::InLane,
        ..RunConfig::default()
    };
    c.bench_function("analyze_frame/5_agents_in_lane", |b| {
        b.iter(|| analyze_frame(black_box(&scenario), &in_lane, 0))
    });
}

criterion_group!(benches, frame);
criterion_main!(benches);
