//! Probe a single ring placement step by step to find where time goes.

use std::time::Instant;

use mapf_core::grid::{Cell, GridGraph};
use mapf_core::lifelong::{
    run_lifelong, FailPolicy, ReplanTrigger, RhcrConfig, SolverKind, TargetStream,
};
use mapf_core::model::Mode;
use mapf_core::search::Horizon;

fn main() {
    let graph =
        GridGraph::parse("type octile\nheight 3\nwidth 3\nmap\n...\n.@.\n...\n").unwrap();
    let v = |x: u32, y: u32| graph.vertex_at(Cell::new(x, y)).unwrap();
    // ring order: (0,0)(1,0)(2,0)(2,1)(2,2)(1,2)(0,2)(0,1)
    let starts = vec![v(0, 0), v(0, 1)];
    let stream = TargetStream::Scripted {
        sequences: vec![vec![v(2, 0), v(0, 0)], vec![v(1, 0), v(0, 1)]],
    };
    for (label, mode, w) in [
        ("prp transient inf", Mode::Transient, Horizon::Infinite),
        ("prp classic inf", Mode::Classic, Horizon::Infinite),
        ("prp classic w1", Mode::Classic, Horizon::Finite(1)),
    ] {
        let t0 = Instant::now();
        let cfg = RhcrConfig {
            solver: SolverKind::Prp { restarts: 2 },
            mode,
            period: 1,
            horizon: w,
            replan: ReplanTrigger::EveryStep,
            node_budget: Some(200_000),
            time_budget: None,
            fail_policy: FailPolicy::AllWait,
            seed: 1,
        };
        let run = run_lifelong(&graph, &starts, stream.clone(), &cfg, 60, &[]);
        eprintln!(
            "{label}: tput={} expansions={} failures={} in {:?}",
            run.throughput,
            run.stats.total_expansions,
            run.stats.plan_failures,
            t0.elapsed()
        );
    }
}
