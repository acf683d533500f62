//! Diagnostic sweep over ring placements: reports the throughput profile of
//! each candidate so the contract thresholds can be inspected.

use mapf_core::grid::GridGraph;
use mapf_core::lifelong::{
    run_lifelong, FailPolicy, ReplanTrigger, RhcrConfig, SolverKind, TargetStream,
};
use mapf_core::model::Mode;
use mapf_core::scenario::Instance;
use mapf_core::search::Horizon;

fn tput(inst: &Instance, solver: SolverKind, mode: Mode, horizon: Horizon, steps: u32) -> u64 {
    let cfg = RhcrConfig {
        solver,
        mode,
        period: 1,
        horizon,
        replan: ReplanTrigger::EveryStep,
        node_budget: Some(3_000),
        time_budget: None,
        fail_policy: FailPolicy::AllWait,
        seed: 1,
    };
    run_lifelong(&inst.graph, &inst.starts, inst.stream.clone(), &cfg, steps, &[]).throughput
}

fn main() {
    let maps = vec![
        ("ring8", GridGraph::parse("type octile\nheight 3\nwidth 3\nmap\n...\n.@.\n...\n").unwrap()),
        ("ring10", GridGraph::parse("type octile\nheight 4\nwidth 3\nmap\n...\n.@.\n.@.\n...\n").unwrap()),
    ];
    let steps = 60;
    let mut near = 0;
    for (name, graph) in maps {
        let vs: Vec<_> = graph.vertices().collect();
        for &s1 in &vs {
            for &t1 in &vs {
                if t1 == s1 {
                    continue;
                }
                for &s2 in &vs {
                    if s2 == s1 {
                        continue;
                    }
                    for &t2 in &vs {
                        if t2 == s2 {
                            continue;
                        }
                        let inst = Instance {
                            graph: graph.clone(),
                            starts: vec![s1, s2],
                            stream: TargetStream::Scripted {
                                sequences: vec![vec![t1, s1], vec![t2, s2]],
                            },
                        };
                        let prp = || SolverKind::Prp { restarts: 2 };
                        let ti = tput(&inst, prp(), Mode::Transient, Horizon::Infinite, steps);
                        if ti != (steps - 1) as u64 {
                            continue;
                        }
                        let ci = tput(&inst, prp(), Mode::Classic, Horizon::Infinite, steps);
                        near += 1;
                        let c7 = tput(&inst, prp(), Mode::Classic, Horizon::Finite(7), steps);
                        let t3 = tput(&inst, prp(), Mode::Transient, Horizon::Finite(3), steps);
                        let t2w = tput(&inst, prp(), Mode::Transient, Horizon::Finite(2), steps);
                        let c5 = tput(&inst, prp(), Mode::Classic, Horizon::Finite(5), steps);
                        let cbs_c = tput(&inst, SolverKind::Cbs, Mode::Classic, Horizon::Infinite, steps);
                        let cbs_t = tput(&inst, SolverKind::Cbs, Mode::Transient, Horizon::Infinite, steps);
                        let pibt = tput(&inst, SolverKind::Pibt, Mode::Transient, Horizon::Infinite, steps);
                        let c = |v: mapf_core::grid::Vertex| {
                            let c = graph.cell_of(v);
                            format!("({},{})", c.x, c.y)
                        };
                        println!(
                            "{name} s1={} t1={} s2={} t2={} | t_inf={ti} c_inf={ci} c_w7={c7} t_w3={t3} t_w2={t2w} c_w5={c5} cbs={cbs_c}/{cbs_t} pibt={pibt}",
                            c(s1), c(t1), c(s2), c(t2)
                        );
                    }
                }
            }
        }
    }
    eprintln!("candidates with perfect transient rotation: {near}");
}
