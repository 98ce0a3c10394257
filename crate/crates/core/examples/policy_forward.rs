//! Forward pass of the learned incentive at a decision instant: graph
//! construction, encoders, decoders, and the resulting weight matrix.

use std::sync::Arc;

use mrta::graphs::{build_robot_graph, build_task_graph, GraphConfig};
use mrta::matching::{decide, Incentive};
use mrta::policy::{BigCam, Hyper, PolicyConfig, PolicyParams, SampleMode};
use mrta::scenario::Scenario;
use mrta::sim::{episode_rng, SimConfig, World};

fn main() -> mrta::Result<()> {
    let scenario = Scenario::generate(50, 6, 5);
    let mut world = World::new(&scenario, SimConfig::default());
    let robot = world.next_decider()?;
    world.begin_decision(robot);

    let tg = build_task_graph(&world, GraphConfig::default());
    let rg = build_robot_graph(&world, GraphConfig::default());
    println!("task graph {} nodes, robot graph {} nodes", tg.n_nodes(), rg.n_nodes());

    let params = Arc::new(PolicyParams::init(Hyper::default(), 0)?);
    println!("{} parameters, {:?}", params.len(), params.hyper);
    let cam = BigCam::new(params, PolicyConfig::default());
    let (robots, tasks) = cam.restrict(&world, robot);
    let d = cam.distributions(&world, &robots, &tasks);
    println!(
        "mu {:?}, sigma in [{:.4}, {:.4}]",
        d.mu.dim(),
        d.sigma.iter().cloned().fold(f64::INFINITY, f64::min),
        d.sigma.iter().cloned().fold(0.0, f64::max)
    );

    let mut rng = episode_rng(&scenario);
    let greedy = cam.weights(&world, &robots, &tasks, &mut rng);
    let explore = BigCam::new(cam.params.clone(), PolicyConfig { mode: SampleMode::Train, ..cam.config });
    let sampled = explore.weights(&world, &robots, &tasks, &mut rng);
    let changed = greedy.iter().zip(&sampled).filter(|(a, b)| a != b).count();
    println!("train mode resampled {changed} of {} weights", greedy.len());

    let action = decide(&world, &cam, robot, &mut rng)?;
    println!("robot {robot} takes task {action}");
    Ok(())
}
