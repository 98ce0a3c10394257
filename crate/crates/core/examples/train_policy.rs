//! Trains the learned incentive with the evolution strategy and reports the
//! held-out reward before and after.
//!
//! cargo run --release --example train_policy -- [generations] [hidden] [heads]

use std::sync::Arc;
use std::time::Instant;

use mrta::policy::{Hyper, PolicyConfig, PolicyParams};
use mrta::scenario::FleetSpec;
use mrta::sim::SimConfig;
use mrta::trainer::{evaluate, train, ScenarioStream, TrainConfig, TrainLog, TrainSetup};

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> mrta::Result<()> {
    let generations = arg(1, 10);
    let hyper = Hyper {
        h: arg(2, 32),
        heads: arg(3, 4),
        ..Hyper::default()
    };
    let setup = TrainSetup {
        config: TrainConfig {
            generations,
            ..TrainConfig::default()
        },
        policy: PolicyConfig::default(),
        sim: SimConfig::default(),
        stream: ScenarioStream::new(20, FleetSpec::with_robots(3), 11),
    };
    let initial = PolicyParams::init(hyper, 1)?;
    println!("{} parameters", initial.len());

    let fresh = ScenarioStream::new(20, FleetSpec::with_robots(3), 999).heldout(50);
    let before = evaluate(&Arc::new(initial.clone()), &setup.policy, setup.sim, &fresh)?;

    let started = Instant::now();
    println!("{}", mrta::trainer::TRAIN_LOG_HEADER);
    let (best, log) = train(initial, &setup, |r, _| {
        println!("{}", TrainLog::csv_row(r));
        Ok(())
    })?;
    let after = evaluate(&Arc::new(best), &setup.policy, setup.sim, &fresh)?;
    println!(
        "held-out reward {before:.4} -> {after:.4} ({:+.1}%), selection set {:.4} -> {:.4}, {:.1}s",
        100.0 * (after - before) / before,
        log.initial_heldout,
        log.best_heldout,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
