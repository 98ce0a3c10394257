//! One episode under each baseline allocator on the same scenario.

use mrta::expert::Expert;
use mrta::matching::{Allocator, BigraphAllocator, FeasRnd};
use mrta::scenario::Scenario;
use mrta::sim::{run_episode, SimConfig};

fn main() -> mrta::Result<()> {
    let scenario = Scenario::generate(50, 6, 2024);
    let expert = BigraphAllocator::new(Expert::default());
    let allocators: [&dyn Allocator; 2] = [&expert, &FeasRnd];
    for allocator in allocators {
        let r = run_episode(&scenario, allocator, SimConfig::default())?;
        println!(
            "{:<9} completed {}/{} tasks, reward {:.3}, {} decisions, ends at t={:.0}s",
            allocator.name(),
            r.n_success,
            r.n_tasks,
            r.total_reward,
            r.n_decisions,
            r.final_clock
        );
    }

    let r = run_episode(&scenario, &expert, SimConfig::default())?;
    println!("first decisions:");
    for d in r.decisions.iter().take(8) {
        let target = if d.action == 0 { "depot".to_string() } else { format!("task {}", d.action) };
        println!("  t={:>7.2}s robot {} -> {target}", d.time, d.robot);
    }
    Ok(())
}
