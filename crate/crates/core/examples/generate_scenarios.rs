//! Draws a scaled scenario batch, saves one file, and loads it back.

use mrta::scenario::{scaled_batch, FleetSpec, Scenario, Validation};

fn main() -> mrta::Result<()> {
    for (s_t, s_r) in [(1, 1), (2, 1), (5, 2)] {
        let batch = scaled_batch(s_t, s_r, 3, 42, FleetSpec::default());
        let s = &batch[0];
        println!(
            "s_t={s_t} s_r={s_r}: {} tasks, {} robots, total demand {}, depot ({:.3}, {:.3})",
            s.n_tasks(),
            s.n_robots(),
            s.total_demand(),
            s.depot[0],
            s.depot[1]
        );
    }

    let s = Scenario::generate(50, 6, 7);
    let dir = std::env::temp_dir().join("mrta-example");
    std::fs::create_dir_all(&dir).map_err(|e| mrta::Error::Config(e.to_string()))?;
    let path = dir.join("scenario.json");
    s.save(&path)?;
    let loaded = Scenario::load(&path, Validation::Strict)?;
    assert_eq!(loaded.scenario, s);
    println!("saved and reloaded {} (sha256 {})", path.display(), &s.content_hash()[..16]);
    Ok(())
}
