//! Sinkhorn distance between learned and expert weight matrices over sampled
//! decision states.

use std::sync::Arc;

use mrta::analysis::{checkpoint_divergence, comparisons_csv, sample_states, SinkhornConfig};
use mrta::expert::Expert;
use mrta::matching::Incentive;
use mrta::policy::{BigCam, Hyper, PolicyConfig, PolicyParams};

fn main() -> mrta::Result<()> {
    let states = sample_states(200, 20, 3)?;
    let hyper = Hyper { h: 32, heads: 4, ..Hyper::default() };
    let a = BigCam::new(Arc::new(PolicyParams::init(hyper, 1)?), PolicyConfig::default());
    let b = BigCam::new(Arc::new(PolicyParams::init(hyper, 2)?), PolicyConfig::default());
    let expert = Expert::default();
    let sources: Vec<(String, &dyn Incentive)> = vec![
        ("expert".into(), &expert),
        ("init-seed-1".into(), &a),
        ("init-seed-2".into(), &b),
    ];
    let rows = checkpoint_divergence(&sources, &expert, &states, &SinkhornConfig::default())?;
    print!("{}", comparisons_csv(&rows));
    Ok(())
}
