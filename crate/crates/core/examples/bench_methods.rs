//! Paired benchmark of the baselines plus an untrained learned policy, with
//! pairwise Welch tests.
//!
//! cargo run --release --example bench_methods -- [n_scenarios]

use std::sync::Arc;

use mrta::analysis::{bench, pairwise_tests, BenchSetup, Method};
use mrta::policy::{Hyper, PolicyParams};

fn main() -> mrta::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let hyper = Hyper { h: 32, heads: 4, ..Hyper::default() };
    let setup = BenchSetup {
        params: Some(Arc::new(PolicyParams::init(hyper, 0)?)),
        ..BenchSetup::default()
    };
    let results = bench(&Method::ALL, 1, 1, n, 7, &setup)?;
    for r in &results {
        println!(
            "{:<9} completion mean {:.3} median {:.3} std {:.3}, {:.2e} s per decision",
            r.method.name(),
            r.mean(),
            r.median(),
            r.std(),
            r.mean_decision_time()
        );
    }
    for t in pairwise_tests(&results)? {
        println!("{} vs {}: t = {:+.3}, p = {:.2e}", t.a, t.b, t.test.t, t.test.p);
    }
    Ok(())
}
