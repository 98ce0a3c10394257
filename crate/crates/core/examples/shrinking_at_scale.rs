//! Per-decision cost at 50/6 and 500/60: unshrunk expert matching against
//! the learned incentive restricted to a 6 x 50 window.

use std::sync::Arc;

use mrta::analysis::{bench, BenchSetup, Method};
use mrta::policy::{Hyper, PolicyParams};

fn main() -> mrta::Result<()> {
    let setup = BenchSetup {
        params: Some(Arc::new(PolicyParams::init(Hyper::default(), 0)?)),
        ..BenchSetup::default()
    };
    let methods = [Method::BigCam, Method::BigMrta];
    let small = bench(&methods, 1, 1, 2, 1, &setup)?;
    let large = bench(&methods, 10, 1, 1, 1, &setup)?;
    for (s, l) in small.iter().zip(&large) {
        let (ts, tl) = (s.mean_decision_time(), l.mean_decision_time());
        println!(
            "{:<9} {:.2e} s/decision at 50/6, {:.2e} at 500/60 ({:.1}x), completion {:.2} -> {:.2}",
            s.method.name(),
            ts,
            tl,
            tl / ts,
            s.mean(),
            l.mean()
        );
    }
    Ok(())
}
