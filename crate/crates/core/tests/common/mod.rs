//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use mrta::matching::WeightedBigraph;
use mrta::scenario::Scenario;
use mrta::sim::World;

/// Best partial assignment by exhaustive enumeration. Among optimal
/// assignments returns the lexicographically smallest row vector
/// (unmatched after every column), with zero-weight pairs then dropped.
pub fn brute_force_matching(b: &WeightedBigraph) -> (f64, Vec<(usize, usize)>) {
    let n = b.n_rows();
    let m = b.n_cols();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut cur = vec![usize::MAX; n];
    let mut used = vec![false; m];
    fn rec(
        r: usize,
        total: f64,
        b: &WeightedBigraph,
        cur: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if r == cur.len() {
            let better = match best {
                None => true,
                Some((bt, bv)) => total > *bt || (total == *bt && cur < bv),
            };
            if better {
                *best = Some((total, cur.clone()));
            }
            return;
        }
        for c in 0..used.len() {
            if !used[c] && b.mask[[r, c]] {
                used[c] = true;
                cur[r] = c;
                rec(r + 1, total + b.weights[[r, c]], b, cur, used, best);
                used[c] = false;
            }
        }
        cur[r] = usize::MAX;
        rec(r + 1, total, b, cur, used, best);
    }
    rec(0, 0.0, b, &mut cur, &mut used, &mut best);
    let (total, vec) = best.expect("the empty assignment always exists");
    let pairs = vec
        .iter()
        .enumerate()
        .filter(|&(r, &c)| c != usize::MAX && b.weights[[r, c]] > 0.0)
        .map(|(r, &c)| (r, c))
        .collect();
    (total, pairs)
}

/// Optimal objective by dynamic programming over subsets of rows, column by
/// column. Fine for a handful of rows and many columns.
pub fn dp_matching_value(b: &WeightedBigraph) -> f64 {
    let n = b.n_rows();
    assert!(n <= 16);
    let full = 1usize << n;
    let mut dp = vec![f64::NEG_INFINITY; full];
    dp[0] = 0.0;
    for c in 0..b.n_cols() {
        let mut next = dp.clone();
        for set in 0..full {
            if dp[set] == f64::NEG_INFINITY {
                continue;
            }
            for r in 0..n {
                if set & (1 << r) == 0 && b.mask[[r, c]] {
                    let v = dp[set] + b.weights[[r, c]];
                    if v > next[set | (1 << r)] {
                        next[set | (1 << r)] = v;
                    }
                }
            }
        }
        dp = next;
    }
    dp.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Direct reading of the expert incentive: leftover range after a round
/// trip through the task, times exp(-arrival / alpha), zero past the deadline.
pub fn expert_oracle(world: &World, robot: usize, task: usize, alpha: f64) -> f64 {
    let r = &world.robots[robot];
    let spec = &world.scenario.tasks[task - 1];
    let depot = world.scenario.depot;
    let d1 = ((r.dest[0] - spec.x).powi(2) + (r.dest[1] - spec.y).powi(2)).sqrt();
    let d2 = ((spec.x - depot[0]).powi(2) + (spec.y - depot[1]).powi(2)).sqrt();
    let arrival = r.t_next + d1 / world.scenario.fleet.speed;
    if arrival > spec.deadline {
        return 0.0;
    }
    let left = r.range - d1 - d2;
    if left <= 0.0 {
        0.0
    } else {
        left * (-arrival / alpha).exp()
    }
}

/// The same world with task `k` renamed to `perm[k-1] + 1` (1-based actions).
pub fn relabel_tasks(world: &World, perm: &[usize]) -> World {
    let n = world.n_tasks();
    assert_eq!(perm.len(), n);
    let mut scenario: Scenario = world.scenario.clone();
    let mut tasks = world.tasks.clone();
    for (old, &new) in perm.iter().enumerate() {
        let mut spec = world.scenario.tasks[old];
        spec.id = new + 1;
        scenario.tasks[new] = spec;
        tasks[new] = world.tasks[old].clone();
    }
    let mut out = world.clone();
    out.scenario = scenario;
    out.tasks = tasks;
    for r in &mut out.robots {
        if let Some(a) = r.pending {
            if a != 0 {
                r.pending = Some(perm[a - 1] + 1);
            }
        }
    }
    out
}
