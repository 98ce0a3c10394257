//! Experiment harness: scaled benchmarks over shared scenario sets, pairwise
//! significance tests, and weight-matrix comparisons.

pub mod divergence;
pub mod sinkhorn;
pub mod stats;

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use divergence::{
    checkpoint_divergence, comparisons_csv, sample_states, DecisionState, WeightComparison,
    COMPARISON_HEADER,
};
pub use sinkhorn::{sinkhorn_distance, SinkhornConfig};
pub use stats::{mean, median, std_dev, welch_t, WelchTest};

use crate::error::{Error, Result};
use crate::expert::{Expert, ExpertConfig};
use crate::matching::{Allocator, BigraphAllocator, FeasRnd};
use crate::policy::{BigCam, PolicyConfig, PolicyParams, SampleMode};
use crate::scenario::{scaled_batch, FleetSpec, Scenario};
use crate::sim::{run_episode, SimConfig};

pub const RESULTS_HEADER: &str =
    "method,s_t,s_r,scenario_seed,completion_rate,episode_decision_time_s,mean_decision_time_s";
pub const TTEST_HEADER: &str = "method_a,method_b,s_t,s_r,mean_a,mean_b,t,df,p_value,degenerate";
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    BigCam,
    BigMrta,
    FeasRnd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::BigCam, Method::BigMrta, Method::FeasRnd];

    pub fn name(self) -> &'static str {
        match self {
            Method::BigCam => "big-cam",
            Method::BigMrta => "big-mrta",
            Method::FeasRnd => "feas-rnd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?} (big-cam, big-mrta, feas-rnd)")))
    }
}

/// What every method needs to be instantiated, plus how scenarios are drawn.
#[derive(Debug, Clone)]
pub struct BenchSetup {
    pub fleet: FleetSpec,
    pub sim: SimConfig,
    pub expert: ExpertConfig,
    pub policy: PolicyConfig,
    pub params: Option<Arc<PolicyParams>>,
}

impl Default for BenchSetup {
    fn default() -> Self {
        BenchSetup {
            fleet: FleetSpec::default(),
            sim: SimConfig::default(),
            expert: ExpertConfig::default(),
            policy: PolicyConfig::default(),
            params: None,
        }
    }
}

impl BenchSetup {
    pub fn allocator(&self, method: Method) -> Result<Box<dyn Allocator>> {
        Ok(match method {
            Method::FeasRnd => Box::new(FeasRnd),
            Method::BigMrta => Box::new(BigraphAllocator::new(Expert::new(self.expert))),
            Method::BigCam => {
                let params = self.params.clone().ok_or_else(|| {
                    Error::Config("big-cam needs policy params".into())
                })?;
                let config = PolicyConfig {
                    mode: SampleMode::Test,
                    ..self.policy
                };
                Box::new(BigraphAllocator::new(BigCam::new(params, config)))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method: Method,
    pub s_t: usize,
    pub s_r: usize,
    pub n_tasks: usize,
    pub n_robots: usize,
    pub scenario_seeds: Vec<u64>,
    pub scenario_hashes: Vec<String>,
    pub rates: Vec<f64>,
    /// Total decision time per episode, seconds.
    pub episode_decision_times: Vec<f64>,
    pub decisions_per_episode: Vec<usize>,
}

impl BenchResult {
    pub fn mean(&self) -> f64 {
        mean(&self.rates)
    }

    pub fn median(&self) -> f64 {
        median(&self.rates)
    }

    pub fn std(&self) -> f64 {
        std_dev(&self.rates)
    }

    /// Decision time pooled over every decision of every episode.
    pub fn mean_decision_time(&self) -> f64 {
        let n: usize = self.decisions_per_episode.iter().sum();
        if n == 0 {
            0.0
        } else {
            self.episode_decision_times.iter().sum::<f64>() / n as f64
        }
    }

    pub fn mean_episode_decision_time(&self) -> f64 {
        mean(&self.episode_decision_times)
    }

    /// Same outcome on the same scenarios, ignoring timings.
    pub fn same_outcome(&self, other: &BenchResult) -> bool {
        (self.method, self.s_t, self.s_r) == (other.method, other.s_t, other.s_r)
            && self.scenario_hashes == other.scenario_hashes
            && self.rates == other.rates
            && self.decisions_per_episode == other.decisions_per_episode
    }

    pub fn csv_rows(&self, out: &mut String) {
        for k in 0..self.rates.len() {
            let n = self.decisions_per_episode[k];
            let per = if n == 0 {
                0.0
            } else {
                self.episode_decision_times[k] / n as f64
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.method,
                self.s_t,
                self.s_r,
                self.scenario_seeds[k],
                self.rates[k],
                self.episode_decision_times[k],
                per
            );
        }
    }
}

pub fn results_csv(results: &[BenchResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        r.csv_rows(&mut out);
    }
    out
}

/// Runs one method over a fixed scenario list.
pub fn bench_on(
    method: Method,
    scenarios: &[Scenario],
    s_t: usize,
    s_r: usize,
    setup: &BenchSetup,
) -> Result<BenchResult> {
    let allocator = setup.allocator(method)?;
    let episodes = scenarios
        .par_iter()
        .map(|s| run_episode(s, allocator.as_ref(), setup.sim))
        .collect::<Result<Vec<_>>>()?;
    let (n_tasks, n_robots) = scenarios
        .first()
        .map_or((0, 0), |s| (s.n_tasks(), s.n_robots()));
    Ok(BenchResult {
        method,
        s_t,
        s_r,
        n_tasks,
        n_robots,
        scenario_seeds: scenarios.iter().map(|s| s.seed).collect(),
        scenario_hashes: scenarios.iter().map(Scenario::content_hash).collect(),
        rates: episodes.iter().map(|e| e.completion_rate).collect(),
        episode_decision_times: episodes.iter().map(|e| e.episode_decision_time()).collect(),
        decisions_per_episode: episodes.iter().map(|e| e.per_decision_times.len()).collect(),
    })
}

/// Every method on the same `n_scenarios` scenarios of scale `(s_t, s_r)`.
pub fn bench(
    methods: &[Method],
    s_t: usize,
    s_r: usize,
    n_scenarios: usize,
    base_seed: u64,
    setup: &BenchSetup,
) -> Result<Vec<BenchResult>> {
    if methods.is_empty() {
        return Err(Error::Config("no methods to benchmark".into()));
    }
    if n_scenarios == 0 {
        return Err(Error::EmptyBatch("bench needs at least one scenario"));
    }
    if s_t == 0 || s_r == 0 {
        return Err(Error::Config("scale factors must be >= 1".into()));
    }
    // Fail before running anything if a method cannot be built.
    for &m in methods {
        setup.allocator(m)?;
    }
    let scenarios = scaled_batch(s_t, s_r, n_scenarios, base_seed, setup.fleet);
    methods
        .iter()
        .map(|&m| bench_on(m, &scenarios, s_t, s_r, setup))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: Method,
    pub b: Method,
    pub s_t: usize,
    pub s_r: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: WelchTest,
}

/// Welch tests for every pair of results that share a scale.
pub fn pairwise_tests(results: &[BenchResult]) -> Result<Vec<PairwiseTest>> {
    let mut out = Vec::new();
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            if (a.s_t, a.s_r) != (b.s_t, b.s_r) {
                continue;
            }
            out.push(PairwiseTest {
                a: a.method,
                b: b.method,
                s_t: a.s_t,
                s_r: a.s_r,
                mean_a: a.mean(),
                mean_b: b.mean(),
                test: welch_t(&a.rates, &b.rates)?,
            });
        }
    }
    Ok(out)
}

pub fn pairwise_csv(tests: &[PairwiseTest]) -> String {
    let mut out = String::from(TTEST_HEADER);
    out.push('\n');
    for p in tests {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            p.a, p.b, p.s_t, p.s_r, p.mean_a, p.mean_b, p.test.t, p.test.df, p.test.p, p.test.degenerate
        );
    }
    out
}
