//! Learned bigraph incentive.
//!
//! Both state graphs are embedded with capsule encoders; two attention
//! decoders turn the embeddings into per-edge LogNormal parameters, from
//! which positive edge weights are drawn. Large problems are cut down to a
//! fixed-size window around the deciding robot before any of this runs.

mod decoder;
mod gcaps;
mod params;

pub use decoder::mha_decode;
pub use gcaps::gcaps_encode;
pub use params::{CapsLayer, Decoder, Encoder, Hyper, PolicyParams, PARAMS_MAGIC, PARAMS_VERSION};

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graphs::{robot_graph_over, task_graph_over, GraphConfig};
use crate::matching::Incentive;
use crate::sim::{distance, Action, World};

pub const DEFAULT_EPSILON: f64 = 0.2;
pub const SIGMA_FLOOR: f64 = 1e-3;
/// Log-weights are clamped to `±LOG_WEIGHT_CLAMP` so `exp` stays finite.
pub const LOG_WEIGHT_CLAMP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// ε-greedy draws from the per-edge LogNormal.
    Train,
    /// Greedy value everywhere.
    Test,
}

/// Which LogNormal statistic serves as the greedy weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreedyValue {
    /// `exp(μ)`.
    #[default]
    Median,
    /// `exp(μ + σ²/2)`.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShrinkConfig {
    pub max_robots: usize,
    pub max_tasks: usize,
}

impl Default for ShrinkConfig {
    fn default() -> Self {
        ShrinkConfig {
            max_robots: 6,
            max_tasks: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub epsilon: f64,
    pub sigma_floor: f64,
    pub greedy: GreedyValue,
    pub mode: SampleMode,
    /// `None` disables shrinking.
    pub shrink: Option<ShrinkConfig>,
    pub graph: GraphConfig,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            epsilon: DEFAULT_EPSILON,
            sigma_floor: SIGMA_FLOOR,
            greedy: GreedyValue::Median,
            mode: SampleMode::Test,
            shrink: Some(ShrinkConfig::default()),
            graph: GraphConfig::default(),
        }
    }
}

/// Per-edge LogNormal parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistributions {
    pub mu: Array2<f64>,
    pub sigma: Array2<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Node embeddings for the given sub-problem, then both decoders.
pub fn weight_distributions(
    world: &World,
    robots: &[usize],
    tasks: &[Action],
    params: &PolicyParams,
    config: &PolicyConfig,
) -> Result<WeightDistributions> {
    let hyper = &params.hyper;
    let task_graph = task_graph_over(world, tasks, config.graph);
    let robot_graph = robot_graph_over(world, robots, config.graph);
    let task_emb = gcaps_encode(&task_graph, &params.task_encoder, hyper.moments, hyper.hops)?;
    let robot_emb = gcaps_encode(&robot_graph, &params.robot_encoder, hyper.moments, hyper.hops)?;
    let mu = mha_decode(&task_emb, &robot_emb, &params.mu_decoder, hyper.heads);
    let floor = config.sigma_floor;
    let sigma = mha_decode(&task_emb, &robot_emb, &params.sigma_decoder, hyper.heads)
        .mapv(|v| softplus(v) + floor);
    Ok(WeightDistributions { mu, sigma })
}

fn greedy_log(mu: f64, sigma: f64, greedy: GreedyValue) -> f64 {
    match greedy {
        GreedyValue::Median => mu,
        GreedyValue::Mean => mu + 0.5 * sigma * sigma,
    }
}

/// Positive weight matrix. In test mode every entry takes its greedy value;
/// in train mode each entry independently, with probability ε, is a fresh
/// LogNormal draw instead.
pub fn sample_weights(
    dists: &WeightDistributions,
    mode: SampleMode,
    config: &PolicyConfig,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    let clamp = |v: f64| v.clamp(-LOG_WEIGHT_CLAMP, LOG_WEIGHT_CLAMP).exp();
    let mut out = Array2::zeros(dists.mu.dim());
    for (w, (&mu, &sigma)) in out.iter_mut().zip(dists.mu.iter().zip(dists.sigma.iter())) {
        let log = match mode {
            SampleMode::Train if rng.random::<f64>() < config.epsilon => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            _ => greedy_log(mu, sigma, config.greedy),
        };
        *w = clamp(log);
    }
    out
}

/// Fixed-size window around `robot`: itself plus its nearest peers (by current
/// destination), and the tasks nearest to it, feasible-for-it first. Index
/// ties go to the lower index; both lists come back ascending. Problems that
/// already fit are returned whole.
pub fn shrink(
    world: &World,
    robot: usize,
    max_robots: usize,
    max_tasks: usize,
) -> (Vec<usize>, Vec<Action>) {
    let here = world.robots[robot].dest;
    let robots = if world.n_robots() <= max_robots {
        (0..world.n_robots()).collect()
    } else {
        let mut others: Vec<(f64, usize)> = (0..world.n_robots())
            .filter(|&r| r != robot)
            .map(|r| (distance(here, world.robots[r].dest), r))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut picked: Vec<usize> = std::iter::once(robot)
            .chain(others.into_iter().take(max_robots.saturating_sub(1)).map(|(_, r)| r))
            .collect();
        picked.sort_unstable();
        picked
    };
    let tasks = if world.n_tasks() <= max_tasks {
        (1..=world.n_tasks()).collect()
    } else {
        let mut ranked: Vec<(bool, bool, f64, Action)> = (1..=world.n_tasks())
            .map(|a| {
                (
                    !world.is_feasible(robot, a),
                    !world.task_state(a).is_active(),
                    distance(here, world.task_pos(a)),
                    a,
                )
            })
            .collect();
        ranked.sort_by(|x, y| {
            x.0.cmp(&y.0)
                .then(x.1.cmp(&y.1))
                .then(x.2.total_cmp(&y.2))
                .then(x.3.cmp(&y.3))
        });
        let mut picked: Vec<Action> = ranked.into_iter().take(max_tasks).map(|t| t.3).collect();
        picked.sort_unstable();
        picked
    };
    (robots, tasks)
}

/// The learned incentive as a bigraph weight source.
#[derive(Debug, Clone)]
pub struct BigCam {
    pub params: Arc<PolicyParams>,
    pub config: PolicyConfig,
}

impl BigCam {
    pub fn new(params: Arc<PolicyParams>, config: PolicyConfig) -> Self {
        BigCam { params, config }
    }

    pub fn distributions(
        &self,
        world: &World,
        robots: &[usize],
        tasks: &[Action],
    ) -> WeightDistributions {
        weight_distributions(world, robots, tasks, &self.params, &self.config)
            .expect("validated params match graph feature widths")
    }
}

impl Incentive for BigCam {
    fn name(&self) -> &str {
        "big-cam"
    }

    fn weights(
        &self,
        world: &World,
        robots: &[usize],
        tasks: &[Action],
        rng: &mut ChaCha8Rng,
    ) -> Array2<f64> {
        let dists = self.distributions(world, robots, tasks);
        sample_weights(&dists, self.config.mode, &self.config, rng)
    }

    fn restrict(&self, world: &World, robot: usize) -> (Vec<usize>, Vec<Action>) {
        match self.config.shrink {
            Some(s) => shrink(world, robot, s.max_robots, s.max_tasks),
            None => (
                (0..world.n_robots()).collect(),
                (1..=world.n_tasks()).collect(),
            ),
        }
    }
}
