//! How far a learned incentive's weights sit from the expert's, measured by
//! Sinkhorn distance over a fixed set of decision states.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sinkhorn::{sinkhorn_distance, SinkhornConfig};
use crate::error::{Error, Result};
use crate::matching::{feasibility_mask, FeasRnd, Incentive};
use crate::scenario::{derive_seed, Scenario, BASE_ROBOTS, BASE_TASKS};
use crate::sim::{episode_rng, run_world, Action, SimConfig, World};

pub const COMPARISON_HEADER: &str = "checkpoint,mean_sinkhorn,n_states,elapsed_s";
pub const DEFAULT_STATES: usize = 1000;

/// A world frozen at a decision instant.
#[derive(Debug, Clone)]
pub struct DecisionState {
    pub world: World,
    pub robot: usize,
    pub scenario_seed: u64,
}

impl DecisionState {
    pub fn robots(&self) -> Vec<usize> {
        (0..self.world.n_robots()).collect()
    }

    pub fn tasks(&self) -> Vec<Action> {
        (1..=self.world.n_tasks()).collect()
    }
}

/// Collects `n_states` decision states from Feas-Rnd episodes on
/// 50-task / 6-robot scenarios. States without any feasible edge are skipped.
/// At most `per_episode` states are taken from one episode, spread evenly.
pub fn sample_states(n_states: usize, per_episode: usize, seed: u64) -> Result<Vec<DecisionState>> {
    if n_states == 0 || per_episode == 0 {
        return Err(Error::EmptyBatch("state sampling needs a positive count"));
    }
    let mut out = Vec::with_capacity(n_states);
    let mut episode = 0u64;
    while out.len() < n_states {
        let scenario = Scenario::generate(BASE_TASKS, BASE_ROBOTS, derive_seed(seed, episode));
        episode += 1;
        let mut states = Vec::new();
        let world = World::new(&scenario, SimConfig::default());
        run_world(world, &FeasRnd, &mut episode_rng(&scenario), |w, robot| {
            let robots: Vec<usize> = (0..w.n_robots()).collect();
            let tasks: Vec<Action> = (1..=w.n_tasks()).collect();
            if feasibility_mask(w, &robots, &tasks).iter().any(|&b| b) {
                states.push(DecisionState {
                    world: w.clone(),
                    robot,
                    scenario_seed: scenario.seed,
                });
            }
        })?;
        let take = per_episode.min(states.len()).min(n_states - out.len());
        if take == 0 {
            continue;
        }
        let stride = states.len() as f64 / take as f64;
        for k in 0..take {
            out.push(states[(k as f64 * stride) as usize].clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightComparison {
    pub label: String,
    pub n_states: usize,
    pub distances: Vec<f64>,
    pub mean: f64,
    /// Seconds since the harness started, when this row was finished.
    pub elapsed_s: f64,
}

impl WeightComparison {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.label, self.mean, self.n_states, self.elapsed_s)
    }
}

pub fn comparisons_csv(rows: &[WeightComparison]) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Greedy weights of `incentive` over the whole state, infeasible edges zeroed.
fn state_weights(incentive: &dyn Incentive, state: &DecisionState) -> ndarray::Array2<f64> {
    // Greedy sources ignore the rng; a fixed one keeps stochastic ones repeatable.
    let mut rng = ChaCha8Rng::seed_from_u64(state.scenario_seed);
    incentive.weights(&state.world, &state.robots(), &state.tasks(), &mut rng)
}

/// Mean Sinkhorn distance between each checkpoint's weights and the
/// reference's, over the same states. States must be 6 × 50.
pub fn checkpoint_divergence(
    checkpoints: &[(String, &dyn Incentive)],
    reference: &dyn Incentive,
    states: &[DecisionState],
    cfg: &SinkhornConfig,
) -> Result<Vec<WeightComparison>> {
    if states.is_empty() {
        return Err(Error::EmptyBatch("checkpoint comparison needs at least one state"));
    }
    for (k, s) in states.iter().enumerate() {
        if (s.world.n_robots(), s.world.n_tasks()) != (BASE_ROBOTS, BASE_TASKS) {
            return Err(Error::Contract(format!(
                "state {k} is {}x{}, expected {BASE_ROBOTS}x{BASE_TASKS}",
                s.world.n_robots(),
                s.world.n_tasks()
            )));
        }
    }
    let started = Instant::now();
    let masks: Vec<_> = states
        .iter()
        .map(|s| feasibility_mask(&s.world, &s.robots(), &s.tasks()))
        .collect();
    let reference_weights: Vec<_> = states.iter().map(|s| state_weights(reference, s)).collect();

    let mut rows = Vec::with_capacity(checkpoints.len());
    for (label, incentive) in checkpoints {
        let distances = states
            .iter()
            .zip(&masks)
            .zip(&reference_weights)
            .map(|((s, mask), reference)| {
                let w = state_weights(*incentive, s);
                sinkhorn_distance(&w, reference, Some(mask), cfg)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = distances.iter().sum::<f64>() / distances.len() as f64;
        rows.push(WeightComparison {
            label: label.clone(),
            n_states: distances.len(),
            distances,
            mean,
            elapsed_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}
