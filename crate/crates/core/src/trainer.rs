//! Gradient-free training of the learned incentive.
//!
//! A (μ, λ) evolution strategy over the flat parameter vector: Gaussian
//! perturbations (optionally in antithetic pairs), every candidate scored on
//! the same fresh scenario batch, the next mean taken as the average of the
//! elites. Matching is not differentiable, so this trains straight through it.
//! The best mean seen on a fixed held-out batch is what gets returned.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::BigraphAllocator;
use crate::policy::{BigCam, PolicyConfig, PolicyParams, SampleMode};
use crate::scenario::{derive_seed, FleetSpec, Scenario};
use crate::sim::{run_episode, SimConfig};

pub const TRAIN_LOG_HEADER: &str = "generation,best,mean,std,elapsed_s,param_norm";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Candidates per generation (λ).
    pub population: usize,
    /// Candidates averaged into the next mean (μ).
    pub elites: usize,
    pub noise: f64,
    pub generations: usize,
    pub scenarios_per_eval: usize,
    pub heldout_scenarios: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            population: 16,
            elites: 4,
            noise: 0.02,
            generations: 200,
            scenarios_per_eval: 8,
            heldout_scenarios: 16,
            seed: 0,
            antithetic: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.elites == 0 || self.elites > self.population {
            return Err(Error::Config(format!(
                "need 1 <= elites ({}) <= population ({})",
                self.elites, self.population
            )));
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return Err(Error::Config(format!("noise must be > 0, got {}", self.noise)));
        }
        if self.scenarios_per_eval == 0 || self.heldout_scenarios == 0 {
            return Err(Error::Config("scenario batches must be non-empty".into()));
        }
        Ok(())
    }
}

/// Deterministic supply of training scenarios. Generation `g` always sees the
/// same batch; the held-out batch never overlaps the training stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStream {
    pub n_tasks: usize,
    pub fleet: FleetSpec,
    pub seed: u64,
}

impl ScenarioStream {
    pub fn new(n_tasks: usize, fleet: FleetSpec, seed: u64) -> Self {
        ScenarioStream {
            n_tasks,
            fleet,
            seed,
        }
    }

    pub fn batch(&self, generation: usize, count: usize) -> Vec<Scenario> {
        let gen_seed = derive_seed(self.seed, 2 * generation as u64);
        self.draw(gen_seed, count)
    }

    pub fn heldout(&self, count: usize) -> Vec<Scenario> {
        self.draw(derive_seed(!self.seed, 1), count)
    }

    fn draw(&self, base: u64, count: usize) -> Vec<Scenario> {
        (0..count as u64)
            .map(|i| Scenario::generate_with_fleet(self.n_tasks, self.fleet, derive_seed(base, i)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
    pub elapsed_s: f64,
    pub param_norm: f64,
    pub heldout: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub initial_heldout: f64,
    pub best_heldout: f64,
    pub records: Vec<GenerationRecord>,
}

impl TrainLog {
    pub fn csv_row(r: &GenerationRecord) -> String {
        format!(
            "{},{},{},{},{},{}",
            r.generation, r.best, r.mean, r.std, r.elapsed_s, r.param_norm
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAIN_LOG_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", Self::csv_row(r));
        }
        out
    }

    /// Same values apart from wall-clock time.
    pub fn same_trajectory(&self, other: &TrainLog) -> bool {
        self.records.len() == other.records.len()
            && self.initial_heldout == other.initial_heldout
            && self.best_heldout == other.best_heldout
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                (a.generation, a.best, a.mean, a.std, a.param_norm, a.heldout)
                    == (b.generation, b.best, b.mean, b.std, b.param_norm, b.heldout)
            })
    }
}

/// Mean episodic reward of the greedy policy over `scenarios`.
pub fn evaluate(
    params: &Arc<PolicyParams>,
    policy: &PolicyConfig,
    sim: SimConfig,
    scenarios: &[Scenario],
) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::EmptyBatch("evaluation needs at least one scenario"));
    }
    let config = PolicyConfig {
        mode: SampleMode::Test,
        ..*policy
    };
    let allocator = BigraphAllocator::new(BigCam::new(params.clone(), config));
    let rewards = scenarios
        .par_iter()
        .map(|s| run_episode(s, &allocator, sim).map(|r| r.total_reward))
        .collect::<Result<Vec<f64>>>()?;
    Ok(rewards.iter().sum::<f64>() / rewards.len() as f64)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Everything a training run needs besides the starting point.
#[derive(Debug, Clone, Copy)]
pub struct TrainSetup {
    pub config: TrainConfig,
    pub policy: PolicyConfig,
    pub sim: SimConfig,
    pub stream: ScenarioStream,
}

/// Runs the evolution loop. `on_generation` sees each record and the current
/// mean parameters, e.g. for streaming the log or writing checkpoints.
pub fn train(
    initial: PolicyParams,
    setup: &TrainSetup,
    mut on_generation: impl FnMut(&GenerationRecord, &PolicyParams) -> Result<()>,
) -> Result<(PolicyParams, TrainLog)> {
    let cfg = &setup.config;
    cfg.validate()?;
    let started = Instant::now();
    let hyper = initial.hyper;
    let heldout = setup.stream.heldout(cfg.heldout_scenarios);

    let initial = Arc::new(initial);
    let initial_heldout = evaluate(&initial, &setup.policy, setup.sim, &heldout)?;
    let mut best = initial.clone();
    let mut best_heldout = initial_heldout;
    let mut log = TrainLog {
        initial_heldout,
        best_heldout,
        records: Vec::with_capacity(cfg.generations),
    };

    let mut mean = initial.flatten();
    let dim = mean.len();
    for generation in 0..cfg.generations {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, generation as u64));
        let batch = setup.stream.batch(generation, cfg.scenarios_per_eval);

        let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
        while candidates.len() < cfg.population {
            let eps: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            candidates.push(mean.iter().zip(&eps).map(|(m, e)| m + cfg.noise * e).collect());
            if cfg.antithetic && candidates.len() < cfg.population {
                candidates.push(mean.iter().zip(&eps).map(|(m, e)| m - cfg.noise * e).collect());
            }
        }

        let scores = candidates
            .par_iter()
            .map(|flat| {
                let params = Arc::new(PolicyParams::unflatten(hyper, flat)?);
                evaluate(&params, &setup.policy, setup.sim, &batch)
            })
            .collect::<Result<Vec<f64>>>()?;

        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut next = vec![0.0; dim];
        for &k in order.iter().take(cfg.elites) {
            for (n, c) in next.iter_mut().zip(&candidates[k]) {
                *n += c;
            }
        }
        let inv = 1.0 / cfg.elites as f64;
        next.iter_mut().for_each(|v| *v *= inv);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Contract(format!(
                "elite recombination produced non-finite parameters at generation {generation}"
            )));
        }
        mean = next;

        let current = Arc::new(PolicyParams::unflatten(hyper, &mean)?);
        let heldout_score = evaluate(&current, &setup.policy, setup.sim, &heldout)?;
        if heldout_score > best_heldout {
            best_heldout = heldout_score;
            best = current.clone();
        }

        let n = scores.len() as f64;
        let avg = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - avg).powi(2)).sum::<f64>() / n;
        let record = GenerationRecord {
            generation,
            best: scores[order[0]],
            mean: avg,
            std: var.sqrt(),
            elapsed_s: started.elapsed().as_secs_f64(),
            param_norm: norm(&mean),
            heldout: heldout_score,
        };
        on_generation(&record, &current)?;
        log.records.push(record);
    }
    log.best_heldout = best_heldout;
    let best = Arc::try_unwrap(best).unwrap_or_else(|shared| (*shared).clone());
    Ok((best, log))
}
