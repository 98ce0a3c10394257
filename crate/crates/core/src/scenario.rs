//! Episode definitions: task sets, depot, fleet parameters.
//!
//! Scenarios are immutable once generated. Task ids run `1..=N` and the depot
//! is always action `0`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCENARIO_FORMAT: u32 = 1;

pub const DEFAULT_SPEED: f64 = 0.01;
pub const DEFAULT_MAX_RANGE: f64 = 4.0;
pub const DEFAULT_MAX_CAPACITY: u32 = 10;

pub const DEADLINE_MIN: f64 = 165.0;
pub const DEADLINE_MAX: f64 = 550.0;
pub const DEMAND_MIN: u32 = 1;
pub const DEMAND_MAX: u32 = 10;

/// Tasks and robots of the training distribution; scale factors multiply these.
pub const BASE_TASKS: usize = 50;
pub const BASE_ROBOTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub deadline: f64,
    pub demand: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub n_robots: usize,
    pub speed: f64,
    pub max_range: f64,
    pub max_capacity: u32,
}

impl FleetSpec {
    pub fn with_robots(n_robots: usize) -> Self {
        FleetSpec {
            n_robots,
            ..FleetSpec::default()
        }
    }
}

impl Default for FleetSpec {
    fn default() -> Self {
        FleetSpec {
            n_robots: BASE_ROBOTS,
            speed: DEFAULT_SPEED,
            max_range: DEFAULT_MAX_RANGE,
            max_capacity: DEFAULT_MAX_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub format: u32,
    pub seed: u64,
    pub depot: [f64; 2],
    pub fleet: FleetSpec,
    pub tasks: Vec<TaskSpec>,
}

/// How strictly `load` checks values against the generating distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    /// Out-of-distribution values become warnings.
    #[default]
    Lenient,
    /// Out-of-distribution values are errors.
    Strict,
}

#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub warnings: Vec<String>,
}

impl LoadedScenario {
    pub fn has_warnings(&self) -> bool {
        !self.warnings.is_empty()
    }
}

/// splitmix64 finalizer; a bijection on u64, so distinct inputs give distinct seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Scenario {
    /// Draws a scenario from the uniform training distribution with the default fleet.
    pub fn generate(n_tasks: usize, n_robots: usize, seed: u64) -> Scenario {
        Self::generate_with_fleet(n_tasks, FleetSpec::with_robots(n_robots), seed)
    }

    pub fn generate_with_fleet(n_tasks: usize, fleet: FleetSpec, seed: u64) -> Scenario {
        assert!(n_tasks >= 1, "a scenario needs at least one task");
        assert!(fleet.n_robots >= 1, "a scenario needs at least one robot");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depot = [rng.random::<f64>(), rng.random::<f64>()];
        let tasks = (1..=n_tasks)
            .map(|id| TaskSpec {
                id,
                x: rng.random::<f64>(),
                y: rng.random::<f64>(),
                deadline: rng.random_range(DEADLINE_MIN..=DEADLINE_MAX),
                demand: rng.random_range(DEMAND_MIN..=DEMAND_MAX),
            })
            .collect();
        Scenario {
            format: SCENARIO_FORMAT,
            seed,
            depot,
            fleet,
            tasks,
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn n_robots(&self) -> usize {
        self.fleet.n_robots
    }

    /// Task by action index (`1..=N`).
    pub fn task(&self, action: usize) -> &TaskSpec {
        &self.tasks[action - 1]
    }

    pub fn total_demand(&self) -> u64 {
        self.tasks.iter().map(|t| t.demand as u64).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str, validation: Validation) -> Result<LoadedScenario> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Parse {
                path: "<memory>".into(),
                message: e.to_string(),
            })?;
        let warnings = scenario.validate(validation)?;
        Ok(LoadedScenario { scenario, warnings })
    }

    /// SHA-256 over the canonical JSON form; used to prove paired comparisons
    /// ran on the same instances.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, validation: Validation) -> Result<LoadedScenario> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, validation).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    /// Structural checks always fail hard. Distribution range checks fail only
    /// under [`Validation::Strict`]; otherwise they are returned as warnings.
    pub fn validate(&self, validation: Validation) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.format != SCENARIO_FORMAT {
            return bad(format!(
                "format: expected {SCENARIO_FORMAT}, found {}",
                self.format
            ));
        }
        if self.tasks.is_empty() {
            return bad("tasks: at least one task is required".into());
        }
        let f = &self.fleet;
        if f.n_robots < 1 {
            return bad("fleet.n_robots: must be >= 1".into());
        }
        if !(f.speed.is_finite() && f.speed > 0.0) {
            return bad(format!("fleet.speed: must be > 0, found {}", f.speed));
        }
        if !(f.max_range.is_finite() && f.max_range > 0.0) {
            return bad(format!("fleet.max_range: must be > 0, found {}", f.max_range));
        }
        if f.max_capacity < 1 {
            return bad("fleet.max_capacity: must be >= 1".into());
        }
        if !self.depot.iter().all(|v| v.is_finite()) {
            return bad("depot: coordinates must be finite".into());
        }
        for (k, t) in self.tasks.iter().enumerate() {
            if t.id != k + 1 {
                return bad(format!(
                    "tasks[{k}].id: ids must be contiguous from 1, found {}",
                    t.id
                ));
            }
            if !(t.x.is_finite() && t.y.is_finite() && t.deadline.is_finite()) {
                return bad(format!("tasks[{k}]: non-finite coordinate or deadline"));
            }
        }

        let mut warnings = Vec::new();
        let unit = 0.0..=1.0;
        if !unit.contains(&self.depot[0]) || !unit.contains(&self.depot[1]) {
            warnings.push(format!("depot: {:?} outside [0,1]^2", self.depot));
        }
        for (k, t) in self.tasks.iter().enumerate() {
            if !unit.contains(&t.x) || !unit.contains(&t.y) {
                warnings.push(format!("tasks[{k}]: position ({}, {}) outside [0,1]^2", t.x, t.y));
            }
            if !(DEADLINE_MIN..=DEADLINE_MAX).contains(&t.deadline) {
                warnings.push(format!(
                    "tasks[{k}].deadline: {} outside [{DEADLINE_MIN}, {DEADLINE_MAX}]",
                    t.deadline
                ));
            }
            if !(DEMAND_MIN..=DEMAND_MAX).contains(&t.demand) {
                warnings.push(format!(
                    "tasks[{k}].demand: {} outside [{DEMAND_MIN}, {DEMAND_MAX}]",
                    t.demand
                ));
            }
        }
        match validation {
            Validation::Strict if !warnings.is_empty() => {
                Err(Error::InvalidScenario(warnings.join("; ")))
            }
            _ => Ok(warnings),
        }
    }
}

/// A batch for scale factors `(s_t, s_r)`: `50·s_t` tasks, `6·s_t·s_r` robots.
pub fn scaled_batch(
    s_t: usize,
    s_r: usize,
    count: usize,
    base_seed: u64,
    fleet: FleetSpec,
) -> Vec<Scenario> {
    let n_tasks = BASE_TASKS * s_t;
    let fleet = FleetSpec {
        n_robots: BASE_ROBOTS * s_t * s_r,
        ..fleet
    };
    (0..count as u64)
        .map(|i| Scenario::generate_with_fleet(n_tasks, fleet, derive_seed(base_seed, i)))
        .collect()
}
