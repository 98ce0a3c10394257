//! Event-driven MRTA simulator.
//!
//! Decisions happen only when a robot reaches its destination (a task or the
//! depot). Arrival effects are applied lazily, when the arriving robot becomes
//! the next decider, so every state change is processed in time order.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::Allocator;
use crate::scenario::{derive_seed, Scenario};

/// Task index `1..=N`, or [`DEPOT`].
pub type Action = usize;
pub const DEPOT: Action = 0;

/// Gap between the initial decision times of consecutive robots.
pub const START_STAGGER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Prune a task unless the robot can cover its whole uncommitted residual.
    pub strict_capacity_pruning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub dest: [f64; 2],
    pub range: f64,
    pub capacity: u32,
    pub t_next: f64,
    pub at_depot: bool,
    /// Action whose arrival is pending; `None` once processed.
    pub pending: Option<Action>,
    /// Units pledged to the pending task.
    pub pledge: u32,
    pub retired: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Active,
    Completed,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskState {
    pub residual: u32,
    pub status: TaskStatus,
    pub completion_time: Option<f64>,
    pub committed: u32,
}

impl TaskState {
    pub fn uncommitted(&self) -> u32 {
        self.residual.saturating_sub(self.committed)
    }

    pub fn is_active(&self) -> bool {
        self.status == TaskStatus::Active
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub time: f64,
    pub robot: usize,
    pub action: Action,
}

#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    pub config: SimConfig,
    pub clock: f64,
    pub robots: Vec<RobotState>,
    pub tasks: Vec<TaskState>,
    pub reward_accum: f64,
    pub decision_log: Vec<Decision>,
    pub delivered: u64,
    pub task_visits: usize,
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl World {
    /// All robots at the depot with full range and capacity.
    pub fn new(scenario: &Scenario, config: SimConfig) -> World {
        let fleet = scenario.fleet;
        let robots = (0..fleet.n_robots)
            .map(|r| RobotState {
                dest: scenario.depot,
                range: fleet.max_range,
                capacity: fleet.max_capacity,
                t_next: r as f64 * START_STAGGER,
                at_depot: true,
                pending: None,
                pledge: 0,
                retired: false,
            })
            .collect();
        let tasks = scenario
            .tasks
            .iter()
            .map(|t| TaskState {
                residual: t.demand,
                status: if t.demand == 0 {
                    TaskStatus::Completed
                } else {
                    TaskStatus::Active
                },
                completion_time: (t.demand == 0).then_some(0.0),
                committed: 0,
            })
            .collect();
        World {
            scenario: scenario.clone(),
            config,
            clock: 0.0,
            robots,
            tasks,
            reward_accum: 0.0,
            decision_log: Vec::new(),
            delivered: 0,
            task_visits: 0,
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn n_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn task_pos(&self, action: Action) -> [f64; 2] {
        if action == DEPOT {
            self.scenario.depot
        } else {
            let t = self.scenario.task(action);
            [t.x, t.y]
        }
    }

    pub fn task_state(&self, action: Action) -> &TaskState {
        &self.tasks[action - 1]
    }

    /// Robot with the smallest next decision time; ties go to the lower index.
    pub fn next_decider(&self) -> Result<usize> {
        self.robots
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.retired)
            .min_by(|(i, a), (j, b)| a.t_next.total_cmp(&b.t_next).then(i.cmp(j)))
            .map(|(i, _)| i)
            .ok_or(Error::Terminated)
    }

    /// Advances the clock to the robot's decision instant, applies its arrival
    /// and sweeps expired tasks.
    pub fn begin_decision(&mut self, robot: usize) {
        let t = self.robots[robot].t_next;
        debug_assert!(t >= self.clock, "clock must not run backwards");
        self.clock = self.clock.max(t);
        self.process_arrival(robot);
        self.sweep_expired();
    }

    fn process_arrival(&mut self, robot: usize) {
        let max_range = self.scenario.fleet.max_range;
        let max_capacity = self.scenario.fleet.max_capacity;
        let arrival = self.robots[robot].t_next;
        let Some(action) = self.robots[robot].pending.take() else {
            return;
        };
        let pledge = std::mem::take(&mut self.robots[robot].pledge);
        if action == DEPOT {
            let r = &mut self.robots[robot];
            r.range = max_range;
            r.capacity = max_capacity;
            return;
        }
        let task = &mut self.tasks[action - 1];
        task.committed = task.committed.saturating_sub(pledge);
        if task.status != TaskStatus::Active {
            return;
        }
        let r = &mut self.robots[robot];
        let delivered = task.residual.min(r.capacity);
        task.residual -= delivered;
        r.capacity -= delivered;
        self.delivered += delivered as u64;
        if task.residual == 0 {
            task.status = TaskStatus::Completed;
            task.completion_time = Some(arrival);
        }
    }

    fn sweep_expired(&mut self) {
        let clock = self.clock;
        for (task, spec) in self.tasks.iter_mut().zip(&self.scenario.tasks) {
            if task.status == TaskStatus::Active && spec.deadline < clock {
                task.status = TaskStatus::Expired;
            }
        }
    }

    /// Time at which `robot` would reach task `action` if it left its current
    /// destination at its next decision time.
    pub fn arrival_time(&self, robot: usize, action: Action) -> f64 {
        let r = &self.robots[robot];
        r.t_next + distance(r.dest, self.task_pos(action)) / self.scenario.fleet.speed
    }

    pub fn is_feasible(&self, robot: usize, action: Action) -> bool {
        if action == DEPOT {
            return true;
        }
        if action > self.n_tasks() {
            return false;
        }
        let r = &self.robots[robot];
        let task = self.task_state(action);
        let spec = self.scenario.task(action);
        let pos = [spec.x, spec.y];
        let needed = distance(r.dest, pos) + distance(pos, self.scenario.depot);
        let open = task.uncommitted();
        let capacity_ok = if self.config.strict_capacity_pruning {
            r.capacity >= open
        } else {
            r.capacity >= 1
        };
        task.is_active()
            && !r.retired
            && r.range >= needed
            && capacity_ok
            && self.arrival_time(robot, action) <= spec.deadline
            && open > 0
    }

    /// Feasible task actions for `robot`, ascending. The depot is implied.
    pub fn feasible_tasks(&self, robot: usize) -> Vec<Action> {
        (1..=self.n_tasks())
            .filter(|&a| self.is_feasible(robot, a))
            .collect()
    }

    /// Commits `robot` to `action` and schedules its arrival. Returns the reward.
    pub fn apply(&mut self, robot: usize, action: Action) -> Result<f64> {
        if self.robots[robot].retired {
            return Err(Error::Contract(format!("robot {robot} is retired")));
        }
        if !self.is_feasible(robot, action) {
            return Err(Error::Contract(format!(
                "action {action} is infeasible for robot {robot} at t={}",
                self.clock
            )));
        }
        if action == DEPOT && self.robots[robot].at_depot {
            return Err(Error::Contract(format!(
                "robot {robot} is already at the depot"
            )));
        }
        let target = self.task_pos(action);
        let speed = self.scenario.fleet.speed;
        let reward = if action == DEPOT {
            0.0
        } else {
            let capacity = self.robots[robot].capacity;
            let task = &mut self.tasks[action - 1];
            let pledge = task.uncommitted().min(capacity);
            task.committed += pledge;
            self.robots[robot].pledge = pledge;
            self.task_visits += 1;
            1.0 / self.n_tasks() as f64
        };
        let r = &mut self.robots[robot];
        let d = distance(r.dest, target);
        // Rounding can leave a residue of a few ulps below zero on the final leg.
        r.range = (r.range - d).max(0.0);
        r.t_next += d / speed;
        r.dest = target;
        r.at_depot = action == DEPOT;
        r.pending = Some(action);
        self.reward_accum += reward;
        self.decision_log.push(Decision {
            time: self.clock,
            robot,
            action,
        });
        Ok(reward)
    }

    /// Takes a robot out of the decision rotation. Only called for a robot
    /// parked at the depot with nothing feasible: uncommitted demand never
    /// grows and the clock never runs back, so nothing can become feasible.
    pub fn retire(&mut self, robot: usize) {
        self.robots[robot].retired = true;
    }

    pub fn is_terminal(&self) -> bool {
        self.robots.iter().all(|r| r.retired)
    }

    pub fn n_success(&self) -> usize {
        self.tasks
            .iter()
            .filter(|t| t.status == TaskStatus::Completed)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub n_tasks: usize,
    pub n_success: usize,
    pub completion_rate: f64,
    pub f_cost: f64,
    pub total_reward: f64,
    pub n_decisions: usize,
    pub per_decision_times: Vec<f64>,
    pub final_clock: f64,
    pub decisions: Vec<Decision>,
}

impl EpisodeResult {
    pub fn episode_decision_time(&self) -> f64 {
        self.per_decision_times.iter().sum()
    }

    pub fn mean_decision_time(&self) -> f64 {
        if self.per_decision_times.is_empty() {
            0.0
        } else {
            self.episode_decision_time() / self.per_decision_times.len() as f64
        }
    }

    /// Identical fields apart from wall-clock timings.
    pub fn same_outcome(&self, other: &EpisodeResult) -> bool {
        self.n_success == other.n_success
            && self.total_reward == other.total_reward
            && self.decisions == other.decisions
            && self.final_clock == other.final_clock
    }

    fn from_world(world: &World, per_decision_times: Vec<f64>) -> EpisodeResult {
        let n = world.n_tasks();
        let n_success = world.n_success();
        let f_cost = (n - n_success) as f64 / n as f64;
        EpisodeResult {
            n_tasks: n,
            n_success,
            completion_rate: n_success as f64 / n as f64,
            f_cost,
            total_reward: world.reward_accum,
            n_decisions: world.decision_log.len(),
            per_decision_times,
            final_clock: world.clock,
            decisions: world.decision_log.clone(),
        }
    }
}

/// Per-episode RNG stream, derived from the scenario seed.
pub fn episode_rng(scenario: &Scenario) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, 0x5EED_0A11))
}

pub fn run_episode(
    scenario: &Scenario,
    allocator: &dyn Allocator,
    config: SimConfig,
) -> Result<EpisodeResult> {
    let mut rng = episode_rng(scenario);
    run_world(World::new(scenario, config), allocator, &mut rng, |_, _| {})
}

/// Runs an episode from an arbitrary starting world. `observe` sees the world
/// at every decision instant, after arrivals are applied and before the
/// allocator is consulted.
pub fn run_world(
    mut world: World,
    allocator: &dyn Allocator,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(&World, usize),
) -> Result<EpisodeResult> {
    let mut times = Vec::new();
    loop {
        let robot = match world.next_decider() {
            Ok(r) => r,
            Err(Error::Terminated) => break,
            Err(e) => return Err(e),
        };
        world.begin_decision(robot);
        let at_depot = world.robots[robot].at_depot;
        if at_depot && world.feasible_tasks(robot).is_empty() {
            world.retire(robot);
            continue;
        }
        observe(&world, robot);
        let started = Instant::now();
        let action = allocator.decide(&world, robot, rng)?;
        times.push(started.elapsed().as_secs_f64());
        if action == DEPOT && at_depot {
            return Err(Error::Contract(format!(
                "{} sent robot {robot} from the depot to the depot at t={}",
                allocator.name(),
                world.clock
            )));
        }
        world.apply(robot, action).map_err(|e| match e {
            Error::Contract(msg) => Error::Contract(format!("{}: {msg}", allocator.name())),
            other => other,
        })?;
    }
    Ok(EpisodeResult::from_world(&world, times))
}
