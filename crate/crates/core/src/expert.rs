//! Hand-crafted bigraph incentive: remaining range after a round trip through
//! the task, discounted exponentially by arrival time.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matching::Incentive;
use crate::sim::{distance, Action, World};

pub const DEFAULT_ALPHA: f64 = 550.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertConfig {
    /// Time horizon of the exponential discount, seconds.
    pub alpha: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        ExpertConfig {
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// Core formula. `arrival` is the absolute time the robot reaches the task,
/// compared against the absolute `deadline`; service takes no time.
pub fn incentive_value(
    range: f64,
    d_robot_task: f64,
    d_task_depot: f64,
    arrival: f64,
    deadline: f64,
    alpha: f64,
) -> f64 {
    if arrival > deadline {
        return 0.0;
    }
    let leftover = range - (d_robot_task + d_task_depot);
    leftover.max(0.0) * (-arrival / alpha).exp()
}

/// Weight of edge (`robot`, task `action`) in the current world.
pub fn expert_weight(world: &World, robot: usize, action: Action, config: &ExpertConfig) -> f64 {
    let r = &world.robots[robot];
    let task = world.scenario.task(action);
    let pos = [task.x, task.y];
    let d_ri = distance(r.dest, pos);
    let d_i0 = distance(pos, world.scenario.depot);
    let arrival = r.t_next + d_ri / world.scenario.fleet.speed;
    incentive_value(r.range, d_ri, d_i0, arrival, task.deadline, config.alpha)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Expert {
    pub config: ExpertConfig,
}

impl Expert {
    pub fn new(config: ExpertConfig) -> Self {
        Expert { config }
    }
}

impl Incentive for Expert {
    fn name(&self) -> &str {
        "big-mrta"
    }

    fn weights(
        &self,
        world: &World,
        robots: &[usize],
        tasks: &[Action],
        _rng: &mut ChaCha8Rng,
    ) -> Array2<f64> {
        Array2::from_shape_fn((robots.len(), tasks.len()), |(r, c)| {
            expert_weight(world, robots[r], tasks[c], &self.config)
        })
    }
}
