//! Task and robot state graphs.
//!
//! Both graphs are fully connected. Edge weights measure node similarity,
//! `1 / (1 + ‖δ_i − δ_j‖)`, over normalized node features.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::sim::World;

/// Deadline and decision-time normalizer (seconds).
pub const TIME_SCALE: f64 = 550.0;
/// Demand normalizer (units).
pub const DEMAND_SCALE: f64 = 10.0;

pub const TASK_FEATURES: usize = 4;
pub const ROBOT_FEATURES: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureNorm {
    #[default]
    L2,
    L1,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub norm: FeatureNorm,
}

/// Node features with similarity adjacency and degree.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGraph {
    pub features: Array2<f64>,
    pub adjacency: Array2<f64>,
    /// Diagonal of the degree matrix.
    pub degree: Array1<f64>,
}

pub type TaskGraph = StateGraph;
pub type RobotGraph = StateGraph;

impl StateGraph {
    pub fn from_features(features: Array2<f64>, config: GraphConfig) -> StateGraph {
        let n = features.nrows();
        let mut adjacency = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            adjacency[[i, i]] = 1.0;
            for j in (i + 1)..n {
                let (ri, rj) = (features.row(i), features.row(j));
                let diff = ri.iter().zip(rj.iter()).map(|(a, b)| a - b);
                let norm = match config.norm {
                    FeatureNorm::L2 => diff.map(|d| d * d).sum::<f64>().sqrt(),
                    FeatureNorm::L1 => diff.map(f64::abs).sum::<f64>(),
                };
                let w = 1.0 / (1.0 + norm);
                adjacency[[i, j]] = w;
                adjacency[[j, i]] = w;
            }
        }
        let degree = adjacency.sum_axis(ndarray::Axis(1));
        StateGraph {
            features,
            adjacency,
            degree,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.features.nrows()
    }
}

/// Task node features `[x, y, τ/550, w^t/10]`.
pub fn task_features(world: &World, tasks: &[usize]) -> Array2<f64> {
    let mut f = Array2::zeros((tasks.len(), TASK_FEATURES));
    for (row, &a) in tasks.iter().enumerate() {
        let spec = world.scenario.task(a);
        let state = world.task_state(a);
        f[[row, 0]] = spec.x;
        f[[row, 1]] = spec.y;
        f[[row, 2]] = spec.deadline / TIME_SCALE;
        f[[row, 3]] = state.residual as f64 / DEMAND_SCALE;
    }
    f
}

/// Robot node features `[x, y, Δ/Δmax, c/Cmax, t_next/550]`.
pub fn robot_features(world: &World, robots: &[usize]) -> Array2<f64> {
    let fleet = world.scenario.fleet;
    let mut f = Array2::zeros((robots.len(), ROBOT_FEATURES));
    for (row, &r) in robots.iter().enumerate() {
        let s = &world.robots[r];
        f[[row, 0]] = s.dest[0];
        f[[row, 1]] = s.dest[1];
        f[[row, 2]] = s.range / fleet.max_range;
        f[[row, 3]] = s.capacity as f64 / fleet.max_capacity as f64;
        f[[row, 4]] = s.t_next / TIME_SCALE;
    }
    f
}

/// Graph over the given task actions (`1..=N`), whatever their status.
pub fn task_graph_over(world: &World, tasks: &[usize], config: GraphConfig) -> TaskGraph {
    StateGraph::from_features(task_features(world, tasks), config)
}

pub fn robot_graph_over(world: &World, robots: &[usize], config: GraphConfig) -> RobotGraph {
    StateGraph::from_features(robot_features(world, robots), config)
}

pub fn build_task_graph(world: &World, config: GraphConfig) -> TaskGraph {
    let all: Vec<usize> = (1..=world.n_tasks()).collect();
    task_graph_over(world, &all, config)
}

pub fn build_robot_graph(world: &World, config: GraphConfig) -> RobotGraph {
    let all: Vec<usize> = (0..world.n_robots()).collect();
    robot_graph_over(world, &all, config)
}
