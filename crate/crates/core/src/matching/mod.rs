//! Masked weighted bigraphs, exact maximum-weight matching, and the allocator
//! interface the simulator drives.

mod hungarian;

pub use hungarian::hungarian_max;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::{Action, World, DEPOT};

/// Robot-row × task-column weights with a feasibility mask.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBigraph {
    pub weights: Array2<f64>,
    pub mask: Array2<bool>,
    /// Row index → robot index in the world.
    pub robot_ids: Vec<usize>,
    /// Column index → task action (`1..=N`).
    pub task_ids: Vec<Action>,
}

impl WeightedBigraph {
    /// A bigraph over raw matrices, with identity index maps (tasks 1-based).
    pub fn from_parts(weights: Array2<f64>, mask: Array2<bool>) -> WeightedBigraph {
        assert_eq!(weights.dim(), mask.dim());
        let (n, m) = weights.dim();
        WeightedBigraph {
            weights,
            mask,
            robot_ids: (0..n).collect(),
            task_ids: (1..=m).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.weights.ncols()
    }

    pub fn is_edge(&self, r: usize, c: usize) -> bool {
        self.mask[[r, c]]
    }

    pub fn weight(&self, r: usize, c: usize) -> f64 {
        self.weights[[r, c]]
    }

    /// `(row, col, weight)` over unmasked edges, row-major.
    pub fn unmasked(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.mask
            .indexed_iter()
            .filter(|(_, &on)| on)
            .map(|((r, c), _)| (r, c, self.weights[[r, c]]))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Matching {
    /// `(row, col)` pairs, ascending by row.
    pub pairs: Vec<(usize, usize)>,
    pub objective: f64,
}

impl Matching {
    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|(r, _)| *r == row).map(|&(_, c)| c)
    }
}

/// Source of bigraph edge weights.
pub trait Incentive: Sync {
    fn name(&self) -> &str;

    /// Weights for `robots × tasks`. Entries on infeasible edges are ignored,
    /// the rest must be finite and nonnegative.
    fn weights(
        &self,
        world: &World,
        robots: &[usize],
        tasks: &[Action],
        rng: &mut ChaCha8Rng,
    ) -> Array2<f64>;

    /// The sub-problem a decision is matched over. Defaults to everything.
    fn restrict(&self, world: &World, _robot: usize) -> (Vec<usize>, Vec<Action>) {
        (
            (0..world.n_robots()).collect(),
            (1..=world.n_tasks()).collect(),
        )
    }
}

/// Adapts a per-edge weight function into an [`Incentive`].
pub struct EdgeFn<F> {
    name: String,
    f: F,
}

impl<F> EdgeFn<F>
where
    F: Fn(&World, usize, Action) -> f64 + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        EdgeFn {
            name: name.into(),
            f,
        }
    }
}

impl<F> Incentive for EdgeFn<F>
where
    F: Fn(&World, usize, Action) -> f64 + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn weights(
        &self,
        world: &World,
        robots: &[usize],
        tasks: &[Action],
        _rng: &mut ChaCha8Rng,
    ) -> Array2<f64> {
        Array2::from_shape_fn((robots.len(), tasks.len()), |(r, c)| {
            if world.is_feasible(robots[r], tasks[c]) {
                (self.f)(world, robots[r], tasks[c])
            } else {
                0.0
            }
        })
    }
}

/// Feasibility mask for `robots × tasks`.
pub fn feasibility_mask(world: &World, robots: &[usize], tasks: &[Action]) -> Array2<bool> {
    Array2::from_shape_fn((robots.len(), tasks.len()), |(r, c)| {
        world.is_feasible(robots[r], tasks[c])
    })
}

/// Masks `weights` by feasibility and checks every live entry.
pub fn build_bigraph_from(
    world: &World,
    robots: &[usize],
    tasks: &[Action],
    mut weights: Array2<f64>,
) -> Result<WeightedBigraph> {
    if weights.dim() != (robots.len(), tasks.len()) {
        return Err(Error::Contract(format!(
            "weight matrix is {:?}, expected {:?}",
            weights.dim(),
            (robots.len(), tasks.len())
        )));
    }
    let mask = feasibility_mask(world, robots, tasks);
    for ((r, c), w) in weights.indexed_iter_mut() {
        if mask[[r, c]] {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::Contract(format!(
                    "weight for robot {} / task {} is {w}",
                    robots[r], tasks[c]
                )));
            }
        } else {
            *w = 0.0;
        }
    }
    Ok(WeightedBigraph {
        weights,
        mask,
        robot_ids: robots.to_vec(),
        task_ids: tasks.to_vec(),
    })
}

/// Full-problem bigraph with weights from `incentive`.
pub fn build_bigraph(
    world: &World,
    incentive: &dyn Incentive,
    rng: &mut ChaCha8Rng,
) -> Result<WeightedBigraph> {
    let robots: Vec<usize> = (0..world.n_robots()).collect();
    let tasks: Vec<Action> = (1..=world.n_tasks()).collect();
    let w = incentive.weights(world, &robots, &tasks, rng);
    build_bigraph_from(world, &robots, &tasks, w)
}

/// Matching-based decision for `robot`: the task matched to it, or the depot
/// when it has nothing feasible or is left unmatched.
///
/// A robot parked at the depot that is left unmatched but still has feasible
/// tasks takes its heaviest feasible edge instead; a depot-to-depot move would
/// not advance its clock.
pub fn decide(
    world: &World,
    incentive: &dyn Incentive,
    robot: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Action> {
    let (robots, tasks) = incentive.restrict(world, robot);
    let Some(row) = robots.iter().position(|&r| r == robot) else {
        return Err(Error::Contract(format!(
            "{} left deciding robot {robot} out of its sub-problem",
            incentive.name()
        )));
    };
    let w = incentive.weights(world, &robots, &tasks, rng);
    let bigraph = build_bigraph_from(world, &robots, &tasks, w)?;
    if !bigraph.mask.row(row).iter().any(|&b| b) {
        return Ok(DEPOT);
    }
    let matching = hungarian_max(&bigraph);
    if let Some(col) = matching.col_of(row) {
        return Ok(bigraph.task_ids[col]);
    }
    if world.robots[robot].at_depot {
        let best = (0..bigraph.n_cols())
            .filter(|&c| bigraph.is_edge(row, c))
            .fold(None::<(usize, f64)>, |best, c| match best {
                Some((_, bw)) if bw >= bigraph.weight(row, c) => best,
                _ => Some((c, bigraph.weight(row, c))),
            });
        if let Some((c, _)) = best {
            return Ok(bigraph.task_ids[c]);
        }
    }
    Ok(DEPOT)
}

/// Uniform choice over the feasible tasks; depot when there are none.
pub fn feas_rnd(world: &World, robot: usize, rng: &mut ChaCha8Rng) -> Action {
    let feasible = world.feasible_tasks(robot);
    if feasible.is_empty() {
        DEPOT
    } else {
        feasible[rng.random_range(0..feasible.len())]
    }
}

/// A decision policy the simulator can drive. Implementations are shared
/// read-only across concurrently running episodes.
pub trait Allocator: Sync {
    fn name(&self) -> &str;
    fn decide(&self, world: &World, robot: usize, rng: &mut ChaCha8Rng) -> Result<Action>;
}

/// Feasibility-preserving random baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeasRnd;

impl Allocator for FeasRnd {
    fn name(&self) -> &str {
        "feas-rnd"
    }

    fn decide(&self, world: &World, robot: usize, rng: &mut ChaCha8Rng) -> Result<Action> {
        Ok(feas_rnd(world, robot, rng))
    }
}

/// Bigraph matching driven by an incentive.
pub struct BigraphAllocator<I> {
    pub incentive: I,
}

impl<I: Incentive> BigraphAllocator<I> {
    pub fn new(incentive: I) -> Self {
        BigraphAllocator { incentive }
    }
}

impl<I: Incentive> Allocator for BigraphAllocator<I> {
    fn name(&self) -> &str {
        self.incentive.name()
    }

    fn decide(&self, world: &World, robot: usize, rng: &mut ChaCha8Rng) -> Result<Action> {
        decide(world, &self.incentive, robot, rng)
    }
}
