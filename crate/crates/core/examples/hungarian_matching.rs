//! Maximum-weight matching on a small masked bigraph.

use mrta::matching::{hungarian_max, WeightedBigraph};
use ndarray::array;

fn main() {
    let weights = array![
        [0.9, 0.4, 0.0, 0.7],
        [0.8, 0.8, 0.3, 0.1],
        [0.2, 0.6, 0.5, 0.9],
    ];
    // Robot 0 cannot reach task 3; robot 2 cannot reach task 1.
    let mask = array![
        [true, true, true, false],
        [true, true, true, true],
        [true, false, true, true],
    ];
    let bigraph = WeightedBigraph::from_parts(weights, mask);
    let m = hungarian_max(&bigraph);
    for (r, c) in &m.pairs {
        println!("robot {r} -> task {} (w = {})", c + 1, bigraph.weight(*r, *c));
    }
    println!("objective {:.2}", m.objective);

    // Ties resolve to the row-wise lexicographically smallest assignment.
    let tied = WeightedBigraph::from_parts(array![[1.0, 1.0], [1.0, 1.0]], ndarray::Array2::from_elem((2, 2), true));
    println!("tie-break: {:?}", hungarian_max(&tied).pairs);
}
