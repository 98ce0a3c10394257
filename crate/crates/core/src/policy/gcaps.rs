//! Graph capsule encoder.
//!
//! Each layer gathers statistical moments of the node features over growing
//! hop neighbourhoods: with the row-normalized adjacency `Â = D⁻¹Ω`, block
//! `(p, k)` is `Âᵏ · X^{∘p}`. The blocks are concatenated `p`-major and mapped
//! to `h` channels, plus a self term and bias, then squashed with `tanh`.

use ndarray::{concatenate, Array2, Axis};

use super::params::{CapsLayer, Encoder};
use crate::error::{Error, Result};
use crate::graphs::StateGraph;

fn normalized_adjacency(graph: &StateGraph) -> Array2<f64> {
    let mut a = graph.adjacency.clone();
    for (mut row, &d) in a.rows_mut().into_iter().zip(graph.degree.iter()) {
        row /= d;
    }
    a
}

fn capsule_layer(a_hat: &Array2<f64>, x: &Array2<f64>, layer: &CapsLayer, moments: usize, hops: usize) -> Array2<f64> {
    let mut blocks = Vec::with_capacity(moments * hops);
    for p in 1..=moments {
        let mut y = x.mapv(|v| v.powi(p as i32));
        for _ in 0..hops {
            y = a_hat.dot(&y);
            blocks.push(y.clone());
        }
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let caps = concatenate(Axis(1), &views).expect("blocks share a row count");
    let mut out = caps.dot(&layer.w_caps) + x.dot(&layer.w_self);
    out += &layer.bias;
    out.mapv_inplace(f64::tanh);
    out
}

/// Node embeddings, `N × h`.
pub fn gcaps_encode(graph: &StateGraph, encoder: &Encoder, moments: usize, hops: usize) -> Result<Array2<f64>> {
    let width = graph.features.ncols();
    let expected = encoder
        .layers
        .first()
        .map(|l| l.w_self.nrows())
        .ok_or_else(|| Error::Config("encoder has no layers".into()))?;
    if width != expected {
        return Err(Error::Config(format!(
            "graph has {width} features per node, encoder expects {expected}"
        )));
    }
    let a_hat = normalized_adjacency(graph);
    let mut x = graph.features.clone();
    for layer in &encoder.layers {
        x = capsule_layer(&a_hat, &x, layer, moments, hops);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphConfig;
    use crate::policy::params::{Hyper, PolicyParams};
    use ndarray::array;

    fn hyper() -> Hyper {
        Hyper {
            h: 6,
            moments: 3,
            hops: 2,
            layers: 1,
            heads: 2,
        }
    }

    /// Loop-by-loop evaluation of the same recurrence.
    fn reference(f: &Array2<f64>, adj: &Array2<f64>, layer: &CapsLayer, moments: usize, hops: usize) -> Array2<f64> {
        let n = f.nrows();
        let fw = f.ncols();
        let h = layer.bias.len();
        let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| adj[[i, j]]).sum()).collect();
        let mut out = Array2::zeros((n, h));
        for i in 0..n {
            for o in 0..h {
                let mut acc = layer.bias[o];
                for c in 0..fw {
                    acc += f[[i, c]] * layer.w_self[[c, o]];
                }
                for p in 0..moments {
                    // Walk k hops from node i: weight vector over nodes.
                    let mut walk = vec![0.0; n];
                    walk[i] = 1.0;
                    for k in 0..hops {
                        let mut next = vec![0.0; n];
                        for (a, &wa) in walk.iter().enumerate() {
                            for b in 0..n {
                                next[b] += wa * adj[[a, b]] / deg[a];
                            }
                        }
                        walk = next;
                        for c in 0..fw {
                            let mut agg = 0.0;
                            for b in 0..n {
                                agg += walk[b] * f[[b, c]].powi(p as i32 + 1);
                            }
                            let row = (p * hops + k) * fw + c;
                            acc += agg * layer.w_caps[[row, o]];
                        }
                    }
                }
                out[[i, o]] = acc.tanh();
            }
        }
        out
    }

    #[test]
    fn matches_reference_recurrence() {
        let params = PolicyParams::init(hyper(), 5).unwrap();
        let f = array![[0.1, 0.9, 0.5, 0.3], [0.7, 0.2, 0.8, 0.1], [0.4, 0.4, 0.2, 1.0]];
        let g = StateGraph::from_features(f.clone(), GraphConfig::default());
        let fast = gcaps_encode(&g, &params.task_encoder, 3, 2).unwrap();
        let slow = reference(&f, &g.adjacency, &params.task_encoder.layers[0], 3, 2);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn single_node_shape() {
        let params = PolicyParams::init(hyper(), 5).unwrap();
        let g = StateGraph::from_features(array![[0.2, 0.3, 0.4, 0.5]], GraphConfig::default());
        let e = gcaps_encode(&g, &params.task_encoder, 3, 2).unwrap();
        assert_eq!(e.dim(), (1, 6));
        assert!(e.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn permutation_equivariant() {
        let params = PolicyParams::init(hyper(), 5).unwrap();
        let f = array![[0.1, 0.9, 0.5, 0.3], [0.7, 0.2, 0.8, 0.1], [0.4, 0.4, 0.2, 1.0]];
        let perm = [2, 0, 1];
        let fp = f.select(Axis(0), &perm);
        let e = gcaps_encode(&StateGraph::from_features(f, GraphConfig::default()), &params.task_encoder, 3, 2).unwrap();
        let ep = gcaps_encode(&StateGraph::from_features(fp, GraphConfig::default()), &params.task_encoder, 3, 2).unwrap();
        for (row, &src) in perm.iter().enumerate() {
            for c in 0..6 {
                assert!((ep[[row, c]] - e[[src, c]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn width_mismatch_is_config_error() {
        let params = PolicyParams::init(hyper(), 5).unwrap();
        let g = StateGraph::from_features(array![[0.2, 0.3, 0.4, 0.5]], GraphConfig::default());
        assert!(matches!(
            gcaps_encode(&g, &params.robot_encoder, 3, 2),
            Err(Error::Config(_))
        ));
    }
}
