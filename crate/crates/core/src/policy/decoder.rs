//! Multi-head attention decoder: robot queries against task keys and values,
//! producing an `N^R × N^T` score matrix.

use ndarray::{s, Array2, Axis};

use super::params::Decoder;

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// `M = G · (F^T W_final)ᵀ`, with `G` the feed-forward map of the projected
/// attention heads.
pub fn mha_decode(task_emb: &Array2<f64>, robot_emb: &Array2<f64>, dec: &Decoder, heads: usize) -> Array2<f64> {
    let h = dec.w_query.nrows();
    assert_eq!(task_emb.ncols(), h, "task embedding width");
    assert_eq!(robot_emb.ncols(), h, "robot embedding width");
    let d = h / heads;
    let scale = 1.0 / (d as f64).sqrt();
    let q = robot_emb.dot(&dec.w_query);
    let k = task_emb.dot(&dec.w_key);
    let v = task_emb.dot(&dec.w_value);
    let mut concat = Array2::zeros((robot_emb.nrows(), h));
    for head in 0..heads {
        let cols = s![.., head * d..(head + 1) * d];
        let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        softmax_rows(&mut scores);
        concat.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
    }
    let out = concat.dot(&dec.w_out);
    let g = out.dot(&dec.w_ff) + &dec.b_ff.view().insert_axis(Axis(0));
    let task_side = task_emb.dot(&dec.w_final);
    g.dot(&task_side.t())
}
