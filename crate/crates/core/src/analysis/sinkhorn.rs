//! Entropic optimal transport between two weight matrices.
//!
//! Both matrices are flattened over a common edge set and L1-normalized. The
//! ground cost is 0 between an edge and itself and 1 otherwise, so the exact
//! transport cost is the total-variation distance. That cost makes the Gibbs
//! kernel `(1 - κ)I + κ11ᵀ` with `κ = exp(-1/ε)`, which lets every Sinkhorn
//! half-step run in linear time.
//!
//! The regularization is annealed from ε = 1 down to the target, with plain
//! scalings while `κ` is representable and in the log domain otherwise. The
//! reported value is the debiased transport cost
//! `⟨T_ab, C⟩ - ½⟨T_aa, C⟩ - ½⟨T_bb, C⟩`, clamped to `[0, 1]`, symmetrized.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_REG: f64 = 0.1;
pub const DEFAULT_ITERS: usize = 200;
/// Marginal violation (L1) at which a stage stops early.
const MARGINAL_TOL: f64 = 1e-12;
const CHECK_EVERY: usize = 10;
/// Below this the multiplicative form loses too much range; use logs.
const MIN_KAPPA: f64 = 1e-30;
const ANNEAL_START: f64 = 1.0;
const ANNEAL_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornConfig {
    /// Target entropic regularization ε.
    pub reg: f64,
    /// Iteration cap for each annealing stage.
    pub iters: usize,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        SinkhornConfig {
            reg: DEFAULT_REG,
            iters: DEFAULT_ITERS,
        }
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `out_i = -ε · log Σ_j exp((pot_j - C_ij)/ε)` for the 0/1 cost, i.e. the
/// soft-min against the other side's potential, for all `i`.
fn soft_min(pot: &[f64], eps: f64, out: &mut [f64]) {
    let scaled: Vec<f64> = pot.iter().map(|p| p / eps).collect();
    let lse_all = log_sum_exp(&scaled);
    let log_kappa = -1.0 / eps;
    let log_diag = (-(-1.0 / eps).exp()).ln_1p();
    for (o, &s) in out.iter_mut().zip(&scaled) {
        // log((1-κ)e^s + κ Σ e^s_j)
        let a = log_diag + s;
        let b = log_kappa + lse_all;
        let hi = a.max(b);
        let l = if hi == f64::NEG_INFINITY {
            hi
        } else {
            hi + ((a - hi).exp() + (b - hi).exp()).ln()
        };
        *o = -eps * l;
    }
}

/// Log-domain half-steps at `eps` until the row marginals match or the cap
/// is hit. Robust for any `eps`, but every entry costs a few `exp`/`ln`.
fn log_stage(a: &[f64], b: &[f64], f: &mut [f64], g: &mut [f64], eps: f64, iters: usize) {
    let n = a.len();
    let mut tmp = vec![0.0; n];
    for k in 0..iters {
        soft_min(g, eps, &mut tmp);
        for i in 0..n {
            f[i] = if a[i] > 0.0 { eps * a[i].ln() + tmp[i] } else { f64::NEG_INFINITY };
        }
        soft_min(f, eps, &mut tmp);
        for j in 0..n {
            g[j] = if b[j] > 0.0 { eps * b[j].ln() + tmp[j] } else { f64::NEG_INFINITY };
        }
        if k % CHECK_EVERY == CHECK_EVERY - 1 {
            soft_min(g, eps, &mut tmp);
            let err: f64 = (0..n)
                .filter(|&i| a[i] > 0.0)
                .map(|i| (((f[i] - tmp[i]) / eps).exp() - a[i]).abs())
                .sum();
            if err < MARGINAL_TOL {
                return;
            }
        }
    }
}

/// Multiplicative half-steps on `u = e^{f/ε}`, `v = e^{g/ε}`. Returns false,
/// leaving the potentials untouched, if the scalings are not representable.
fn scaling_stage(a: &[f64], b: &[f64], f: &mut [f64], g: &mut [f64], eps: f64, iters: usize) -> bool {
    let kappa = (-1.0 / eps).exp();
    if kappa < MIN_KAPPA {
        return false;
    }
    let keep = 1.0 - kappa;
    let mut u: Vec<f64> = f.iter().map(|x| (x / eps).exp()).collect();
    let mut v: Vec<f64> = g.iter().map(|x| (x / eps).exp()).collect();
    let ok = |xs: &[f64], m: &[f64]| xs.iter().zip(m).all(|(x, &w)| x.is_finite() && (w == 0.0 || *x > 0.0));
    if !ok(&u, a) || !ok(&v, b) {
        return false;
    }
    let n = a.len();
    for k in 0..iters {
        let sv: f64 = v.iter().sum();
        for i in 0..n {
            u[i] = if a[i] > 0.0 { a[i] / (keep * v[i] + kappa * sv) } else { 0.0 };
        }
        let su: f64 = u.iter().sum();
        for j in 0..n {
            v[j] = if b[j] > 0.0 { b[j] / (keep * u[j] + kappa * su) } else { 0.0 };
        }
        if k % CHECK_EVERY == CHECK_EVERY - 1 {
            let sv: f64 = v.iter().sum();
            let err: f64 = (0..n)
                .map(|i| (u[i] * (keep * v[i] + kappa * sv) - a[i]).abs())
                .sum();
            if !err.is_finite() {
                return false;
            }
            if err < MARGINAL_TOL {
                break;
            }
        }
    }
    if !ok(&u, a) || !ok(&v, b) {
        return false;
    }
    for i in 0..n {
        f[i] = eps * u[i].ln();
        g[i] = eps * v[i].ln();
    }
    true
}

/// Transport cost `⟨T, C⟩` between distributions `a` and `b` (same length,
/// each summing to 1) at regularization `cfg.reg`.
fn transport_cost(a: &[f64], b: &[f64], cfg: &SinkhornConfig) -> f64 {
    let n = a.len();
    // Zero-mass points carry -inf potential so they never receive mass.
    let mut f: Vec<f64> = a.iter().map(|&x| if x > 0.0 { 0.0 } else { f64::NEG_INFINITY }).collect();
    let mut g: Vec<f64> = b.iter().map(|&x| if x > 0.0 { 0.0 } else { f64::NEG_INFINITY }).collect();
    let iters = cfg.iters.max(1);
    let mut eps = ANNEAL_START.max(cfg.reg);
    loop {
        if !scaling_stage(a, b, &mut f, &mut g, eps, iters) {
            log_stage(a, b, &mut f, &mut g, eps, iters);
        }
        if eps <= cfg.reg {
            break;
        }
        eps = (eps * ANNEAL_FACTOR).max(cfg.reg);
    }

    // Columns are exact after the last half-step, so total mass is 1 and the
    // off-diagonal mass is what is not kept in place.
    let kept: f64 = (0..n)
        .filter(|&i| a[i] > 0.0 && b[i] > 0.0)
        .map(|i| ((f[i] + g[i]) / eps).exp())
        .sum();
    (1.0 - kept).clamp(0.0, 1.0)
}

fn normalized(m: &Array2<f64>, mask: Option<&Array2<bool>>, which: &str) -> Result<Vec<f64>> {
    let mut v = Vec::with_capacity(m.len());
    for ((idx, &w), keep) in m
        .indexed_iter()
        .zip(mask.map_or_else(|| vec![true; m.len()], |mk| mk.iter().copied().collect()))
    {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::Contract(format!("{which}{idx:?} = {w} is not a nonnegative weight")));
        }
        v.push(if keep { w } else { 0.0 });
    }
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        return Err(Error::Contract(format!(
            "{which} has no positive weight on the compared edges"
        )));
    }
    v.iter_mut().for_each(|x| *x /= total);
    Ok(v)
}

/// Sinkhorn distance between weight matrices `a` and `b`, restricted to edges
/// where `mask` is true (all edges when `None`). Lies in `[0, 1]`.
pub fn sinkhorn_distance(
    a: &Array2<f64>,
    b: &Array2<f64>,
    mask: Option<&Array2<bool>>,
    cfg: &SinkhornConfig,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Contract(format!(
            "weight matrices differ in shape: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    if let Some(mk) = mask {
        if mk.dim() != a.dim() {
            return Err(Error::Contract(format!(
                "mask is {:?}, weights are {:?}",
                mk.dim(),
                a.dim()
            )));
        }
    }
    if !(cfg.reg.is_finite() && cfg.reg > 0.0) {
        return Err(Error::Config(format!("sinkhorn reg must be > 0, got {}", cfg.reg)));
    }
    let pa = normalized(a, mask, "A")?;
    let pb = normalized(b, mask, "B")?;
    if pa == pb {
        return Ok(0.0);
    }
    let aa = transport_cost(&pa, &pa, cfg);
    let bb = transport_cost(&pb, &pb, cfg);
    let ab = transport_cost(&pa, &pb, cfg);
    let ba = transport_cost(&pb, &pa, cfg);
    let cross = 0.5 * (ab + ba);
    Ok((cross - 0.5 * (aa + bb)).clamp(0.0, 1.0))
}
