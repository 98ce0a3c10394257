//! Trainable tensors of the learned incentive, their flat-vector view, and
//! the on-disk format.
//!
//! File layout (little-endian):
//! `b"BGCMPARM"`, `u32` version, `u32` h, P, K, L_e, n_heads, `u64` count,
//! then `count` × `f64`.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{ROBOT_FEATURES, TASK_FEATURES};

pub const PARAMS_MAGIC: &[u8; 8] = b"BGCMPARM";
pub const PARAMS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyper {
    /// Embedding length.
    pub h: usize,
    /// Highest statistical moment.
    pub moments: usize,
    /// Maximum hop count.
    pub hops: usize,
    /// Encoder layers.
    pub layers: usize,
    pub heads: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            h: 128,
            moments: 4,
            hops: 3,
            layers: 1,
            heads: 8,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if self.h == 0 || self.moments == 0 || self.hops == 0 || self.layers == 0 || self.heads == 0
        {
            return Err(Error::Config(format!("hyperparameters must be positive: {self:?}")));
        }
        if self.h % self.heads != 0 {
            return Err(Error::Config(format!(
                "embedding length {} is not divisible by {} heads",
                self.h, self.heads
            )));
        }
        Ok(())
    }

    /// Number of scalars in a parameter vector with these hyperparameters.
    pub fn param_count(&self) -> usize {
        let enc = |f_in: usize| {
            (0..self.layers)
                .map(|l| {
                    let f = if l == 0 { f_in } else { self.h };
                    self.moments * self.hops * f * self.h + f * self.h + self.h
                })
                .sum::<usize>()
        };
        let dec = 6 * self.h * self.h + self.h;
        enc(TASK_FEATURES) + enc(ROBOT_FEATURES) + 2 * dec
    }
}

/// One capsule layer: `tanh([Â^k X^p]_{p,k} · W_caps + X · W_self + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapsLayer {
    pub w_caps: Array2<f64>,
    pub w_self: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub layers: Vec<CapsLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    pub w_query: Array2<f64>,
    pub w_key: Array2<f64>,
    pub w_value: Array2<f64>,
    pub w_out: Array2<f64>,
    pub w_ff: Array2<f64>,
    pub b_ff: Array1<f64>,
    /// Task-side map the head output is multiplied against.
    pub w_final: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub hyper: Hyper,
    pub task_encoder: Encoder,
    pub robot_encoder: Encoder,
    pub mu_decoder: Decoder,
    pub sigma_decoder: Decoder,
}

fn uniform_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let bound = 1.0 / (rows as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

fn uniform_vector(len: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array1::from_shape_simple_fn(len, || rng.random_range(-bound..=bound))
}

impl Encoder {
    fn init(hyper: &Hyper, f_in: usize, rng: &mut ChaCha8Rng) -> Encoder {
        let layers = (0..hyper.layers)
            .map(|l| {
                let f = if l == 0 { f_in } else { hyper.h };
                let caps_in = hyper.moments * hyper.hops * f;
                CapsLayer {
                    w_caps: uniform_matrix(caps_in, hyper.h, rng),
                    w_self: uniform_matrix(f, hyper.h, rng),
                    bias: uniform_vector(hyper.h, caps_in + f, rng),
                }
            })
            .collect();
        Encoder { layers }
    }

    fn zeros(hyper: &Hyper, f_in: usize) -> Encoder {
        let layers = (0..hyper.layers)
            .map(|l| {
                let f = if l == 0 { f_in } else { hyper.h };
                CapsLayer {
                    w_caps: Array2::zeros((hyper.moments * hyper.hops * f, hyper.h)),
                    w_self: Array2::zeros((f, hyper.h)),
                    bias: Array1::zeros(hyper.h),
                }
            })
            .collect();
        Encoder { layers }
    }

    fn for_each_tensor<'a>(&'a self, f: &mut impl FnMut(&'a [f64])) {
        for l in &self.layers {
            f(l.w_caps.as_slice().expect("standard layout"));
            f(l.w_self.as_slice().expect("standard layout"));
            f(l.bias.as_slice().expect("standard layout"));
        }
    }

    fn for_each_tensor_mut(&mut self, f: &mut impl FnMut(&mut [f64])) {
        for l in &mut self.layers {
            f(l.w_caps.as_slice_mut().expect("standard layout"));
            f(l.w_self.as_slice_mut().expect("standard layout"));
            f(l.bias.as_slice_mut().expect("standard layout"));
        }
    }
}

impl Decoder {
    fn init(h: usize, rng: &mut ChaCha8Rng) -> Decoder {
        Decoder {
            w_query: uniform_matrix(h, h, rng),
            w_key: uniform_matrix(h, h, rng),
            w_value: uniform_matrix(h, h, rng),
            w_out: uniform_matrix(h, h, rng),
            w_ff: uniform_matrix(h, h, rng),
            b_ff: uniform_vector(h, h, rng),
            w_final: uniform_matrix(h, h, rng),
        }
    }

    fn zeros(h: usize) -> Decoder {
        let z = || Array2::zeros((h, h));
        Decoder {
            w_query: z(),
            w_key: z(),
            w_value: z(),
            w_out: z(),
            w_ff: z(),
            b_ff: Array1::zeros(h),
            w_final: z(),
        }
    }

    fn for_each_tensor<'a>(&'a self, f: &mut impl FnMut(&'a [f64])) {
        for m in [&self.w_query, &self.w_key, &self.w_value, &self.w_out, &self.w_ff] {
            f(m.as_slice().expect("standard layout"));
        }
        f(self.b_ff.as_slice().expect("standard layout"));
        f(self.w_final.as_slice().expect("standard layout"));
    }

    fn for_each_tensor_mut(&mut self, f: &mut impl FnMut(&mut [f64])) {
        for m in [
            &mut self.w_query,
            &mut self.w_key,
            &mut self.w_value,
            &mut self.w_out,
            &mut self.w_ff,
        ] {
            f(m.as_slice_mut().expect("standard layout"));
        }
        f(self.b_ff.as_slice_mut().expect("standard layout"));
        f(self.w_final.as_slice_mut().expect("standard layout"));
    }
}

impl PolicyParams {
    /// Seeded uniform initialization in `±1/√fan_in`.
    pub fn init(hyper: Hyper, seed: u64) -> Result<PolicyParams> {
        hyper.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(PolicyParams {
            hyper,
            task_encoder: Encoder::init(&hyper, TASK_FEATURES, &mut rng),
            robot_encoder: Encoder::init(&hyper, ROBOT_FEATURES, &mut rng),
            mu_decoder: Decoder::init(hyper.h, &mut rng),
            sigma_decoder: Decoder::init(hyper.h, &mut rng),
        })
    }

    pub fn zeros(hyper: Hyper) -> Result<PolicyParams> {
        hyper.validate()?;
        Ok(PolicyParams {
            hyper,
            task_encoder: Encoder::zeros(&hyper, TASK_FEATURES),
            robot_encoder: Encoder::zeros(&hyper, ROBOT_FEATURES),
            mu_decoder: Decoder::zeros(hyper.h),
            sigma_decoder: Decoder::zeros(hyper.h),
        })
    }

    pub fn len(&self) -> usize {
        self.hyper.param_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut push = |s: &[f64]| out.extend_from_slice(s);
        self.task_encoder.for_each_tensor(&mut push);
        self.robot_encoder.for_each_tensor(&mut push);
        self.mu_decoder.for_each_tensor(&mut push);
        self.sigma_decoder.for_each_tensor(&mut push);
        out
    }

    pub fn unflatten(hyper: Hyper, flat: &[f64]) -> Result<PolicyParams> {
        let mut params = PolicyParams::zeros(hyper)?;
        params.assign(flat)?;
        Ok(params)
    }

    /// Overwrites every tensor from `flat`, in [`flatten`](Self::flatten) order.
    pub fn assign(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::ParamsFormat(format!(
                "expected {} parameters, got {}",
                self.len(),
                flat.len()
            )));
        }
        let mut at = 0;
        let mut take = |s: &mut [f64]| {
            s.copy_from_slice(&flat[at..at + s.len()]);
            at += s.len();
        };
        self.task_encoder.for_each_tensor_mut(&mut take);
        self.robot_encoder.for_each_tensor_mut(&mut take);
        self.mu_decoder.for_each_tensor_mut(&mut take);
        self.sigma_decoder.for_each_tensor_mut(&mut take);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let flat = self.flatten();
        let mut out = Vec::with_capacity(8 + 4 * 6 + 8 + 8 * flat.len());
        out.extend_from_slice(PARAMS_MAGIC);
        out.extend_from_slice(&PARAMS_VERSION.to_le_bytes());
        let h = &self.hyper;
        for v in [h.h, h.moments, h.hops, h.layers, h.heads] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&(flat.len() as u64).to_le_bytes());
        for v in flat {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PolicyParams> {
        let err = |m: &str| Error::ParamsFormat(m.to_string());
        let mut cursor = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cursor.len() < n {
                return Err(err("file is truncated"));
            }
            let (head, rest) = cursor.split_at(n);
            cursor = rest;
            Ok(head)
        };
        if take(8)? != PARAMS_MAGIC {
            return Err(err("bad magic bytes"));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
        let version = u32_at(take(4)?);
        if version != PARAMS_VERSION {
            return Err(Error::ParamsFormat(format!(
                "unsupported version {version}, expected {PARAMS_VERSION}"
            )));
        }
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = u32_at(take(4)?) as usize;
        }
        let hyper = Hyper {
            h: dims[0],
            moments: dims[1],
            hops: dims[2],
            layers: dims[3],
            heads: dims[4],
        };
        hyper.validate()?;
        let count = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
        if count != hyper.param_count() {
            return Err(Error::ParamsFormat(format!(
                "header declares {count} parameters, hyperparameters imply {}",
                hyper.param_count()
            )));
        }
        let body = take(8 * count)?;
        if !cursor.is_empty() {
            return Err(err("trailing bytes after parameter vector"));
        }
        let flat: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        PolicyParams::unflatten(hyper, &flat)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PolicyParams> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads and checks the stored hyperparameters against `expected`.
    pub fn load_expecting(path: impl AsRef<Path>, expected: &Hyper) -> Result<PolicyParams> {
        let params = Self::load(path)?;
        if &params.hyper != expected {
            return Err(Error::ParamsFormat(format!(
                "stored hyperparameters {:?} do not match configured {:?}",
                params.hyper, expected
            )));
        }
        Ok(params)
    }
}
