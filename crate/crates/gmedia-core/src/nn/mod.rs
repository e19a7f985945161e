//! Minimal deterministic tensor/autodiff engine.
//!
//! Just enough machinery for the three fixed architectures in [`crate::models`]:
//! same-padded 3x3 and 1x1 convolutions, ReLU, 4x4 average pooling, a dense
//! layer, channel concatenation, elementwise addition, a spatial-summation
//! channel, stop-gradient, L2 loss and Adam. Graphs are static: built once,
//! then executed forward/backward against reusable [`graph::Workspace`]
//! buffers. Everything is single-threaded and bit-deterministic for a given
//! seed; forward passes over frozen weights are reentrant, so many planner
//! threads may evaluate concurrently.

mod adam;
pub(crate) mod ops;
pub mod graph;

pub use adam::{adam_step, AdamState};
pub use graph::{Graph, GraphBuilder, NodeId, Op, ParamId, Workspace};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngExt;

use crate::error::{Error, Result};
use crate::math;

/// Dense n-dimensional `f32` array with a gradient buffer of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f32>,
    grad: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            values: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn from_values(shape: &[usize], values: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if values.len() != n {
            return Err(Error::Dimension(format!(
                "shape {shape:?} wants {n} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            grad: vec![0.0; n],
            values,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn grad(&self) -> &[f32] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [f32] {
        &mut self.grad
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite()) && self.grad.iter().all(|v| v.is_finite())
    }
}

/// Fan-in-scaled uniform initialization: values in
/// `[-sqrt(6/fan_in), +sqrt(6/fan_in)]`. Stable through deep ReLU stacks.
pub fn init_weights<R: rand::Rng>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let bound = math::sqrt_f32(6.0 / fan_in as f32);
    let n: usize = shape.iter().product();
    let values = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::from_values(shape, values).expect("consistent shape")
}

/// Mean squared error over all elements, accumulated in f64.
pub fn l2_loss(pred: &[f32], target: &[f32]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::Dimension(format!(
            "l2_loss length mismatch: {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    let mut s = 0.0f64;
    for (p, t) in pred.iter().zip(target) {
        let d = (p - t) as f64;
        s += d * d;
    }
    Ok(s / pred.len() as f64)
}

/// Accumulate the L2-loss gradient `scale * 2 (pred - target) / n` into
/// `grad`. `scale` folds in any batch averaging.
pub fn l2_loss_backward(pred: &[f32], target: &[f32], scale: f32, grad: &mut [f32]) {
    let inv_n = scale * 2.0 / pred.len() as f32;
    for ((g, p), t) in grad.iter_mut().zip(pred).zip(target) {
        *g += inv_n * (p - t);
    }
}
