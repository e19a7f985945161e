//! Adam optimizer with bias-corrected moments.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::nn::Tensor;

/// Optimizer state: one pair of moment buffers per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    step: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl AdamState {
    /// Defaults follow the standard recommendation: beta1 0.9, beta2 0.999,
    /// eps 1e-8.
    pub fn new(lr: f32, params: &[Tensor]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update in place, consuming the gradients stored in each tensor's
/// grad buffer. The step count increments before the update so the very
/// first bias correction divides by `1 - beta^1`.
pub fn adam_step(params: &mut [Tensor], state: &mut AdamState) {
    assert_eq!(params.len(), state.m.len(), "optimizer/param mismatch");
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - math::powi(state.beta1 as f64, t);
    let bc2 = 1.0 - math::powi(state.beta2 as f64, t);
    let (b1, b2) = (state.beta1, state.beta2);
    for (idx, p) in params.iter_mut().enumerate() {
        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        let n = p.numel();
        for i in 0..n {
            let g = p.grad()[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let mhat = (m[i] as f64 / bc1) as f32;
            let vhat = (v[i] as f64 / bc2) as f32;
            p.values_mut()[i] -= state.lr * mhat / (math::sqrt_f32(vhat) + state.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = vec![Tensor::from_values(&[3], vec![1.0, -2.0, 0.5]).unwrap()];
        let mut state = AdamState::new(0.01, &params);
        let before = params[0].values().to_vec();
        for _ in 0..5 {
            adam_step(&mut params, &mut state);
        }
        assert_eq!(params[0].values(), &before[..]);
    }

    #[test]
    fn first_step_moves_by_almost_lr_toward_minus_gradient() {
        // With bias correction, step 1 gives |dw| = lr * |g| / (|g| + eps).
        for &g in &[0.5f32, -3.0, 1e-3] {
            let mut params = vec![Tensor::from_values(&[1], vec![0.0]).unwrap()];
            params[0].grad_mut()[0] = g;
            let mut state = AdamState::new(0.05, &params);
            adam_step(&mut params, &mut state);
            let dw = -params[0].values()[0];
            assert!(dw * g > 0.0, "moves against the gradient");
            let mag = dw.abs();
            assert!(mag <= 0.05 && mag >= 0.999 * 0.05, "|dw| = {mag}");
        }
    }

    #[test]
    fn converges_on_a_scalar_quadratic() {
        // f(w) = (w - 3)^2 from w = 0 with lr 0.1.
        let mut params = vec![Tensor::from_values(&[1], vec![0.0]).unwrap()];
        let mut state = AdamState::new(0.1, &params);
        for _ in 0..200 {
            let w = params[0].values()[0];
            params[0].zero_grad();
            params[0].grad_mut()[0] = 2.0 * (w - 3.0);
            adam_step(&mut params, &mut state);
        }
        let w = params[0].values()[0];
        assert!((w - 3.0).abs() < 0.05, "w = {w}");
    }
}
