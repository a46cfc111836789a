use serde::{Deserialize, Serialize};

use super::{ClassifierError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// First/second moment estimates for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamWState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One AdamW update with decoupled weight decay:
///
/// ```text
/// m = b1*m + (1-b1)*g        v = b2*v + (1-b2)*g^2
/// p = p*(1 - lr*wd) - lr * m_hat / (sqrt(v_hat) + eps)
/// ```
pub fn adamw_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamWState,
    config: &AdamWConfig,
    block: &str,
) -> Result<()> {
    for (expected, actual) in [
        (params.len(), grads.len()),
        (params.len(), state.m.len()),
        (params.len(), state.v.len()),
    ] {
        if expected != actual {
            return Err(ClassifierError::Shape {
                block: block.to_string(),
                expected,
                actual,
            });
        }
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(ClassifierError::NonFiniteGradient {
            block: block.to_string(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let AdamWConfig {
        learning_rate: lr,
        beta1: b1,
        beta2: b2,
        epsilon: eps,
        weight_decay: wd,
    } = *config;
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    let shrink = 1.0 - lr * wd;
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p = *p * shrink - lr * (m_hat / (v_hat.sqrt() + eps));
    }
    Ok(())
}
