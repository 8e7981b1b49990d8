use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| (0.0..1.0).contains(&b);
        if !(self.lr > 0.0 && self.lr.is_finite())
            || !unit(self.beta1)
            || !unit(self.beta2)
            || !(self.epsilon > 0.0 && self.epsilon.is_finite())
        {
            return Err(Error::Config(format!("invalid ADAM settings {self:?}")));
        }
        Ok(())
    }
}

/// Moment accumulators for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    config: AdamConfig,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            config,
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Bias-corrected ADAM update applied in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer holds {} moments but got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - beta1.powf(t);
        let c2 = 1.0 - beta2.powf(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

/// Value-returning form of [`AdamState::step`].
pub fn adam_step(
    params: &[f64],
    grads: &[f64],
    state: &AdamState,
) -> Result<(Vec<f64>, AdamState)> {
    let mut params = params.to_vec();
    let mut state = state.clone();
    state.step(&mut params, grads)?;
    Ok((params, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut state = AdamState::new(3, AdamConfig::default());
        let mut p = vec![0.5, -1.0, 2.0];
        for _ in 0..100 {
            state.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, vec![0.5, -1.0, 2.0]);
        assert_eq!(state.t(), 100);
    }

    #[test]
    fn first_step_hand_evaluated() {
        let state = AdamState::new(1, AdamConfig::default());
        let (p, state) = adam_step(&[0.0], &[0.5], &state).unwrap();
        // Bias corrections cancel: m_hat = 0.5, sqrt(v_hat) = 0.5.
        let expected = -0.001 * 0.5 / (0.5 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-18);
        assert!((p[0] - -0.000_999_999_98).abs() < 1e-15);
        assert_eq!(state.t(), 1);
    }

    #[test]
    fn step_magnitude_bounded_by_lr() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(1, cfg);
        let mut p = vec![0.0];
        let mut prev = 0.0;
        for _ in 0..2 {
            state.step(&mut p, &[3.7]).unwrap();
            assert!((p[0] - prev).abs() <= cfg.lr * (1.0 + 1e-6));
            prev = p[0];
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut state = AdamState::new(2, AdamConfig::default());
        let mut p = vec![0.0; 2];
        assert!(matches!(state.step(&mut p, &[1.0]), Err(Error::Shape(_))));
        assert_eq!(state.t(), 0);
    }

    #[test]
    fn second_moment_nonnegative() {
        let mut state = AdamState::new(4, AdamConfig::default());
        let mut p = vec![0.0; 4];
        for k in 0..50 {
            let g: Vec<f64> = (0..4).map(|i| ((k * 4 + i) as f64).sin() * 10.0).collect();
            state.step(&mut p, &g).unwrap();
            assert!(state.second_moment().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig::default().validate().is_ok());
        let bad = AdamConfig {
            beta2: 1.0,
            ..AdamConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AdamConfig {
            lr: 0.0,
            ..AdamConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
