use super::tensor::Tensor;

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

pub const DEFAULT_LEARNING_RATE: f64 = 0.00025;

impl Default for AdamState {
    fn default() -> Self {
        Self::new(DEFAULT_LEARNING_RATE)
    }
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first: Vec::new(),
            second: Vec::new(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update using each tensor's `grad`.
    ///
    /// Moment buffers are created on the first call; later calls must pass
    /// tensors of the same shapes in the same order.
    pub fn step(&mut self, params: &mut [&mut Tensor]) {
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second = self.first.clone();
        }
        assert_eq!(self.first.len(), params.len(), "adam: parameter count changed");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            assert_eq!(m.len(), p.len(), "adam: parameter shape changed");
            for i in 0..p.values.len() {
                let g = p.grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p.values[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Tensor::new(vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        p.grad = vec![1.0; 3];
        let mut adam = AdamState::default();
        adam.step(&mut [&mut p]);
        for (after, before) in p.values.iter().zip([0.5, -1.0, 2.0]) {
            assert!((after - (before - DEFAULT_LEARNING_RATE)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Tensor::new(vec![2], vec![0.3, 0.7]).unwrap();
        let mut adam = AdamState::new(0.1);
        adam.step(&mut [&mut p]);
        adam.step(&mut [&mut p]);
        assert_eq!(p.values, vec![0.3, 0.7]);
        assert_eq!(adam.step_count(), 2);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
            let mut adam = AdamState::default();
            for k in 0..10 {
                p.grad = vec![(k as f64).sin(), (k as f64).cos()];
                adam.step(&mut [&mut p]);
            }
            p.values
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = Tensor::new(vec![1], vec![3.0]).unwrap();
        let mut adam = AdamState::new(0.05);
        for _ in 0..2000 {
            p.grad = vec![2.0 * p.values[0]];
            adam.step(&mut [&mut p]);
        }
        assert!(p.values[0].abs() < 1e-2);
    }
}
