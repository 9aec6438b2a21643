//! Flat-vector adaptive-moment optimizer and the cosine weight schedule used
//! by the fitting stages.

/// Adam with the standard defaults (beta1 0.9, beta2 0.999, eps 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(dim: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// One update in place; `lr_scale` multiplies the base learning rate
    /// (used for schedules).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr_scale: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        let lr = self.learning_rate * lr_scale;
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Cosine interpolation from `start` (t = 0) to `end` (t = steps):
/// w(t) = end + (start - end) * (1 + cos(pi t / steps)) / 2.
pub fn cosine_decay(start: f64, end: f64, t: usize, steps: usize) -> f64 {
    if steps == 0 {
        return end;
    }
    let x = (t as f64 / steps as f64).clamp(0.0, 1.0);
    end + (start - end) * (1.0 + (std::f64::consts::PI * x).cos()) / 2.0
}
