/// First-order update rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    PlainSgd,
    /// Adam with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    AdaptiveMoment,
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd" | "plain-sgd" => Ok(Self::PlainSgd),
            "adam" | "adaptive-moment" => Ok(Self::AdaptiveMoment),
            other => Err(format!("unknown optimizer '{other}' (expected plain-sgd or adaptive-moment)")),
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Optimizer state for a fixed list of parameter blocks.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, block_sizes: &[usize]) -> Self {
        Self {
            kind,
            learning_rate,
            step: 0,
            first: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Advances the step counter; call once per update, before the blocks.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    pub fn update_block(&mut self, block: usize, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        match self.kind {
            OptimizerKind::PlainSgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= self.learning_rate * g;
                }
            }
            OptimizerKind::AdaptiveMoment => {
                let bc1 = 1.0 - BETA1.powi(self.step);
                let bc2 = 1.0 - BETA2.powi(self.step);
                let m = &mut self.first[block];
                let v = &mut self.second[block];
                for k in 0..params.len() {
                    let g = grads[k];
                    m[k] = BETA1 * m[k] + (1.0 - BETA1) * g;
                    v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g;
                    let m_hat = m[k] / bc1;
                    let v_hat = v[k] / bc2;
                    params[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + EPS);
                }
            }
        }
    }
}
