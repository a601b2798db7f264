//! Small feed-forward neural scorer (3 or 4 inputs, 7 hidden units, 1
//! output) producing a motion-intensity score in [0, 1].
//!
//! Units use the logistic activation and the network is trained by
//! full-batch gradient descent on the mean squared error. Inputs are
//! min-max scaled with ranges learned from the training set and stored in
//! the model, so callers pass raw features.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HIDDEN_UNITS: usize = 7;
pub const DEFAULT_ITERATIONS: usize = 600;
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum RnnError {
    #[error("input count must be 3 or 4, got {0}")]
    BadTopology(usize),
    #[error("expected {expected} inputs, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("input values must be finite")]
    NonFinite,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("label {0} outside [0, 1]")]
    BadLabel(f64),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RnnTopology {
    pub input_count: usize,
    pub hidden_count: usize,
    pub output_count: usize,
}

impl RnnTopology {
    pub fn new(input_count: usize) -> Result<Self, RnnError> {
        if !(3..=4).contains(&input_count) {
            return Err(RnnError::BadTopology(input_count));
        }
        Ok(Self {
            input_count,
            hidden_count: HIDDEN_UNITS,
            output_count: 1,
        })
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnModel {
    pub version: u32,
    pub topology: RnnTopology,
    /// Per hidden unit: one weight per input, then the bias.
    pub hidden: Vec<Vec<f64>>,
    /// One weight per hidden unit, then the bias.
    pub output: Vec<f64>,
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
    pub training_error_history: Vec<f64>,
}

impl RnnModel {
    /// All weights zero and identity scaling: every input scores 0.5.
    pub fn zeroed(topology: RnnTopology) -> Self {
        let n = topology.input_count;
        Self {
            version: FORMAT_VERSION,
            topology,
            hidden: vec![vec![0.0; n + 1]; topology.hidden_count],
            output: vec![0.0; topology.hidden_count + 1],
            input_min: vec![0.0; n],
            input_max: vec![1.0; n],
            training_error_history: Vec::new(),
        }
    }

    fn scale(&self, inputs: &[f64]) -> Result<Vec<f64>, RnnError> {
        if inputs.len() != self.topology.input_count {
            return Err(RnnError::Dimension {
                expected: self.topology.input_count,
                got: inputs.len(),
            });
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(RnnError::NonFinite);
        }
        Ok(inputs
            .iter()
            .zip(self.input_min.iter().zip(&self.input_max))
            .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }

    fn forward(&self, x: &[f64], hidden_out: &mut [f64]) -> f64 {
        for (h, w) in hidden_out.iter_mut().zip(&self.hidden) {
            let n = x.len();
            let z: f64 = w[..n].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[n];
            *h = logistic(z);
        }
        let k = hidden_out.len();
        let z: f64 = self.output[..k]
            .iter()
            .zip(hidden_out.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.output[k];
        logistic(z)
    }

    /// Motion-intensity score of one feature vector.
    pub fn eval(&self, inputs: &[f64]) -> Result<f64, RnnError> {
        let x = self.scale(inputs)?;
        let mut h = vec![0.0; self.topology.hidden_count];
        Ok(self.forward(&x, &mut h))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RnnError> {
        let m: RnnModel = serde_json::from_str(text).map_err(|e| RnnError::Format(e.to_string()))?;
        if m.version != FORMAT_VERSION {
            return Err(RnnError::Format(format!("unsupported version {}", m.version)));
        }
        let n = m.topology.input_count;
        let ok = RnnTopology::new(n).is_ok_and(|t| t == m.topology)
            && m.hidden.len() == m.topology.hidden_count
            && m.hidden.iter().all(|w| w.len() == n + 1)
            && m.output.len() == m.topology.hidden_count + 1
            && m.input_min.len() == n
            && m.input_max.len() == n;
        if !ok {
            return Err(RnnError::Format("weight counts do not match the topology".into()));
        }
        Ok(m)
    }
}

/// Rnn model score for `inputs`.
pub fn rnn_eval(model: &RnnModel, inputs: &[f64]) -> Result<f64, RnnError> {
    model.eval(inputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_iterations: usize,
    pub learning_rate: f64,
    /// Training stops once an iteration improves the MSE by less than this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_ITERATIONS,
            learning_rate: 2.0,
            tolerance: 1e-12,
        }
    }
}

/// Trains with the default learning rate and tolerance.
pub fn rnn_train<R: Rng + ?Sized>(
    topology: RnnTopology,
    dataset: &[(Vec<f64>, f64)],
    max_iterations: usize,
    rng: &mut R,
) -> Result<RnnModel, RnnError> {
    let cfg = TrainConfig {
        max_iterations,
        ..TrainConfig::default()
    };
    rnn_train_with(topology, dataset, &cfg, rng)
}

pub fn rnn_train_with<R: Rng + ?Sized>(
    topology: RnnTopology,
    dataset: &[(Vec<f64>, f64)],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<RnnModel, RnnError> {
    if dataset.is_empty() {
        return Err(RnnError::EmptyDataset);
    }
    let n = topology.input_count;
    for (x, y) in dataset {
        if x.len() != n {
            return Err(RnnError::Dimension {
                expected: n,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RnnError::NonFinite);
        }
        if !(0.0..=1.0).contains(y) {
            return Err(RnnError::BadLabel(*y));
        }
    }

    let mut model = RnnModel::zeroed(topology);
    for d in 0..n {
        let (lo, hi) = dataset
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
                (lo.min(x[d]), hi.max(x[d]))
            });
        model.input_min[d] = lo;
        model.input_max[d] = hi;
    }
    for w in model.hidden.iter_mut().flatten().chain(model.output.iter_mut()) {
        *w = rng.gen_range(-0.5..0.5);
    }

    let scaled: Vec<(Vec<f64>, f64)> = dataset
        .iter()
        .map(|(x, y)| (model.scale(x).expect("validated"), *y))
        .collect();
    let m = scaled.len() as f64;
    let hcount = topology.hidden_count;
    let mut h = vec![0.0; hcount];
    let mut prev = f64::INFINITY;

    for _ in 0..cfg.max_iterations.max(1) {
        let mut g_hidden = vec![vec![0.0; n + 1]; hcount];
        let mut g_out = vec![0.0; hcount + 1];
        let mut sse = 0.0;
        for (x, t) in &scaled {
            let y = model.forward(x, &mut h);
            let err = y - t;
            sse += err * err;
            // d(err²)/dz_out
            let delta_out = 2.0 * err * y * (1.0 - y);
            for j in 0..hcount {
                g_out[j] += delta_out * h[j];
                let delta_h = delta_out * model.output[j] * h[j] * (1.0 - h[j]);
                for (g, xi) in g_hidden[j][..n].iter_mut().zip(x) {
                    *g += delta_h * xi;
                }
                g_hidden[j][n] += delta_h;
            }
            g_out[hcount] += delta_out;
        }
        let mse = sse / m;
        model.training_error_history.push(mse);
        let step = cfg.learning_rate / m;
        for (w, g) in model.hidden.iter_mut().flatten().zip(g_hidden.iter().flatten()) {
            *w -= step * g;
        }
        for (w, g) in model.output.iter_mut().zip(&g_out) {
            *w -= step * g;
        }
        if (prev - mse).abs() < cfg.tolerance {
            break;
        }
        prev = mse;
    }
    Ok(model)
}

/// Separable three-class set: scores 0, 0.5 and 1 for low, medium and high
/// motion, features (frame type code, frame size, vector count / distance).
pub fn toy_dataset<R: Rng + ?Sized>(per_class: usize, rng: &mut R) -> Vec<(Vec<f64>, f64)> {
    let classes = [(7_000.0, 0.5, 0.0), (11_000.0, 0.08, 0.5), (16_000.0, 0.03, 1.0)];
    let mut out = Vec::with_capacity(3 * per_class);
    for i in 0..per_class {
        for &(size, ratio, label) in &classes {
            let ft = if i % 3 == 0 { 2.0 } else { 1.0 };
            let s: f64 = size * rng.gen_range(0.85..1.15);
            let r: f64 = ratio * rng.gen_range(0.8..1.2);
            out.push((vec![ft, s, r], label));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{score_to_class, IntensityClass};

    fn label_class(y: f64) -> IntensityClass {
        score_to_class(y, (1.0 / 3.0, 2.0 / 3.0))
    }

    #[test]
    fn topology_constraints() {
        assert!(RnnTopology::new(3).is_ok());
        assert!(RnnTopology::new(4).is_ok());
        assert_eq!(RnnTopology::new(5), Err(RnnError::BadTopology(5)));
        assert_eq!(RnnTopology::new(3).unwrap().hidden_count, 7);
    }

    #[test]
    fn zero_weights_score_half() {
        let m = RnnModel::zeroed(RnnTopology::new(3).unwrap());
        assert_eq!(m.eval(&[1.0, -20.0, 3e6]).unwrap(), 0.5);
        assert_eq!(m.eval(&[1.0, 2.0]), Err(RnnError::Dimension { expected: 3, got: 2 }));
        assert_eq!(m.eval(&[1.0, 2.0, f64::NAN]), Err(RnnError::NonFinite));
    }

    #[test]
    fn learns_toy_set() {
        let mut rng = crate::rng::seeded(42);
        let data = toy_dataset(40, &mut rng);
        let model = rnn_train(RnnTopology::new(3).unwrap(), &data, DEFAULT_ITERATIONS, &mut rng).unwrap();
        let correct = data
            .iter()
            .filter(|(x, y)| label_class(model.eval(x).unwrap()) == label_class(*y))
            .count();
        let acc = correct as f64 / data.len() as f64;
        assert!(acc >= 0.95, "accuracy {acc}");
        assert!(model.training_error_history.len() <= DEFAULT_ITERATIONS);
    }

    #[test]
    fn smoothed_error_non_increasing() {
        let mut rng = crate::rng::seeded(7);
        let data = toy_dataset(30, &mut rng);
        let model = rnn_train(RnnTopology::new(3).unwrap(), &data, DEFAULT_ITERATIONS, &mut rng).unwrap();
        let h = &model.training_error_history;
        let smooth: Vec<f64> = h.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
        for w in smooth.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn single_point_fit() {
        let mut rng = crate::rng::seeded(1);
        let model = rnn_train(
            RnnTopology::new(4).unwrap(),
            &[(vec![1.0, 2.0, 3.0, 4.0], 0.8)],
            DEFAULT_ITERATIONS,
            &mut rng,
        )
        .unwrap();
        assert!(*model.training_error_history.last().unwrap() < 1e-4);
    }

    #[test]
    fn training_is_seeded() {
        let data = toy_dataset(10, &mut crate::rng::seeded(3));
        let a = rnn_train(RnnTopology::new(3).unwrap(), &data, 100, &mut crate::rng::seeded(9)).unwrap();
        let b = rnn_train(RnnTopology::new(3).unwrap(), &data, 100, &mut crate::rng::seeded(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.eval(&data[0].0).unwrap(), a.eval(&data[0].0).unwrap());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let data = toy_dataset(10, &mut crate::rng::seeded(4));
        let m = rnn_train(RnnTopology::new(3).unwrap(), &data, 50, &mut crate::rng::seeded(4)).unwrap();
        let back = RnnModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(RnnModel::from_json("{}").is_err());
    }

    #[test]
    fn training_input_errors() {
        let mut rng = crate::rng::seeded(0);
        let t = RnnTopology::new(3).unwrap();
        assert_eq!(rnn_train(t, &[], 10, &mut rng), Err(RnnError::EmptyDataset));
        assert_eq!(
            rnn_train(t, &[(vec![0.0; 3], 1.5)], 10, &mut rng),
            Err(RnnError::BadLabel(1.5))
        );
    }
}
