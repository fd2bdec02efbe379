//! Deterministic FedAvg over partitioned tabular data.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::dist::{JointDist, VariableSchema, S, Y, YHAT, Z};
use crate::error::{Error, Result};

const HIDDEN: usize = 32;

/// One client's rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientDataset {
    pub id: usize,
    pub features: Vec<f64>,
    pub dim: usize,
    pub z: Vec<u8>,
    pub y: Vec<u8>,
}

impl ClientDataset {
    pub fn new(id: usize, features: Vec<f64>, dim: usize, z: Vec<u8>, y: Vec<u8>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::EmptySample);
        }
        if z.len() != y.len() || features.len() != z.len() * dim {
            return Err(Error::ShapeMismatch {
                expected: z.len() * dim,
                got: features.len(),
            });
        }
        if z.iter().chain(&y).any(|&v| v > 1) {
            return Err(Error::InvalidArgument("z and y must be binary".into()));
        }
        Ok(Self { id, features, dim, z, y })
    }

    pub fn from_rows(id: usize, ds: &TabularDataset) -> Result<Self> {
        Self::new(id, ds.features.clone(), ds.dim, ds.z.clone(), ds.y.clone())
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "logistic")]
    Logistic,
    /// Two hidden ReLU layers of 32 units.
    #[serde(rename = "mlp-2x32-relu")]
    Mlp,
}

impl Architecture {
    pub fn num_params(self, dim: usize) -> usize {
        match self {
            Self::Logistic => dim + 1,
            Self::Mlp => dim * HIDDEN + HIDDEN + HIDDEN * HIDDEN + HIDDEN + HIDDEN + 1,
        }
    }

    fn fan_ins(self, dim: usize) -> Vec<(usize, usize)> {
        // (parameter count, fan-in) per block
        match self {
            Self::Logistic => vec![(dim + 1, dim)],
            Self::Mlp => vec![
                (dim * HIDDEN + HIDDEN, dim),
                (HIDDEN * HIDDEN + HIDDEN, HIDDEN),
                (HIDDEN + 1, HIDDEN),
            ],
        }
    }
}

/// Weights plus the feature standardization they were trained under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub architecture: Architecture,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ModelParams {
    /// Uniform in `+-1/sqrt(fan_in)` per layer.
    pub fn init(architecture: Architecture, mean: Vec<f64>, scale: Vec<f64>, seed: u64) -> Result<Self> {
        let dim = mean.len();
        if scale.len() != dim {
            return Err(Error::FeatureDimension { expected: dim, got: scale.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(architecture.num_params(dim));
        for (count, fan_in) in architecture.fan_ins(dim) {
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            weights.extend((0..count).map(|_| rng.random_range(-bound..=bound)));
        }
        Ok(Self { architecture, dim, weights, mean, scale })
    }

    /// All-zero weights with identity standardization.
    pub fn zeros(architecture: Architecture, dim: usize) -> Self {
        Self {
            architecture,
            dim,
            weights: vec![0.0; architecture.num_params(dim)],
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    fn standardize(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..self.dim {
            out[j] = (x[j] - self.mean[j]) / self.scale[j];
        }
    }

    /// Pre-sigmoid output on standardized input; fills activations for backprop.
    fn logit(&self, x: &[f64], h1: &mut [f64], h2: &mut [f64]) -> f64 {
        let w = &self.weights;
        let d = self.dim;
        match self.architecture {
            Architecture::Logistic => w[d] + dot(&w[..d], x),
            Architecture::Mlp => {
                let (w1, rest) = w.split_at(d * HIDDEN);
                let (b1, rest) = rest.split_at(HIDDEN);
                let (w2, rest) = rest.split_at(HIDDEN * HIDDEN);
                let (b2, rest) = rest.split_at(HIDDEN);
                let (w3, b3) = rest.split_at(HIDDEN);
                for i in 0..HIDDEN {
                    h1[i] = (b1[i] + dot(&w1[i * d..(i + 1) * d], x)).max(0.0);
                }
                for i in 0..HIDDEN {
                    h2[i] = (b2[i] + dot(&w2[i * HIDDEN..(i + 1) * HIDDEN], h1)).max(0.0);
                }
                b3[0] + dot(w3, h2)
            }
        }
    }

    /// Adds `delta * d logit / d weights` at standardized input `x` to `grad`.
    fn backprop(&self, x: &[f64], h1: &[f64], h2: &[f64], delta: f64, grad: &mut [f64]) {
        let d = self.dim;
        match self.architecture {
            Architecture::Logistic => {
                for j in 0..d {
                    grad[j] += delta * x[j];
                }
                grad[d] += delta;
            }
            Architecture::Mlp => {
                let o_b1 = d * HIDDEN;
                let o_w2 = o_b1 + HIDDEN;
                let o_b2 = o_w2 + HIDDEN * HIDDEN;
                let o_w3 = o_b2 + HIDDEN;
                let o_b3 = o_w3 + HIDDEN;
                let w = &self.weights;
                let mut d2 = [0.0; HIDDEN];
                for i in 0..HIDDEN {
                    grad[o_w3 + i] += delta * h2[i];
                    if h2[i] > 0.0 {
                        d2[i] = delta * w[o_w3 + i];
                    }
                }
                grad[o_b3] += delta;
                let mut d1 = [0.0; HIDDEN];
                for i in 0..HIDDEN {
                    if d2[i] == 0.0 {
                        continue;
                    }
                    let row = o_w2 + i * HIDDEN;
                    for j in 0..HIDDEN {
                        grad[row + j] += d2[i] * h1[j];
                        d1[j] += d2[i] * w[row + j];
                    }
                    grad[o_b2 + i] += d2[i];
                }
                for i in 0..HIDDEN {
                    if h1[i] <= 0.0 || d1[i] == 0.0 {
                        continue;
                    }
                    let row = i * d;
                    for j in 0..d {
                        grad[row + j] += d1[i] * x[j];
                    }
                    grad[o_b1 + i] += d1[i];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `P(Yhat = 1 | x)` for a raw (unstandardized) feature row.
pub fn predict(params: &ModelParams, features: &[f64]) -> Result<f64> {
    if features.len() != params.dim {
        return Err(Error::FeatureDimension {
            expected: params.dim,
            got: features.len(),
        });
    }
    let mut x = vec![0.0; params.dim];
    params.standardize(features, &mut x);
    let (mut h1, mut h2) = ([0.0; HIDDEN], [0.0; HIDDEN]);
    Ok(sigmoid(params.logit(&x, &mut h1, &mut h2)))
}

/// Ties go to 1.
pub fn threshold(p: f64, cut: f64) -> u8 {
    u8::from(p >= cut)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientWeights {
    Uniform,
    ByCount,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub architecture: Architecture,
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Weight of the statistical-parity penalty.
    pub fairness_beta: f64,
    pub client_weights: ClientWeights,
    /// Stop once accuracy moves less than `early_stop_tol` for this many rounds; 0 disables.
    pub early_stop_patience: usize,
    pub early_stop_tol: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Mlp,
            rounds: 30,
            local_epochs: 2,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            fairness_beta: 0.0,
            client_weights: ClientWeights::ByCount,
            early_stop_patience: 5,
            early_stop_tol: 1e-4,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size as f64),
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidArgument("Adam decays must be in [0, 1)".into()));
        }
        if !(self.fairness_beta >= 0.0) {
            return Err(Error::InvalidArgument("fairness_beta must be >= 0".into()));
        }
        Ok(())
    }
}

/// Local minibatch Adam on binary cross-entropy plus the parity penalty.
pub fn local_train(params: &ModelParams, ds: &ClientDataset, cfg: &TrainingConfig) -> Result<ModelParams> {
    local_train_round(params, ds, cfg, 0)
}

fn local_train_round(params: &ModelParams, ds: &ClientDataset, cfg: &TrainingConfig, round: usize) -> Result<ModelParams> {
    if ds.dim != params.dim {
        return Err(Error::FeatureDimension {
            expected: params.dim,
            got: ds.dim,
        });
    }
    let mut out = params.clone();
    if cfg.local_epochs == 0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((round as u64) << 32) | ds.id as u64);
    let n = ds.len();
    let p = out.weights.len();
    let (mut m, mut v) = (vec![0.0; p], vec![0.0; p]);
    let mut grad = vec![0.0; p];
    let mut t = 0i32;
    let bs = cfg.batch_size;
    let mut xs = vec![0.0; bs * ds.dim];
    let mut acts = vec![[0.0; 2 * HIDDEN]; bs];
    let mut probs = vec![0.0; bs];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.local_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(bs) {
            let b = batch.len();
            for (k, &i) in batch.iter().enumerate() {
                let x = &mut xs[k * ds.dim..(k + 1) * ds.dim];
                out.standardize(ds.row(i), x);
                let (h1, h2) = acts[k].split_at_mut(HIDDEN);
                probs[k] = sigmoid(out.logit(x, h1, h2));
            }
            let mut deltas: Vec<f64> = batch
                .iter()
                .enumerate()
                .map(|(k, &i)| (probs[k] - f64::from(ds.y[i])) / b as f64)
                .collect();
            if cfg.fairness_beta > 0.0 {
                let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
                for (k, &i) in batch.iter().enumerate() {
                    if ds.z[i] == 1 {
                        s1 += probs[k];
                        n1 += 1;
                    } else {
                        s0 += probs[k];
                        n0 += 1;
                    }
                }
                if n1 > 0 && n0 > 0 {
                    let gap = s1 / n1 as f64 - s0 / n0 as f64;
                    let sign = if gap > 0.0 { 1.0 } else if gap < 0.0 { -1.0 } else { 0.0 };
                    for (k, &i) in batch.iter().enumerate() {
                        let share = if ds.z[i] == 1 { 1.0 / n1 as f64 } else { -1.0 / n0 as f64 };
                        deltas[k] += cfg.fairness_beta * sign * share * probs[k] * (1.0 - probs[k]);
                    }
                }
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            for k in 0..b {
                let (h1, h2) = acts[k].split_at(HIDDEN);
                out.backprop(&xs[k * ds.dim..(k + 1) * ds.dim], h1, h2, deltas[k], &mut grad);
            }
            t += 1;
            let c1 = 1.0 - cfg.beta1.powi(t);
            let c2 = 1.0 - cfg.beta2.powi(t);
            for j in 0..p {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
                out.weights[j] -= cfg.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + cfg.adam_eps);
            }
        }
    }
    Ok(out)
}

/// Weighted average of the locally trained parameter vectors.
pub fn fedavg_round(global: &ModelParams, clients: &[ClientDataset], cfg: &TrainingConfig) -> Result<ModelParams> {
    fedavg_round_at(global, clients, cfg, 0)
}

fn fedavg_round_at(global: &ModelParams, clients: &[ClientDataset], cfg: &TrainingConfig, round: usize) -> Result<ModelParams> {
    if clients.is_empty() {
        return Err(Error::EmptySample);
    }
    let locals: Vec<ModelParams> = clients
        .par_iter()
        .map(|c| local_train_round(global, c, cfg, round))
        .collect::<Result<_>>()?;
    let total: usize = clients.iter().map(ClientDataset::len).sum();
    let weights: Vec<f64> = match cfg.client_weights {
        ClientWeights::Uniform => vec![1.0 / clients.len() as f64; clients.len()],
        ClientWeights::ByCount => clients.iter().map(|c| c.len() as f64 / total as f64).collect(),
    };
    Ok(average(&locals, &weights))
}

/// `sum_k weights[k] * params[k]`, accumulated in order.
pub fn average(params: &[ModelParams], weights: &[f64]) -> ModelParams {
    let mut out = params[0].clone();
    out.weights.iter_mut().for_each(|w| *w = 0.0);
    for (p, &a) in params.iter().zip(weights) {
        for (o, w) in out.weights.iter_mut().zip(&p.weights) {
            *o += a * w;
        }
    }
    out
}

/// Per-feature mean and standard deviation over all rows (scale 1 for constants).
pub fn standardization(clients: &[ClientDataset]) -> Result<(Vec<f64>, Vec<f64>)> {
    let dim = clients.first().ok_or(Error::EmptySample)?.dim;
    let mut mean = vec![0.0; dim];
    let mut n = 0usize;
    for c in clients {
        if c.dim != dim {
            return Err(Error::FeatureDimension { expected: dim, got: c.dim });
        }
        for i in 0..c.len() {
            for (m, x) in mean.iter_mut().zip(c.row(i)) {
                *m += x;
            }
        }
        n += c.len();
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; dim];
    for c in clients {
        for i in 0..c.len() {
            for ((v, x), m) in var.iter_mut().zip(c.row(i)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let sd = (v / n as f64).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok((mean, scale))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Mean cross-entropy in nats.
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FederationRun {
    pub params: ModelParams,
    pub history: Vec<RoundRecord>,
    /// Empirical joint over `(Z, S, Y, Yhat)` on the training union.
    pub joint: JointDist,
    pub accuracy: f64,
    /// `(z, s, y, yhat)` per training row, clients in id order.
    pub predictions: Vec<[usize; 4]>,
}

impl FederationRun {
    pub fn write_predictions_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["Z", "S", "Y", "Yhat"])?;
        for row in &self.predictions {
            w.write_record(row.iter().map(usize::to_string))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn scores(params: &ModelParams, clients: &[ClientDataset]) -> (f64, f64, Vec<[usize; 4]>) {
    let mut rows = Vec::new();
    let (mut loss, mut hits) = (0.0, 0usize);
    let mut x = vec![0.0; params.dim];
    let (mut h1, mut h2) = ([0.0; HIDDEN], [0.0; HIDDEN]);
    for c in clients {
        for i in 0..c.len() {
            params.standardize(c.row(i), &mut x);
            let t = params.logit(&x, &mut h1, &mut h2);
            let p = sigmoid(t);
            let y = c.y[i] as usize;
            // stable cross-entropy from the logit
            loss += t.max(0.0) - t * y as f64 + (-t.abs()).exp().ln_1p();
            let yhat = threshold(p, 0.5) as usize;
            hits += usize::from(yhat == y);
            rows.push([c.z[i] as usize, c.id, y, yhat]);
        }
    }
    let n = rows.len().max(1) as f64;
    (loss / n, hits as f64 / n, rows)
}

/// Accuracy of thresholded predictions over every client's rows.
pub fn evaluate(params: &ModelParams, clients: &[ClientDataset]) -> f64 {
    scores(params, clients).1
}

/// Empirical `(Z, S, Y, Yhat)` joint from prediction rows, `k` clients.
pub fn joint_from_predictions(rows: &[[usize; 4]], k: usize) -> Result<JointDist> {
    let schema = VariableSchema::new([(Z, 2), (S, k), (Y, 2), (YHAT, 2)])?;
    let mut counts = vec![0u64; schema.num_states()];
    for r in rows {
        counts[schema.index(r)] += 1;
    }
    JointDist::from_counts(schema, &counts, 0.0)
}

/// Full FedAvg run from a seeded initialization.
pub fn train(clients: &[ClientDataset], cfg: &TrainingConfig) -> Result<FederationRun> {
    cfg.validate()?;
    let mut ids: Vec<usize> = clients.iter().map(|c| c.id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != clients.len() {
        return Err(Error::InvalidArgument("client ids must be distinct".into()));
    }
    let mut ordered = clients.to_vec();
    ordered.sort_by_key(|c| c.id);
    let (mean, scale) = standardization(&ordered)?;
    let mut params = ModelParams::init(cfg.architecture, mean, scale, cfg.seed)?;
    let mut history = Vec::with_capacity(cfg.rounds);
    let mut quiet = 0;
    for round in 0..cfg.rounds {
        params = fedavg_round_at(&params, &ordered, cfg, round)?;
        let (loss, accuracy, _) = scores(&params, &ordered);
        if let Some(prev) = history.last().map(|r: &RoundRecord| r.accuracy) {
            quiet = if (accuracy - prev).abs() < cfg.early_stop_tol { quiet + 1 } else { 0 };
        }
        history.push(RoundRecord { round, loss, accuracy });
        if cfg.early_stop_patience > 0 && quiet >= cfg.early_stop_patience {
            break;
        }
    }
    let (_, accuracy, predictions) = scores(&params, &ordered);
    let k = ids.last().map_or(1, |m| m + 1);
    // predictions never alter the covariates
    let mut seen = vec![0u64; 2 * k * 2];
    for r in &predictions {
        seen[(r[0] * k + r[1]) * 2 + r[2]] += 1;
    }
    let mut expected = vec![0u64; 2 * k * 2];
    for c in &ordered {
        for i in 0..c.len() {
            expected[(c.z[i] as usize * k + c.id) * 2 + c.y[i] as usize] += 1;
        }
    }
    if seen != expected {
        return Err(Error::InvalidDistribution("prediction joint lost the data marginal".into()));
    }
    let joint = joint_from_predictions(&predictions, k)?;
    Ok(FederationRun {
        params,
        history,
        joint,
        accuracy,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(seed: u64, n: usize) -> ClientDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut f, mut z, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..n {
            let label = (i % 2) as u8;
            let c = if label == 1 { 3.0 } else { -3.0 };
            f.push(c + rng.random_range(-1.0..1.0));
            f.push(rng.random_range(-1.0..1.0));
            z.push(u8::from(rng.random::<bool>()));
            y.push(label);
        }
        ClientDataset::new(0, f, 2, z, y).unwrap()
    }

    #[test]
    fn zero_epochs_is_identity() {
        let ds = toy(1, 50);
        let cfg = TrainingConfig { local_epochs: 0, ..Default::default() };
        let p = ModelParams::init(Architecture::Mlp, vec![0.0; 2], vec![1.0; 2], 3).unwrap();
        assert_eq!(local_train(&p, &ds, &cfg).unwrap(), p);
    }

    #[test]
    fn separable_data_is_learned() {
        let ds = toy(2, 400);
        let cfg = TrainingConfig {
            architecture: Architecture::Logistic,
            local_epochs: 50,
            learning_rate: 1e-2,
            ..Default::default()
        };
        let p = ModelParams::init(Architecture::Logistic, vec![0.0; 2], vec![1.0; 2], 3).unwrap();
        let trained = local_train(&p, &ds, &cfg).unwrap();
        assert!(evaluate(&trained, std::slice::from_ref(&ds)) >= 0.99);
    }

    #[test]
    fn prediction_rules() {
        let p = ModelParams::zeros(Architecture::Mlp, 3);
        assert_eq!(predict(&p, &[1.0, 2.0, 3.0]).unwrap(), 0.5);
        assert_eq!(threshold(0.5, 0.5), 1);
        assert!(predict(&p, &[1.0]).is_err());
        let mut l = ModelParams::zeros(Architecture::Logistic, 2);
        l.weights = vec![0.5, -1.0, 0.25];
        let expected = 1.0 / (1.0 + (-(0.5 * 2.0 - 1.0 * 1.0 + 0.25f64)).exp());
        assert!((predict(&l, &[2.0, 1.0]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn mlp_gradient_matches_finite_differences() {
        let p = ModelParams::init(Architecture::Mlp, vec![0.0; 3], vec![1.0; 3], 9).unwrap();
        let x = [0.3, -1.2, 0.8];
        let (mut h1, mut h2) = ([0.0; HIDDEN], [0.0; HIDDEN]);
        p.logit(&x, &mut h1, &mut h2);
        let mut g = vec![0.0; p.weights.len()];
        p.backprop(&x, &h1, &h2, 1.0, &mut g);
        let h = 1e-6;
        for j in (0..p.weights.len()).step_by(7) {
            let mut up = p.clone();
            up.weights[j] += h;
            let mut down = p.clone();
            down.weights[j] -= h;
            let num = (up.logit(&x, &mut h1, &mut h2) - down.logit(&x, &mut h1, &mut h2)) / (2.0 * h);
            assert!((num - g[j]).abs() < 1e-6, "{j}: {num} vs {}", g[j]);
        }
    }

    #[test]
    fn aggregation() {
        let a = toy(1, 100);
        let mut b = a.clone();
        b.id = 1;
        let cfg = TrainingConfig { architecture: Architecture::Logistic, ..Default::default() };
        let p = ModelParams::init(Architecture::Logistic, vec![0.0; 2], vec![1.0; 2], 3).unwrap();
        let single = fedavg_round(&p, std::slice::from_ref(&a), &cfg).unwrap();
        assert_eq!(single, local_train(&p, &a, &cfg).unwrap());

        let c = toy(5, 60);
        let c = ClientDataset { id: 1, ..c };
        let both = fedavg_round(&p, &[a.clone(), c.clone()], &cfg).unwrap();
        let (la, lc) = (local_train(&p, &a, &cfg).unwrap(), local_train_round(&p, &c, &cfg, 0).unwrap());
        for j in 0..both.weights.len() {
            let manual = 100.0 / 160.0 * la.weights[j] + 60.0 / 160.0 * lc.weights[j];
            assert!((both.weights[j] - manual).abs() < 1e-15);
        }
    }

    #[test]
    fn runs_are_deterministic_and_keep_marginals() {
        let a = toy(1, 120);
        let b = ClientDataset { id: 1, ..toy(2, 80) };
        let cfg = TrainingConfig { rounds: 3, ..Default::default() };
        let r1 = train(&[a.clone(), b.clone()], &cfg).unwrap();
        let r2 = train(&[b, a], &cfg).unwrap();
        assert_eq!(r1.params, r2.params);
        assert_eq!(r1.joint, r2.joint);
        assert_eq!(r1.predictions.len(), 200);
    }
}
