//! Minibatch Adam training and finite-difference gradient checking.

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::model::{cross_entropy, FeatureSpec, ModelParams};
use super::ModelConfig;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset};
use crate::rng::{substream, Stream};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochStats>,
}

struct Adam {
    lr: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(params: &ModelParams, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.2.len()]).collect();
        Self {
            lr,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn update(&mut self, params: &mut ModelParams, grad: &ModelParams) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        let grads = grad.tensors();
        for (i, p) in params.tensors_mut().into_iter().enumerate() {
            let g = grads[i].2;
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.len() {
                m[j] = BETA1 * m[j] + (1.0 - BETA1) * g[j];
                v[j] = BETA2 * v[j] + (1.0 - BETA2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Mean cross-entropy and accuracy over the given graphs; `(0, 0)` when empty.
pub fn evaluate(params: &ModelParams, dataset: &GraphDataset, indices: &[usize]) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in indices {
        let g = &dataset.graphs[i];
        let rec = params.forward(g)?;
        loss += cross_entropy(&rec.logits, g.label())?;
        correct += usize::from(rec.predicted_class() == g.label());
    }
    let n = indices.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains a fresh model on `dataset.split.train`.
///
/// Each minibatch step averages per-graph cross-entropy gradients, adds
/// `weight_decay * param` to every gradient and applies one Adam update. Statistics are
/// recomputed over the full train and test splits after each epoch.
pub fn train(config: &ModelConfig, dataset: &GraphDataset) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() || dataset.split.train.is_empty() {
        return Err(Error::InvalidArgument("training needs a nonempty train split".into()));
    }
    if dataset.num_classes > config.num_classes {
        return Err(Error::Config(format!(
            "dataset has {} classes but the model emits {}",
            dataset.num_classes, config.num_classes
        )));
    }
    let features = FeatureSpec::for_dataset(dataset)?;
    let mut params = ModelParams::init(config, features)?;
    let mut adam = Adam::new(&params, config.learning_rate);
    let mut rng = substream(config.seed, Stream::Shuffle);
    let mut order = dataset.split.train.clone();
    let mut log = Vec::with_capacity(config.epochs);
    let mut best_test = f64::NEG_INFINITY;
    let mut since_best = 0usize;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grad = params.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let g = &dataset.graphs[i];
                let loss = params.accumulate_gradient(g, g.label(), scale, &mut grad)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("loss {loss} on graph {i} in epoch {epoch}")));
                }
            }
            if config.weight_decay > 0.0 {
                let values: Vec<Vec<f64>> = params.tensors().iter().map(|t| t.2.to_vec()).collect();
                for (g, p) in grad.tensors_mut().into_iter().zip(values) {
                    for (gj, pj) in g.iter_mut().zip(p) {
                        *gj += config.weight_decay * pj;
                    }
                }
            }
            adam.update(&mut params, &grad);
        }

        let (train_loss, train_acc) = evaluate(&params, dataset, &dataset.split.train)?;
        let (test_loss, test_acc) = evaluate(&params, dataset, &dataset.split.test)?;
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!("train loss {train_loss} after epoch {epoch}")));
        }
        log.push(EpochStats {
            epoch,
            train_loss,
            train_acc,
            test_loss,
            test_acc,
        });

        if let Some(patience) = config.early_stop_patience {
            if !dataset.split.test.is_empty() {
                if test_acc > best_test {
                    best_test = test_acc;
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= patience {
                        break;
                    }
                }
            }
        }
    }
    Ok(TrainOutcome { params, log })
}

/// Analytic versus numeric derivative of the loss for one parameter entry.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckEntry {
    /// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps near-zero gradients from
    /// amplifying rounding noise.
    pub fn relative_error(&self) -> f64 {
        let scale = self.analytic.abs().max(self.numeric.abs()).max(1e-6);
        (self.analytic - self.numeric).abs() / scale
    }
}

const GRAD_CHECK_MAX_ENTRIES: usize = 512;

/// Central differences for up to 512 parameter entries (all of them for small models,
/// otherwise a seeded random subset).
pub fn gradient_check_entries(params: &ModelParams, graph: &Graph, epsilon: f64) -> Result<Vec<GradCheckEntry>> {
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1e-2]")));
    }
    let target = graph.label().min(params.num_classes().saturating_sub(1));
    let (_, grad) = params.loss_and_gradient(graph, target)?;
    let analytic: Vec<(String, Vec<f64>)> = grad
        .tensors()
        .into_iter()
        .map(|(name, _, data)| (name, data.to_vec()))
        .collect();

    let mut coords: Vec<(usize, usize)> = analytic
        .iter()
        .enumerate()
        .flat_map(|(t, (_, data))| (0..data.len()).map(move |j| (t, j)))
        .collect();
    if coords.len() > GRAD_CHECK_MAX_ENTRIES {
        let mut rng = substream(0, Stream::GradCheck);
        let mut picked: Vec<usize> = index::sample(&mut rng, coords.len(), GRAD_CHECK_MAX_ENTRIES).into_vec();
        picked.sort_unstable();
        coords = picked.into_iter().map(|i| coords[i]).collect();
    }

    let mut probe = params.clone();
    let mut out = Vec::with_capacity(coords.len());
    for (t, j) in coords {
        let original = params.tensors()[t].2[j];
        probe.tensors_mut()[t][j] = original + epsilon;
        let plus = probe.loss(graph, target)?;
        probe.tensors_mut()[t][j] = original - epsilon;
        let minus = probe.loss(graph, target)?;
        probe.tensors_mut()[t][j] = original;
        out.push(GradCheckEntry {
            tensor: analytic[t].0.clone(),
            index: j,
            analytic: analytic[t].1[j],
            numeric: (plus - minus) / (2.0 * epsilon),
        });
    }
    Ok(out)
}

/// Largest relative error between backpropagated and finite-difference gradients.
pub fn gradient_check(params: &ModelParams, graph: &Graph, epsilon: f64) -> Result<f64> {
    Ok(gradient_check_entries(params, graph, epsilon)?
        .iter()
        .map(GradCheckEntry::relative_error)
        .fold(0.0, f64::max))
}
