use ndarray::Array1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gnn::{cross_entropy, softmax, ModelParams};
use crate::graph::Graph;

pub const DEFAULT_ENTROPY_STEPS: usize = 100;
pub const DEFAULT_ENTROPY_LR: f64 = 0.05;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Learned soft mask over the pooled final-layer neurons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyMask {
    pub logits: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `sigma > 0.5`.
    pub selected: Vec<bool>,
    /// Objective before the first step and after every step.
    pub objective: Vec<f64>,
}

/// `-log softmax(head(mask * pooled))_class`.
pub fn masked_objective(params: &ModelParams, pooled: &Array1<f64>, mask: &[f64], class: usize) -> Result<f64> {
    if mask.len() != pooled.len() {
        return Err(Error::Shape(format!("mask of {} for {} neurons", mask.len(), pooled.len())));
    }
    let masked = pooled * &Array1::from(mask.to_vec());
    let logits = params.head.weight.dot(&masked) + &params.head.bias;
    cross_entropy(&logits, class)
}

/// Plain gradient descent on the masked objective from `eta = 0`. A step that would
/// raise the objective is rejected and the learning rate halved.
pub fn entropy_mask_optimize(
    params: &ModelParams,
    graph: &Graph,
    class: usize,
    steps: usize,
    lr: f64,
) -> Result<EntropyMask> {
    if steps == 0 || !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::InvalidArgument(format!("steps {steps} and lr {lr} must be positive")));
    }
    let w = &params.head.weight;
    if class >= w.nrows() {
        return Err(Error::InvalidArgument(format!("class {class} out of range for {} classes", w.nrows())));
    }
    let pooled = params.forward(graph)?.pooled;
    let d = pooled.len();
    let mut eta = vec![0.0; d];
    let mut lr = lr;
    let eval = |eta: &[f64]| -> Result<f64> {
        let mask: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let v = masked_objective(params, &pooled, &mask, class)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("entropy objective became {v}")));
        }
        Ok(v)
    };
    let mut current = eval(&eta)?;
    let mut objective = vec![current];
    for _ in 0..steps {
        let sig: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let masked: Array1<f64> = pooled.iter().zip(&sig).map(|(&n, &s)| n * s).collect();
        let logits = w.dot(&masked) + &params.head.bias;
        let mut dz = softmax(&logits);
        dz[class] -= 1.0;
        let grad: Vec<f64> = (0..d)
            .map(|k| {
                let dm: f64 = (0..w.nrows()).map(|j| dz[j] * w[[j, k]]).sum::<f64>() * pooled[k];
                dm * sig[k] * (1.0 - sig[k])
            })
            .collect();
        let trial: Vec<f64> = eta.iter().zip(&grad).map(|(&e, &g)| e - lr * g).collect();
        let value = eval(&trial)?;
        if value > current {
            lr *= 0.5;
        } else {
            eta = trial;
            current = value;
        }
        objective.push(current);
    }
    let sigma: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
    Ok(EntropyMask {
        selected: sigma.iter().map(|&s| s > 0.5).collect(),
        sigma,
        logits: eta,
        objective,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyImportance {
    pub sigma: f64,
    pub selected: bool,
    /// `w^y_k * n^k_G` when selected, else 0.
    pub weighted: f64,
}

pub fn entropy_importance(
    mask: &EntropyMask,
    params: &ModelParams,
    graph: &Graph,
    class: usize,
) -> Result<Vec<EntropyImportance>> {
    let w = &params.head.weight;
    if class >= w.nrows() || mask.sigma.len() != w.ncols() {
        return Err(Error::InvalidArgument(format!("class {class} or mask width out of range")));
    }
    let pooled = params.forward(graph)?.pooled;
    Ok((0..w.ncols())
        .map(|k| EntropyImportance {
            sigma: mask.sigma[k],
            selected: mask.selected[k],
            weighted: if mask.selected[k] { w[[class, k]] * pooled[k] } else { 0.0 },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{FeatureSpec, LayerType, Linear, ModelConfig};
    use ndarray::array;

    fn model(head: ndarray::Array2<f64>, bias: Array1<f64>) -> ModelParams {
        let config = ModelConfig::builder(1, head.ncols(), LayerType::Gin, head.nrows()).seed(5).build();
        let mut p = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        p.head = Linear { weight: head, bias };
        p
    }

    fn star() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)], None, 1).unwrap()
    }

    #[test]
    fn rejects_bad_settings() {
        let p = model(array![[1.0], [-1.0]], array![0.0, 0.0]);
        assert!(entropy_mask_optimize(&p, &star(), 0, 10, 0.0).is_err());
        assert!(entropy_mask_optimize(&p, &star(), 0, 0, 0.1).is_err());
        assert!(entropy_mask_optimize(&p, &star(), 2, 10, 0.1).is_err());
    }

    #[test]
    fn identity_mask_matches_unmasked_loss() {
        let p = model(array![[0.3, -0.2], [-0.4, 0.9]], array![0.1, -0.1]);
        let rec = p.forward(&star()).unwrap();
        let v = masked_objective(&p, &rec.pooled, &[1.0, 1.0], 1).unwrap();
        assert!((v - cross_entropy(&rec.logits, 1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn objective_never_increases() {
        let p = model(array![[0.7, -1.3], [-0.2, 0.4]], array![0.0, 0.3]);
        let m = entropy_mask_optimize(&p, &star(), 0, DEFAULT_ENTROPY_STEPS, 5.0).unwrap();
        assert!(m.objective.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(m.objective.len(), DEFAULT_ENTROPY_STEPS + 1);
    }

    #[test]
    fn unselected_neurons_weigh_zero() {
        let p = model(array![[1.0, -1.0], [-1.0, 1.0]], array![0.0, 0.0]);
        let mask = EntropyMask {
            logits: vec![0.0, 2.0],
            sigma: vec![0.5, sigmoid(2.0)],
            selected: vec![false, true],
            objective: Vec::new(),
        };
        let imp = entropy_importance(&mask, &p, &star(), 0).unwrap();
        assert_eq!(imp[0].weighted, 0.0);
        assert_eq!(imp[0].sigma, 0.5);
        assert!(imp[1].selected);
    }
}
