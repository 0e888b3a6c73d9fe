//! Parameters, forward pass with activation capture, and exact backpropagation.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LayerType, ModelConfig};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset};
use crate::rng::{substream, Stream};

/// How node input features are built from a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSpec {
    /// Constant scalar 1 per node.
    Constant,
    /// One-hot over a node-label alphabet of the given size.
    OneHot(usize),
}

impl FeatureSpec {
    pub fn for_dataset(dataset: &GraphDataset) -> Result<Self> {
        if dataset.is_labeled() {
            if dataset.label_alphabet.is_empty() {
                return Err(Error::Config(
                    "graphs carry node labels but the label alphabet is empty".into(),
                ));
            }
            Ok(FeatureSpec::OneHot(dataset.label_alphabet.len()))
        } else {
            Ok(FeatureSpec::Constant)
        }
    }

    pub fn dim(self) -> usize {
        match self {
            FeatureSpec::Constant => 1,
            FeatureSpec::OneHot(k) => k,
        }
    }
}

/// Input feature matrix `X` of shape `D0 x |V|` (one column per node).
pub fn build_features(graph: &Graph, dataset: &GraphDataset) -> Result<Array2<f64>> {
    features_for(graph, FeatureSpec::for_dataset(dataset)?)
}

pub fn features_for(graph: &Graph, spec: FeatureSpec) -> Result<Array2<f64>> {
    Ok(node_major_features(graph, spec)?.reversed_axes().as_standard_layout().to_owned())
}

fn node_major_features(graph: &Graph, spec: FeatureSpec) -> Result<Array2<f64>> {
    let n = graph.node_count();
    match spec {
        FeatureSpec::Constant => Ok(Array2::ones((n, 1))),
        FeatureSpec::OneHot(k) => {
            let labels = graph
                .node_labels()
                .ok_or_else(|| Error::Config("one-hot features need node labels".into()))?;
            let mut x = Array2::zeros((n, k));
            for (v, &l) in labels.iter().enumerate() {
                if l >= k {
                    return Err(Error::Shape(format!("node label {l} outside one-hot width {k}")));
                }
                x[[v, l]] = 1.0;
            }
            Ok(x)
        }
    }
}

/// Affine map `y = W x + b` with `W` of shape `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            weight: Array2::zeros((out_dim, in_dim)),
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            weight: Array2::eye(dim),
            bias: Array1::zeros(dim),
        }
    }

    fn glorot(out_dim: usize, in_dim: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weight = Array2::from_shape_fn((out_dim, in_dim), |_| rng.gen_range(-limit..limit));
        Self {
            weight,
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    /// Node-major application: rows of `x` are nodes.
    fn apply_rows(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.out_dim(), self.in_dim())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MessageLayer {
    /// `ReLU(W2 ReLU(W1 (h_v + sum_{u in N(v)} h_u) + b1) + b2)`.
    Gin { mlp1: Linear, mlp2: Linear },
    /// `ReLU(W H Â + b)` with `Â = D̃^{-1/2} (A + I) D̃^{-1/2}`.
    Gcn { linear: Linear },
}

impl MessageLayer {
    pub fn in_dim(&self) -> usize {
        match self {
            MessageLayer::Gin { mlp1, .. } => mlp1.in_dim(),
            MessageLayer::Gcn { linear } => linear.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            MessageLayer::Gin { mlp2, .. } => mlp2.out_dim(),
            MessageLayer::Gcn { linear } => linear.out_dim(),
        }
    }

    fn check(&self) -> Result<()> {
        if let MessageLayer::Gin { mlp1, mlp2 } = self {
            if mlp2.in_dim() != mlp1.out_dim() {
                return Err(Error::Shape(format!(
                    "GIN inner widths {} and {} disagree",
                    mlp1.out_dim(),
                    mlp2.in_dim()
                )));
            }
        }
        Ok(())
    }

    fn zeros_like(&self) -> Self {
        match self {
            MessageLayer::Gin { mlp1, mlp2 } => MessageLayer::Gin {
                mlp1: mlp1.zeros_like(),
                mlp2: mlp2.zeros_like(),
            },
            MessageLayer::Gcn { linear } => MessageLayer::Gcn {
                linear: linear.zeros_like(),
            },
        }
    }
}

/// Message-passing stack, global add pooling and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub features: FeatureSpec,
    pub layers: Vec<MessageLayer>,
    /// Row `j` holds the weights `w^j` from pooled neurons to logit `j`.
    pub head: Linear,
}

impl ModelParams {
    /// Glorot-uniform weights and zero biases drawn from the `Init` stream of `config.seed`.
    pub fn init(config: &ModelConfig, features: FeatureSpec) -> Result<Self> {
        config.validate()?;
        let mut rng = substream(config.seed, Stream::Init);
        let d = config.hidden_dim;
        let mut in_dim = features.dim();
        let mut layers = Vec::with_capacity(config.num_layers);
        for _ in 0..config.num_layers {
            layers.push(match config.layer_type {
                LayerType::Gin => MessageLayer::Gin {
                    mlp1: Linear::glorot(d, in_dim, &mut rng),
                    mlp2: Linear::glorot(d, d, &mut rng),
                },
                LayerType::Gcn => MessageLayer::Gcn {
                    linear: Linear::glorot(d, in_dim, &mut rng),
                },
            });
            in_dim = d;
        }
        let head = Linear::glorot(config.num_classes, d, &mut rng);
        Ok(Self {
            features,
            layers,
            head,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_classes(&self) -> usize {
        self.head.out_dim()
    }

    /// Width of the final message-passing layer.
    pub fn hidden_dim(&self) -> usize {
        self.head.in_dim()
    }

    pub fn layer_type(&self) -> Option<LayerType> {
        self.layers.first().map(|l| match l {
            MessageLayer::Gin { .. } => LayerType::Gin,
            MessageLayer::Gcn { .. } => LayerType::Gcn,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.features.dim();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.check()?;
            if layer.in_dim() != width {
                return Err(Error::Shape(format!(
                    "layer {i} expects width {} but receives {width}",
                    layer.in_dim()
                )));
            }
            width = layer.out_dim();
        }
        if self.head.in_dim() != width {
            return Err(Error::Shape(format!(
                "head expects width {} but the last layer emits {width}",
                self.head.in_dim()
            )));
        }
        if self.head.bias.len() != self.head.out_dim() {
            return Err(Error::Shape("head bias length differs from class count".into()));
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            features: self.features,
            layers: self.layers.iter().map(MessageLayer::zeros_like).collect(),
            head: self.head.zeros_like(),
        }
    }

    /// All parameter tensors in a fixed order, with stable names.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        type Named<'a> = (String, Vec<usize>, &'a [f64]);
        fn push<'a>(prefix: String, lin: &'a Linear, out: &mut Vec<Named<'a>>) {
            out.push((
                format!("{prefix}.weight"),
                lin.weight.shape().to_vec(),
                lin.weight.as_slice().expect("standard layout"),
            ));
            out.push((
                format!("{prefix}.bias"),
                lin.bias.shape().to_vec(),
                lin.bias.as_slice().expect("standard layout"),
            ));
        }
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                MessageLayer::Gin { mlp1, mlp2 } => {
                    push(format!("layers.{i}.gin.mlp1"), mlp1, &mut out);
                    push(format!("layers.{i}.gin.mlp2"), mlp2, &mut out);
                }
                MessageLayer::Gcn { linear } => push(format!("layers.{i}.gcn.linear"), linear, &mut out),
            }
        }
        push("head".into(), &self.head, &mut out);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        fn push<'a>(lin: &'a mut Linear, out: &mut Vec<&'a mut [f64]>) {
            out.push(lin.weight.as_slice_mut().expect("standard layout"));
            out.push(lin.bias.as_slice_mut().expect("standard layout"));
        }
        for layer in &mut self.layers {
            match layer {
                MessageLayer::Gin { mlp1, mlp2 } => {
                    push(mlp1, &mut out);
                    push(mlp2, &mut out);
                }
                MessageLayer::Gcn { linear } => push(linear, &mut out),
            }
        }
        push(&mut self.head, &mut out);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }

    /// Forward pass recording every layer's activations.
    pub fn forward(&self, graph: &Graph) -> Result<ActivationRecord> {
        Ok(self.forward_cached(graph)?.into_record())
    }

    pub(crate) fn forward_cached(&self, graph: &Graph) -> Result<ForwardCache> {
        let x0 = node_major_features(graph, self.features)?;
        if x0.ncols() != self.features.dim() {
            return Err(Error::Shape("feature width differs from the model input".into()));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut h = x0.clone();
        for layer in &self.layers {
            let cache = layer_forward(layer, &h, graph)?;
            h = cache.output().clone();
            layers.push(cache);
        }
        let pooled = h.sum_axis(Axis(0));
        let logits = self.head.weight.dot(&pooled) + &self.head.bias;
        Ok(ForwardCache {
            input: x0,
            layers,
            pooled,
            logits,
        })
    }

    /// Cross-entropy of the softmax of the logits against `target`.
    pub fn loss(&self, graph: &Graph, target: usize) -> Result<f64> {
        let record = self.forward(graph)?;
        cross_entropy(&record.logits, target)
    }

    /// Loss and parameter gradients for a single graph.
    pub fn loss_and_gradient(&self, graph: &Graph, target: usize) -> Result<(f64, ModelParams)> {
        let mut grad = self.zeros_like();
        let loss = self.accumulate_gradient(graph, target, 1.0, &mut grad)?;
        Ok((loss, grad))
    }

    /// Adds `scale * dLoss/dParams` into `grad` and returns the loss.
    pub fn accumulate_gradient(&self, graph: &Graph, target: usize, scale: f64, grad: &mut ModelParams) -> Result<f64> {
        let cache = self.forward_cached(graph)?;
        let loss = cross_entropy(&cache.logits, target)?;
        let mut dlogits = softmax(&cache.logits);
        dlogits[target] -= 1.0;
        dlogits *= scale;

        // head
        for j in 0..dlogits.len() {
            grad.head.bias[j] += dlogits[j];
            for k in 0..cache.pooled.len() {
                grad.head.weight[[j, k]] += dlogits[j] * cache.pooled[k];
            }
        }
        let dpooled = self.head.weight.t().dot(&dlogits);

        // add pooling broadcasts the pooled gradient to every node
        let n = graph.node_count();
        let mut dh = Array2::from_shape_fn((n, dpooled.len()), |(_, k)| dpooled[k]);
        for ((layer, cache), glayer) in self
            .layers
            .iter()
            .zip(&cache.layers)
            .zip(grad.layers.iter_mut())
            .rev()
        {
            dh = layer_backward(layer, cache, &dh, graph, glayer);
        }
        Ok(loss)
    }
}

/// Activations captured during a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    /// `H^(0) = X`, shape `D0 x |V|`.
    pub input: Array2<f64>,
    /// `H^(l)` for `l = 1..=L`, each of shape `D x |V|` (neuron-major).
    pub layers: Vec<Array2<f64>>,
    /// Add-pooled final layer, `n^k = sum_j H^(L)[k, j]`.
    pub pooled: Array1<f64>,
    pub logits: Array1<f64>,
}

impl ActivationRecord {
    pub fn final_layer(&self) -> &Array2<f64> {
        self.layers.last().unwrap_or(&self.input)
    }

    pub fn predicted_class(&self) -> usize {
        argmax(&self.logits)
    }
}

pub(crate) struct ForwardCache {
    input: Array2<f64>,
    layers: Vec<LayerCache>,
    pub(crate) pooled: Array1<f64>,
    pub(crate) logits: Array1<f64>,
}

impl ForwardCache {
    fn into_record(self) -> ActivationRecord {
        let to_neuron_major = |m: &Array2<f64>| m.t().as_standard_layout().to_owned();
        ActivationRecord {
            input: to_neuron_major(&self.input),
            layers: self.layers.iter().map(|c| to_neuron_major(c.output())).collect(),
            pooled: self.pooled,
            logits: self.logits,
        }
    }
}

/// Node-major intermediates of one layer.
enum LayerCache {
    Gin {
        aggregated: Array2<f64>,
        pre1: Array2<f64>,
        hidden: Array2<f64>,
        pre2: Array2<f64>,
        output: Array2<f64>,
    },
    Gcn {
        propagated: Array2<f64>,
        pre: Array2<f64>,
        output: Array2<f64>,
    },
}

impl LayerCache {
    fn output(&self) -> &Array2<f64> {
        match self {
            LayerCache::Gin { output, .. } | LayerCache::Gcn { output, .. } => output,
        }
    }
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

fn relu_backward(grad: &Array2<f64>, pre: &Array2<f64>) -> Array2<f64> {
    let mut out = grad.clone();
    out.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    out
}

/// Row `v` becomes `x_v + sum_{u in N(v)} x_u`.
fn gin_aggregate(x: &Array2<f64>, graph: &Graph) -> Array2<f64> {
    let mut out = x.clone();
    for v in 0..graph.node_count() {
        for &u in graph.neighbors(v) {
            let src = x.row(u);
            out.row_mut(v).zip_mut_with(&src, |o, &s| *o += s);
        }
    }
    out
}

/// Row `v` becomes `sum_{u in N(v) ∪ {v}} x_u / sqrt((deg u + 1)(deg v + 1))`.
fn gcn_propagate(x: &Array2<f64>, graph: &Graph) -> Array2<f64> {
    let norm: Vec<f64> = (0..graph.node_count())
        .map(|v| 1.0 / ((graph.degree(v) + 1) as f64).sqrt())
        .collect();
    let mut out = Array2::zeros(x.raw_dim());
    for v in 0..graph.node_count() {
        let mut row = out.row_mut(v);
        row.scaled_add(norm[v] * norm[v], &x.row(v));
        for &u in graph.neighbors(v) {
            row.scaled_add(norm[v] * norm[u], &x.row(u));
        }
    }
    out
}

fn check_input(layer: &MessageLayer, h: &Array2<f64>, graph: &Graph) -> Result<()> {
    if h.nrows() != graph.node_count() {
        return Err(Error::Shape(format!(
            "{} node rows for a graph of {} nodes",
            h.nrows(),
            graph.node_count()
        )));
    }
    if h.ncols() != layer.in_dim() {
        return Err(Error::Shape(format!(
            "input width {} but the layer expects {}",
            h.ncols(),
            layer.in_dim()
        )));
    }
    layer.check()
}

fn layer_forward(layer: &MessageLayer, h: &Array2<f64>, graph: &Graph) -> Result<LayerCache> {
    check_input(layer, h, graph)?;
    Ok(match layer {
        MessageLayer::Gin { mlp1, mlp2 } => {
            let aggregated = gin_aggregate(h, graph);
            let pre1 = mlp1.apply_rows(&aggregated);
            let hidden = relu(&pre1);
            let pre2 = mlp2.apply_rows(&hidden);
            let output = relu(&pre2);
            LayerCache::Gin {
                aggregated,
                pre1,
                hidden,
                pre2,
                output,
            }
        }
        MessageLayer::Gcn { linear } => {
            let propagated = gcn_propagate(h, graph);
            let pre = linear.apply_rows(&propagated);
            let output = relu(&pre);
            LayerCache::Gcn {
                propagated,
                pre,
                output,
            }
        }
    })
}

fn accumulate_linear(grad: &mut Linear, dpre: &Array2<f64>, input: &Array2<f64>) {
    grad.weight += &dpre.t().dot(input);
    grad.bias += &dpre.sum_axis(Axis(0));
}

/// Returns the gradient with respect to the layer input, accumulating parameter gradients.
fn layer_backward(
    layer: &MessageLayer,
    cache: &LayerCache,
    dout: &Array2<f64>,
    graph: &Graph,
    grad: &mut MessageLayer,
) -> Array2<f64> {
    match (layer, cache, grad) {
        (
            MessageLayer::Gin { mlp1, mlp2 },
            LayerCache::Gin {
                aggregated,
                pre1,
                hidden,
                pre2,
                ..
            },
            MessageLayer::Gin { mlp1: g1, mlp2: g2 },
        ) => {
            let dpre2 = relu_backward(dout, pre2);
            accumulate_linear(g2, &dpre2, hidden);
            let dhidden = dpre2.dot(&mlp2.weight);
            let dpre1 = relu_backward(&dhidden, pre1);
            accumulate_linear(g1, &dpre1, aggregated);
            let dagg = dpre1.dot(&mlp1.weight);
            // aggregation is (I + A) x with A symmetric
            gin_aggregate(&dagg, graph)
        }
        (MessageLayer::Gcn { linear }, LayerCache::Gcn { propagated, pre, .. }, MessageLayer::Gcn { linear: g }) => {
            let dpre = relu_backward(dout, pre);
            accumulate_linear(g, &dpre, propagated);
            let dprop = dpre.dot(&linear.weight);
            gcn_propagate(&dprop, graph)
        }
        _ => unreachable!("gradient buffers mirror the parameter layout"),
    }
}

fn to_node_major(h: &Array2<f64>) -> Array2<f64> {
    h.t().as_standard_layout().to_owned()
}

/// One GIN layer on a `D_in x |V|` matrix.
pub fn gin_layer_forward(h: &Array2<f64>, graph: &Graph, mlp1: &Linear, mlp2: &Linear) -> Result<Array2<f64>> {
    let layer = MessageLayer::Gin {
        mlp1: mlp1.clone(),
        mlp2: mlp2.clone(),
    };
    let cache = layer_forward(&layer, &to_node_major(h), graph)?;
    Ok(to_node_major(cache.output()))
}

/// One GCN layer on a `D_in x |V|` matrix.
pub fn gcn_layer_forward(h: &Array2<f64>, graph: &Graph, linear: &Linear) -> Result<Array2<f64>> {
    let layer = MessageLayer::Gcn { linear: linear.clone() };
    let cache = layer_forward(&layer, &to_node_major(h), graph)?;
    Ok(to_node_major(cache.output()))
}

pub fn forward_with_activations(params: &ModelParams, graph: &Graph) -> Result<ActivationRecord> {
    params.forward(graph)
}

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exp = logits.mapv(|v| (v - max).exp());
    let total = exp.sum();
    exp / total
}

pub fn cross_entropy(logits: &Array1<f64>, target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "class {target} outside {} logits",
            logits.len()
        )));
    }
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(lse - logits[target])
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn edge() -> Graph {
        Graph::from_edges(2, &[(0, 1)], None, 0).unwrap()
    }

    fn single() -> Graph {
        Graph::from_edges(1, &[], None, 0).unwrap()
    }

    #[test]
    fn gin_isolated_node_identity() {
        let h = array![[0.5], [2.0], [0.0]];
        let out = gin_layer_forward(&h, &single(), &Linear::identity(3), &Linear::identity(3)).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn gin_two_connected_nodes() {
        let h = array![[1.0, 1.0]];
        let out = gin_layer_forward(&h, &edge(), &Linear::identity(1), &Linear::identity(1)).unwrap();
        assert_eq!(out, array![[2.0, 2.0]]);
    }

    #[test]
    fn gin_clamps_negative_preactivation() {
        let h = array![[1.0]];
        let mut neg = Linear::identity(1);
        neg.weight[[0, 0]] = -1.0;
        let out = gin_layer_forward(&h, &single(), &neg, &Linear::identity(1)).unwrap();
        assert_eq!(out, array![[0.0]]);
    }

    #[test]
    fn gin_shape_mismatch() {
        let h = array![[1.0, 1.0, 1.0]];
        assert!(gin_layer_forward(&h, &edge(), &Linear::identity(1), &Linear::identity(1)).is_err());
    }

    #[test]
    fn gcn_isolated_node_is_linear_relu() {
        let h = array![[1.0], [-3.0]];
        let lin = Linear {
            weight: array![[2.0, 0.0], [0.0, 1.0]],
            bias: Array1::zeros(2),
        };
        let out = gcn_layer_forward(&h, &single(), &lin).unwrap();
        assert_eq!(out, array![[2.0], [0.0]]);
    }

    #[test]
    fn gcn_single_edge_normalization() {
        let h = array![[1.0, 1.0]];
        let out = gcn_layer_forward(&h, &edge(), &Linear::identity(1)).unwrap();
        for v in out.iter() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gcn_empty_graph() {
        let g = Graph::from_edges(0, &[], None, 0).unwrap();
        let h = Array2::zeros((2, 0));
        let out = gcn_layer_forward(&h, &g, &Linear::identity(2)).unwrap();
        assert_eq!(out.shape(), &[2, 0]);
    }

    #[test]
    fn zero_weights_give_bias_logits() {
        let config = ModelConfig::builder(2, 4, LayerType::Gin, 3).build();
        let mut params = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        for t in params.tensors_mut() {
            t.fill(0.0);
        }
        params.head.bias = array![0.25, -1.0, 3.0];
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], None, 0).unwrap();
        let rec = params.forward(&g).unwrap();
        assert!(rec.layers.iter().all(|h| h.iter().all(|&v| v == 0.0)));
        assert_eq!(rec.logits, params.head.bias);
    }

    #[test]
    fn one_layer_model_is_layer_then_head() {
        let config = ModelConfig::builder(1, 3, LayerType::Gin, 2).seed(5).build();
        let params = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        let g = single();
        let rec = params.forward(&g).unwrap();
        let MessageLayer::Gin { mlp1, mlp2 } = &params.layers[0] else { unreachable!() };
        let h = gin_layer_forward(&array![[1.0]], &g, mlp1, mlp2).unwrap();
        assert_eq!(rec.layers[0], h);
        let logits = params.head.weight.dot(&h.column(0)) + &params.head.bias;
        assert_eq!(rec.logits, logits);
    }

    #[test]
    fn forward_is_deterministic() {
        let config = ModelConfig::builder(2, 5, LayerType::Gcn, 2).seed(11).build();
        let a = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        let b = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        assert_eq!(a, b);
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (1, 3)], None, 0).unwrap();
        assert_eq!(a.forward(&g).unwrap(), b.forward(&g).unwrap());
    }

    #[test]
    fn pooled_is_column_sum_of_final_layer() {
        let config = ModelConfig::builder(2, 4, LayerType::Gin, 2).seed(1).build();
        let params = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], None, 0).unwrap();
        let rec = params.forward(&g).unwrap();
        let h = rec.final_layer();
        for k in 0..h.nrows() {
            assert_eq!(rec.pooled[k], h.row(k).sum());
            assert!(h.row(k).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn one_hot_features() {
        let g = Graph::from_edges(2, &[(0, 1)], Some(vec![0, 2]), 0).unwrap();
        let x = features_for(&g, FeatureSpec::OneHot(7)).unwrap();
        assert_eq!(x.shape(), &[7, 2]);
        assert_eq!(x[[0, 0]], 1.0);
        assert_eq!(x[[2, 1]], 1.0);
        assert_eq!(x.sum(), 2.0);
    }

    #[test]
    fn constant_features_for_unlabeled() {
        let g = Graph::from_edges(4, &[], None, 0).unwrap();
        let ds = GraphDataset::new("u", vec![g.clone()], 1, vec![]).unwrap();
        assert_eq!(build_features(&g, &ds).unwrap(), Array2::<f64>::ones((1, 4)));
    }

    #[test]
    fn labels_without_alphabet_is_config_error() {
        let g = Graph::from_edges(1, &[], Some(vec![0]), 0).unwrap();
        let ds = GraphDataset {
            name: "x".into(),
            graphs: vec![g.clone()],
            num_classes: 1,
            label_alphabet: vec![],
            split: Default::default(),
        };
        assert!(matches!(build_features(&g, &ds), Err(Error::Config(_))));
    }
}
