//! Synthetic two-class dataset with a planted high-degree node.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphDataset};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

/// Size bounds for [`gen_planted_degree_dataset_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedDegreeConfig {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Random chords added on top of the spanning tree, subject to the degree cap.
    pub extra_edges: usize,
    /// The hub of a class-1 graph gets degree in `max(threshold + 1, 3)..=threshold + max_excess`.
    pub max_excess: usize,
}

impl Default for PlantedDegreeConfig {
    fn default() -> Self {
        Self {
            min_nodes: 12,
            max_nodes: 24,
            extra_edges: 2,
            max_excess: 4,
        }
    }
}

/// Balanced dataset where class-1 graphs contain a node of degree above `threshold`
/// and class-0 graphs do not. Graph `i` has class `i % 2`.
pub fn gen_planted_degree_dataset(n_graphs: usize, threshold: usize, seed: u64) -> Result<GraphDataset> {
    gen_planted_degree_dataset_with(n_graphs, threshold, seed, PlantedDegreeConfig::default())
}

pub fn gen_planted_degree_dataset_with(
    n_graphs: usize,
    threshold: usize,
    seed: u64,
    config: PlantedDegreeConfig,
) -> Result<GraphDataset> {
    if n_graphs == 0 || !n_graphs.is_multiple_of(2) {
        return Err(Error::Generation(format!("graph count {n_graphs} must be positive and even")));
    }
    if threshold == 0 {
        return Err(Error::Generation("threshold must be at least 1".into()));
    }
    if config.max_excess == 0 || config.min_nodes < 2 || config.min_nodes > config.max_nodes {
        return Err(Error::Generation(format!("invalid size bounds {config:?}")));
    }
    let hub_max = threshold + config.max_excess;
    let hub_min = (threshold + 1).max(3);
    if hub_min > hub_max || hub_max + 1 > config.max_nodes {
        return Err(Error::Generation(format!(
            "a hub of degree {hub_min}..={hub_max} does not fit in {} nodes",
            config.max_nodes
        )));
    }

    let mut rng = substream(seed, Stream::Generator);
    let graphs = (0..n_graphs)
        .map(|i| {
            let target = rng.gen_range(config.min_nodes..=config.max_nodes);
            if i % 2 == 0 {
                capped_graph(&mut rng, target, threshold, config.extra_edges, 0)
            } else {
                let hub_degree = rng.gen_range(hub_min..=hub_max);
                let base = target.saturating_sub(hub_degree).max(2);
                let mut edges_graph = capped_adjacency(&mut rng, base, threshold, config.extra_edges);
                let hub = rng.gen_range(0..edges_graph.len());
                while edges_graph[hub].len() < hub_degree {
                    let leaf = edges_graph.len();
                    edges_graph.push(vec![hub]);
                    edges_graph[hub].push(leaf);
                }
                to_graph(edges_graph, 1)
            }
        })
        .collect();
    GraphDataset::new(format!("planted-degree-{threshold}"), graphs, 2, Vec::new())
}

/// Random tree grown under a degree cap, plus a few chords under the same cap.
fn capped_adjacency(rng: &mut ChaCha8Rng, target: usize, cap: usize, extra_edges: usize) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new()];
    for new in 1..target {
        let open: Vec<usize> = (0..adj.len()).filter(|&v| adj[v].len() < cap).collect();
        if open.is_empty() {
            break;
        }
        let parent = open[rng.gen_range(0..open.len())];
        adj.push(vec![parent]);
        adj[parent].push(new);
    }
    for _ in 0..extra_edges {
        for _attempt in 0..20 {
            let u = rng.gen_range(0..adj.len());
            let v = rng.gen_range(0..adj.len());
            if u != v && adj[u].len() < cap && adj[v].len() < cap && !adj[u].contains(&v) {
                adj[u].push(v);
                adj[v].push(u);
                break;
            }
        }
    }
    adj
}

fn capped_graph(rng: &mut ChaCha8Rng, target: usize, cap: usize, extra: usize, label: usize) -> Graph {
    to_graph(capped_adjacency(rng, target, cap, extra), label)
}

fn to_graph(adj: Vec<Vec<usize>>, label: usize) -> Graph {
    let edges: Vec<_> = adj
        .iter()
        .enumerate()
        .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .collect();
    Graph::from_edges(adj.len(), &edges, None, label).expect("generator emits simple graphs")
}
