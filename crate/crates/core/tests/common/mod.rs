#![allow(dead_code)]

use fujita_graph::graph::Graph;
use fujita_graph::operators::Field;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random recursive tree plus Erdős–Rényi extras; weights and measures in [0.5, 2).
pub fn random_graph(n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for y in 1..n {
        let x = rng.random_range(0..y);
        edges.push((x, y, rng.random_range(0.5..2.0)));
    }
    for x in 0..n {
        for y in (x + 1)..n {
            if !edges.iter().any(|&(a, b, _)| (a, b) == (x, y)) && rng.random_bool(0.25) {
                edges.push((x, y, rng.random_range(0.5..2.0)));
            }
        }
    }
    let mu = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    Graph::new(mu, &edges, None).expect("connected by construction")
}

/// A random connected weighted graph on 2..=max_n vertices.
pub fn graphs(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, any::<u64>()).prop_map(|(n, seed)| random_graph(n, seed))
}

pub fn field(g: &Graph, seed: u64, lo: f64, hi: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field::new((0..g.vertex_count()).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
