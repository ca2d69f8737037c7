use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected graph over the time points of a series. Nodes are 0-based
/// positions in the series; edges are stored sorted with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibilityGraph {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl VisibilityGraph {
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// `source,target` rows using `first_label + node` as node labels.
    pub fn edges_csv(&self, first_label: i64) -> String {
        let mut out = String::from("source,target\n");
        for &(a, b) in &self.edges {
            out.push_str(&format!("{},{}\n", first_label + a as i64, first_label + b as i64));
        }
        out
    }
}

/// Natural visibility graph.
///
/// Points `a < b` are linked iff every intermediate point lies strictly
/// below the chord from `(a, y_a)` to `(b, y_b)`. Equivalently the slope from
/// `a` to `b` must exceed the slope from `a` to every point in between, which
/// gives an O(n^2) sweep.
pub fn visibility_graph(values: &[f64]) -> Result<VisibilityGraph> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("value at index {i} is not finite")));
    }
    let mut edges = Vec::new();
    for a in 0..n - 1 {
        let ya = values[a];
        // Steepest point seen so far from `a`.
        let mut steepest = a + 1;
        edges.push((a, a + 1));
        for b in a + 2..n {
            let rise_b = values[b] - ya;
            let rise_s = values[steepest] - ya;
            // slope(a, b) > slope(a, steepest), cross-multiplied.
            if rise_b * (steepest - a) as f64 > rise_s * (b - a) as f64 {
                edges.push((a, b));
                steepest = b;
            }
        }
    }
    edges.sort_unstable();
    Ok(VisibilityGraph { node_count: n, edges })
}
