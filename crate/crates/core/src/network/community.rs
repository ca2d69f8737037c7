use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VisibilityGraph;

/// Node -> community assignment with contiguous ids from 0.
///
/// Ids are numbered in order of each community's smallest node, so along a
/// time axis the first community is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    pub assignment: Vec<usize>,
    /// `None` when the partition was not produced by detection.
    pub modularity: Option<f64>,
}

impl CommunityPartition {
    /// Relabels arbitrary ids into contiguous ids by first appearance.
    pub fn from_assignment(raw: &[usize], modularity: Option<f64>) -> Self {
        let mut map = BTreeMap::new();
        let assignment = raw
            .iter()
            .map(|&c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
            .collect();
        Self { assignment, modularity }
    }

    /// The built-in five-part partition of days 1..=43:
    /// `[1-4] u [9-19]`, `[5-8]`, `[20-26]`, `[27-32]`, `[33-43]`.
    pub fn paper_default() -> Self {
        let assignment = (1..=43)
            .map(|day| match day {
                1..=4 | 9..=19 => 0,
                5..=8 => 1,
                20..=26 => 2,
                27..=32 => 3,
                _ => 4,
            })
            .collect();
        Self {
            assignment,
            modularity: None,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    /// Members of each community, sorted.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    /// Maximal runs of consecutive nodes sharing a community, as
    /// `(first, last, community)`.
    pub fn runs(&self) -> Vec<(usize, usize, usize)> {
        let mut runs: Vec<(usize, usize, usize)> = Vec::new();
        for (node, &c) in self.assignment.iter().enumerate() {
            match runs.last_mut() {
                Some(run) if run.2 == c => run.1 = node,
                _ => runs.push((node, node, c)),
            }
        }
        runs
    }
}

/// Newman modularity of an assignment on an unweighted graph.
pub fn modularity(graph: &VisibilityGraph, assignment: &[usize]) -> f64 {
    let m = graph.edges.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let k = assignment.iter().max().map_or(0, |c| c + 1);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for &(a, b) in &graph.edges {
        if assignment[a] == assignment[b] {
            internal[assignment[a]] += 1.0;
        }
        degree[assignment[a]] += 1.0;
        degree[assignment[b]] += 1.0;
    }
    internal
        .iter()
        .zip(&degree)
        .map(|(l, d)| l / m - (d / (2.0 * m)).powi(2))
        .sum()
}

/// Weighted graph for one Louvain level. `adj[i]` excludes self loops, which
/// are kept in `self_loops[i]` (counted once per loop end pair, i.e. as 2w in
/// the degree).
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Level {
    fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|(_, w)| w).sum::<f64>() + 2.0 * self.self_loops[i]
    }
}

const GAIN_EPS: f64 = 1e-12;

/// Greedy modularity maximization (Louvain local moving plus aggregation).
///
/// Nodes are visited in an order shuffled by `seed`. A node moves only on a
/// strict modularity gain; among equal best gains the lowest community id
/// wins. The result is bit-reproducible for a given seed.
pub fn detect_communities(graph: &VisibilityGraph, seed: u64) -> CommunityPartition {
    let n = graph.node_count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut level = Level {
        adj: vec![Vec::new(); n],
        self_loops: vec![0.0; n],
    };
    for &(a, b) in &graph.edges {
        level.adj[a].push((b, 1.0));
        level.adj[b].push((a, 1.0));
    }
    // Original node -> current level node.
    let mut membership: Vec<usize> = (0..n).collect();

    loop {
        let (community, moved) = local_moving(&level, &mut rng);
        if !moved {
            break;
        }
        // Compact community ids for the next level.
        let mut compact = BTreeMap::new();
        for &c in &community {
            let next = compact.len();
            compact.entry(c).or_insert(next);
        }
        let k = compact.len();
        let community: Vec<usize> = community.iter().map(|c| compact[c]).collect();
        for m in membership.iter_mut() {
            *m = community[*m];
        }
        let mut agg: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
        let mut self_loops = vec![0.0; k];
        for i in 0..level.adj.len() {
            let ci = community[i];
            self_loops[ci] += level.self_loops[i];
            for &(j, w) in &level.adj[i] {
                let cj = community[j];
                if ci == cj {
                    // Each internal edge is seen from both ends.
                    self_loops[ci] += w / 2.0;
                } else {
                    *agg[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        level = Level {
            adj: agg.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loops,
        };
        if k == 1 {
            break;
        }
    }

    let q = modularity(graph, &membership);
    CommunityPartition::from_assignment(&membership, Some(q))
}

/// One local-moving phase. Returns the community of every level node and
/// whether any node changed community.
fn local_moving(level: &Level, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = level.adj.len();
    let degree: Vec<f64> = (0..n).map(|i| level.degree(i)).collect();
    let m2: f64 = degree.iter().sum();
    let mut community: Vec<usize> = (0..n).collect();
    let mut total: Vec<f64> = degree.clone();
    if m2 == 0.0 {
        return (community, false);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut any_move = false;
    let mut links: BTreeMap<usize, f64> = BTreeMap::new();
    loop {
        let mut moved = false;
        for &i in &order {
            let own = community[i];
            links.clear();
            for &(j, w) in &level.adj[i] {
                *links.entry(community[j]).or_insert(0.0) += w;
            }
            total[own] -= degree[i];
            let gain = |c: usize, w_in: f64| w_in - total[c] * degree[i] / m2;

            let own_gain = gain(own, links.get(&own).copied().unwrap_or(0.0));
            let mut best = own;
            let mut best_gain = own_gain;
            // BTreeMap iterates ids ascending, so ties keep the lowest id.
            for (&c, &w_in) in &links {
                if c == own {
                    continue;
                }
                let g = gain(c, w_in);
                let improves_best = g > best_gain + GAIN_EPS
                    || ((g - best_gain).abs() <= GAIN_EPS && c < best && g > own_gain + GAIN_EPS);
                if improves_best {
                    best = c;
                    best_gain = g;
                }
            }
            total[best] += degree[i];
            if best != own {
                community[i] = best;
                moved = true;
                any_move = true;
            }
        }
        if !moved {
            break;
        }
    }
    (community, any_move)
}
