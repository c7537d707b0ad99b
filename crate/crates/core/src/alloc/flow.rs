//! Successive shortest augmenting paths with node potentials, real edge costs.
//!
//! Only as much flow is pushed as lowers the total cost: augmentation stops as
//! soon as the cheapest residual source-sink path has nonnegative cost.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Cost comparison tolerance.
pub(crate) const COST_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: i64,
    cost: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MinCostFlow {
    graph: Vec<Vec<Edge>>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // Min-heap on distance, lowest node index first on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MinCostFlow {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            graph: vec![Vec::new(); n_nodes],
        }
    }

    /// Adds `from -> to`; returns `(from, index)` to query its flow later.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> (usize, usize) {
        let fwd = self.graph[from].len();
        let bwd = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge {
            to,
            rev: bwd,
            cap,
            cost,
        });
        self.graph[to].push(Edge {
            to: from,
            rev: fwd,
            cap: 0,
            cost: -cost,
        });
        (from, fwd)
    }

    pub fn flow_on(&self, handle: (usize, usize)) -> i64 {
        let e = &self.graph[handle.0][handle.1];
        self.graph[e.to][e.rev].cap
    }

    /// Bellman-Ford potentials so reduced costs start nonnegative even with
    /// negative edge costs. The initial residual graph must have no negative cycle.
    fn initial_potentials(&self, source: usize) -> Vec<f64> {
        let n = self.graph.len();
        let mut pot = vec![f64::INFINITY; n];
        pot[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if pot[u].is_infinite() {
                    continue;
                }
                for e in &self.graph[u] {
                    if e.cap > 0 && pot[u] + e.cost < pot[e.to] - COST_EPS {
                        pot[e.to] = pot[u] + e.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        pot
    }

    /// Runs min-cost flow from `source` to `sink`, augmenting while the
    /// shortest path cost is negative. Returns `(flow, cost)`.
    pub fn run_negative_paths(&mut self, source: usize, sink: usize) -> (i64, f64) {
        let n = self.graph.len();
        let mut pot = self.initial_potentials(source);
        let mut dist = vec![f64::INFINITY; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut total_flow = 0;
        let mut total_cost = 0.0;

        loop {
            dist.fill(f64::INFINITY);
            prev.fill(None);
            dist[source] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(HeapEntry {
                dist: 0.0,
                node: source,
            });
            while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for (k, e) in self.graph[u].iter().enumerate() {
                    if e.cap <= 0 || pot[e.to].is_infinite() {
                        continue;
                    }
                    // Reduced costs are nonnegative up to rounding.
                    let reduced = (e.cost + pot[u] - pot[e.to]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[e.to] - COST_EPS {
                        dist[e.to] = nd;
                        prev[e.to] = Some((u, k));
                        heap.push(HeapEntry { dist: nd, node: e.to });
                    }
                }
            }
            if dist[sink].is_infinite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    pot[v] += dist[v];
                }
            }
            // pot[source] stays 0, so pot[sink] is the true path cost.
            let path_cost = pot[sink] - pot[source];
            if path_cost >= -COST_EPS {
                break;
            }

            let mut push = i64::MAX;
            let mut v = sink;
            while let Some((u, k)) = prev[v] {
                push = push.min(self.graph[u][k].cap);
                v = u;
            }
            let mut v = sink;
            while let Some((u, k)) = prev[v] {
                let rev = self.graph[u][k].rev;
                self.graph[u][k].cap -= push;
                self.graph[v][rev].cap += push;
                v = u;
            }
            total_flow += push;
            total_cost += path_cost * push as f64;
        }
        (total_flow, total_cost)
    }
}
