//! Edge selection for one circuit: minimum spanning tree plus add-back of
//! pruned edges that are strictly shorter than the path through the graph
//! built so far.

use std::collections::BinaryHeap;

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.rank[ra] < self.rank[rb] {
            self.parent[ra] = rb;
        } else {
            self.parent[rb] = ra;
            if self.rank[ra] == self.rank[rb] {
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// A candidate edge of the complete graph on attached groups.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgePlan {
    /// Indices into the candidate list chosen for the spanning tree.
    pub mst: Vec<usize>,
    /// Indices accepted by the strict shorter-path test, in scan order.
    pub addback: Vec<usize>,
}

impl EdgePlan {
    pub fn chosen(&self) -> Vec<usize> {
        let mut all = self.mst.clone();
        all.extend(&self.addback);
        all
    }
}

/// Pick circuit edges. `node_ids[i]` breaks weight ties: candidates sort by
/// (weight, smaller id, larger id), Kruskal takes the tree, and the pruned
/// remainder is re-scanned in the same order, each edge accepted iff its
/// weight beats the current-graph shortest path strictly.
pub fn plan_edges(node_ids: &[String], candidates: &[CandidateEdge]) -> EdgePlan {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&x, &y| {
        let (ex, ey) = (&candidates[x], &candidates[y]);
        let (ux, vx) = norm_ids(node_ids, ex);
        let (uy, vy) = norm_ids(node_ids, ey);
        ex.weight
            .total_cmp(&ey.weight)
            .then_with(|| ux.cmp(uy))
            .then_with(|| vx.cmp(vy))
    });

    let n = node_ids.len();
    let mut uf = UnionFind::new(n);
    let mut plan = EdgePlan::default();
    let mut pruned: Vec<usize> = Vec::new();
    for &idx in &order {
        let e = &candidates[idx];
        if uf.union(e.a, e.b) {
            plan.mst.push(idx);
        } else {
            pruned.push(idx);
        }
    }

    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &idx in &plan.mst {
        let e = &candidates[idx];
        adjacency[e.a].push((e.b, e.weight));
        adjacency[e.b].push((e.a, e.weight));
    }
    for &idx in &pruned {
        let e = &candidates[idx];
        let through = shortest_dist(&adjacency, e.a, e.b);
        if e.weight < through {
            plan.addback.push(idx);
            adjacency[e.a].push((e.b, e.weight));
            adjacency[e.b].push((e.a, e.weight));
        }
    }
    plan
}

fn norm_ids<'a>(node_ids: &'a [String], e: &CandidateEdge) -> (&'a str, &'a str) {
    let (u, v) = (&node_ids[e.a], &node_ids[e.b]);
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Dijkstra over a small adjacency list; infinity when unreachable.
pub fn shortest_dist(adjacency: &[Vec<(usize, f64)>], from: usize, to: usize) -> f64 {
    let n = adjacency.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[from] = 0.0;
    let mut heap: BinaryHeap<std::cmp::Reverse<(u64, usize)>> = BinaryHeap::new();
    heap.push(std::cmp::Reverse((0u64, from)));
    while let Some(std::cmp::Reverse((dbits, u))) = heap.pop() {
        let du = f64::from_bits(dbits);
        if du > dist[u] {
            continue;
        }
        if u == to {
            return du;
        }
        for &(v, w) in &adjacency[u] {
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(std::cmp::Reverse((nd.to_bits(), v)));
            }
        }
    }
    dist[to]
}
