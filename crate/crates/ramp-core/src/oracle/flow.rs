//! Exact Wasserstein-1 distances on small state graphs.
//!
//! Ground metric: shortest-path hop count on the state adjacency graph (the
//! number of environment steps needed to move between states). The transport
//! problem is solved as a min-cost flow on the graph itself by successive
//! shortest augmenting paths with node potentials, which also yields an
//! optimal dual potential (a 1-Lipschitz witness of the distance).

use crate::env::TabularMdp;
use crate::error::{Error, Result};
use crate::oracle::Dist;

/// Adjacency over `n` states plus all-pairs shortest-path distances.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    n: usize,
    arcs: Vec<(usize, usize)>,
    dist: Vec<f64>,
}

impl MetricGraph {
    /// Graph from undirected unit-length edges.
    pub fn from_undirected_edges(n: usize, edges: &[(usize, usize)]) -> Result<MetricGraph> {
        let mut arcs = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidArgument(format!("bad edge ({u}, {v})")));
            }
            arcs.push((u, v));
            arcs.push((v, u));
        }
        Ok(MetricGraph::from_arcs(n, arcs))
    }

    /// Path graph `0 - 1 - ... - n-1`.
    pub fn chain(n: usize) -> MetricGraph {
        let edges: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        MetricGraph::from_undirected_edges(n, &edges).unwrap()
    }

    /// Support graph of an MDP: an arc `s -> s'` whenever some action reaches
    /// `s'` from `s` with positive probability. Self-loops are dropped.
    pub fn from_mdp(mdp: &TabularMdp) -> MetricGraph {
        let n = mdp.n_states();
        let mut arcs = Vec::new();
        for s in 0..n {
            for s2 in 0..n {
                if s != s2 && (0..mdp.n_actions()).any(|a| mdp.prob(s, a, s2) > 0.0) {
                    arcs.push((s, s2));
                }
            }
        }
        MetricGraph::from_arcs(n, arcs)
    }

    fn from_arcs(n: usize, mut arcs: Vec<(usize, usize)>) -> MetricGraph {
        arcs.sort_unstable();
        arcs.dedup();
        let mut dist = vec![f64::INFINITY; n * n];
        // BFS from every source; hop counts are the temporal distance.
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &arcs {
            adj[u].push(v);
        }
        let mut queue = std::collections::VecDeque::new();
        for src in 0..n {
            dist[src * n + src] = 0.0;
            queue.clear();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = dist[src * n + u];
                for &v in &adj[u] {
                    if dist[src * n + v].is_infinite() {
                        dist[src * n + v] = du + 1.0;
                        queue.push_back(v);
                    }
                }
            }
        }
        MetricGraph { n, arcs, dist }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// Shortest-path hop count from `u` to `v` (infinite if unreachable).
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.n + v]
    }
}

/// Exact `W1(p, q)` under the graph's shortest-path metric.
pub fn w1_exact(p: &Dist, q: &Dist, g: &MetricGraph) -> Result<f64> {
    Ok(w1_exact_with_potential(p, q, g)?.0)
}

/// Exact `W1(p, q)` together with an optimal dual potential `f` satisfying
/// `f(u) - f(v) <= d(u, v)` on every arc and `<p - q, f> = W1(p, q)`.
/// The potential is shifted so `f[0] = 0`.
pub fn w1_exact_with_potential(p: &Dist, q: &Dist, g: &MetricGraph) -> Result<(f64, Vec<f64>)> {
    let n = g.n;
    if p.len() != n || q.len() != n {
        return Err(Error::InvalidArgument(format!(
            "distributions over {} and {} states on a {n}-state graph",
            p.len(),
            q.len()
        )));
    }

    // Node layout: 0..n graph nodes, n = super source, n + 1 = super sink.
    let source = n;
    let sink = n + 1;
    let mut net = FlowNet::new(n + 2);
    for &(u, v) in &g.arcs {
        net.add_arc(u, v, f64::INFINITY, 1.0);
    }
    let mut supply = 0.0;
    for i in 0..n {
        let b = p.get(i) - q.get(i);
        if b > 0.0 {
            net.add_arc(source, i, b, 0.0);
            supply += b;
        } else if b < 0.0 {
            net.add_arc(i, sink, -b, 0.0);
        }
    }

    let (cost, shipped, potential) = net.min_cost_flow(source, sink);
    if (shipped - supply).abs() > 1e-9 {
        return Err(Error::InvalidArgument(
            "transport infeasible: mass separated by unreachable states".into(),
        ));
    }

    // Dual feasibility of the final potentials gives, for every arc
    // (u, v, cost c): pot[v] - pot[u] <= c, so f = -pot is 1-Lipschitz along
    // arcs and <p - q, f> equals the primal cost at optimality.
    let f0 = -potential[0];
    let f: Vec<f64> = (0..n).map(|i| -potential[i] - f0).collect();
    let dual: f64 = (0..n).map(|i| (p.get(i) - q.get(i)) * f[i]).sum();
    debug_assert!(
        (dual - cost).abs() <= 1e-9 * (1.0 + cost.abs()),
        "duality gap: primal {cost}, dual {dual}"
    );
    Ok((cost, f))
}

struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

struct FlowNet {
    n: usize,
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(n: usize) -> FlowNet {
        FlowNet {
            n,
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap, cost });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc {
            to: from,
            cap: 0.0,
            cost: -cost,
        });
    }

    /// Successive shortest augmenting paths with Johnson potentials.
    /// Returns (total cost, total shipped flow, final node potentials).
    fn min_cost_flow(&mut self, source: usize, sink: usize) -> (f64, f64, Vec<f64>) {
        let n = self.n;
        let mut pot = vec![0.0; n];
        let mut total_cost = 0.0;
        let mut total_flow = 0.0;
        loop {
            // Dijkstra on reduced costs; O(V^2) scan keeps ties resolved by
            // lowest node index deterministically.
            let mut dist = vec![f64::INFINITY; n];
            let mut parent: Vec<Option<usize>> = vec![None; n];
            let mut done = vec![false; n];
            dist[source] = 0.0;
            loop {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for v in 0..n {
                    if !done[v] && dist[v] < best {
                        best = dist[v];
                        u = v;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                for &ai in &self.adj[u] {
                    let arc = &self.arcs[ai];
                    if arc.cap <= 0.0 {
                        continue;
                    }
                    let reduced = arc.cost + pot[u] - pot[arc.to];
                    let cand = dist[u] + reduced.max(0.0);
                    if cand < dist[arc.to] {
                        dist[arc.to] = cand;
                        parent[arc.to] = Some(ai);
                    }
                }
            }
            if dist[sink].is_infinite() {
                break;
            }
            for v in 0..n {
                pot[v] += dist[v].min(dist[sink]);
            }
            // Bottleneck and path cost in original costs.
            let mut bottleneck = f64::INFINITY;
            let mut path_cost = 0.0;
            let mut v = sink;
            while let Some(ai) = parent[v] {
                bottleneck = bottleneck.min(self.arcs[ai].cap);
                path_cost += self.arcs[ai].cost;
                v = self.arcs[ai ^ 1].to;
            }
            let mut v = sink;
            while let Some(ai) = parent[v] {
                self.arcs[ai].cap -= bottleneck;
                self.arcs[ai ^ 1].cap += bottleneck;
                v = self.arcs[ai ^ 1].to;
            }
            total_cost += bottleneck * path_cost;
            total_flow += bottleneck;
        }
        (total_cost, total_flow, pot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn test_identical_distributions_cost_zero() {
        let g = MetricGraph::chain(5);
        let p = Dist::uniform(5);
        assert_eq!(w1_exact(&p, &p, &g).unwrap(), 0.0);
    }

    #[test]
    fn test_dirac_pair_is_graph_distance() {
        let g = MetricGraph::chain(7);
        let p = Dist::dirac(7, 6);
        let q = Dist::dirac(7, 2);
        assert!((w1_exact(&p, &q, &g).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn test_three_state_split() {
        // (0.5, 0.5, 0) -> (0, 0, 1): half the mass moves 2 hops, half 1.
        let g = MetricGraph::chain(3);
        let p = Dist::new(vec![0.5, 0.5, 0.0]).unwrap();
        let q = Dist::dirac(3, 2);
        assert!((w1_exact(&p, &q, &g).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn test_symmetry_and_triangle_on_random_instances() {
        let g = MetricGraph::chain(9);
        let mut r = rng::seeded(5);
        for _ in 0..50 {
            let p = Dist::random_simplex(9, &mut r);
            let q = Dist::random_simplex(9, &mut r);
            let m = Dist::random_simplex(9, &mut r);
            let pq = w1_exact(&p, &q, &g).unwrap();
            let qp = w1_exact(&q, &p, &g).unwrap();
            let pm = w1_exact(&p, &m, &g).unwrap();
            let mq = w1_exact(&m, &q, &g).unwrap();
            assert!((pq - qp).abs() < 1e-9, "symmetry: {pq} vs {qp}");
            assert!(pq <= pm + mq + 1e-9, "triangle violated");
            assert!(pq >= -1e-12);
        }
    }

    #[test]
    fn test_potential_is_lipschitz_and_tight() {
        let g = MetricGraph::chain(12);
        let mut r = rng::seeded(23);
        for _ in 0..40 {
            let p = Dist::random_simplex(12, &mut r);
            let q = Dist::random_simplex(12, &mut r);
            let (w, f) = w1_exact_with_potential(&p, &q, &g).unwrap();
            for &(u, v) in g.arcs() {
                assert!(f[u] - f[v] <= 1.0 + 1e-9, "arc ({u},{v}) violates Lipschitz");
            }
            let dual: f64 = (0..12).map(|i| (p.get(i) - q.get(i)) * f[i]).sum();
            assert!((dual - w).abs() < 1e-9, "dual {dual} != primal {w}");
            assert_eq!(f[0], 0.0);
        }
    }

    #[test]
    fn test_matches_exhaustive_plans_on_tiny_instances() {
        // Brute force over transport plans on 3 states via a fine grid of
        // couplings, lower-bounding the LP optimum.
        let g = MetricGraph::chain(3);
        let p = Dist::new(vec![0.6, 0.1, 0.3]).unwrap();
        let q = Dist::new(vec![0.2, 0.5, 0.3]).unwrap();
        let w = w1_exact(&p, &q, &g).unwrap();
        // Exhaustive: move x mass 0->1, y mass 0->2, z mass 2->1 ... instead
        // enumerate with the closed form for chains: W1 = sum_k |F_p(k) - F_q(k)|.
        let mut cdf = 0.0;
        let mut expect = 0.0;
        for i in 0..2 {
            cdf += p.get(i) - q.get(i);
            expect += cdf.abs();
        }
        assert!((w - expect).abs() < 1e-12, "{w} vs {expect}");
    }

    #[test]
    fn test_chain_cdf_identity_random() {
        let n = 20;
        let g = MetricGraph::chain(n);
        let mut r = rng::seeded(77);
        for _ in 0..30 {
            let p = Dist::random_simplex(n, &mut r);
            let q = Dist::random_simplex(n, &mut r);
            let w = w1_exact(&p, &q, &g).unwrap();
            let mut cdf = 0.0;
            let mut expect = 0.0;
            for i in 0..n - 1 {
                cdf += p.get(i) - q.get(i);
                expect += cdf.abs();
            }
            assert!((w - expect).abs() < 1e-9, "{w} vs {expect}");
        }
    }

    #[test]
    fn test_disconnected_mass_rejected() {
        let g = MetricGraph::from_undirected_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let p = Dist::dirac(4, 0);
        let q = Dist::dirac(4, 3);
        assert!(w1_exact(&p, &q, &g).is_err());
    }

    #[test]
    fn test_distance_table() {
        let g = MetricGraph::chain(4);
        assert_eq!(g.distance(0, 3), 3.0);
        assert_eq!(g.distance(3, 1), 2.0);
        assert_eq!(g.distance(2, 2), 0.0);
    }
}
