//! Dinic maximum flow on real capacities.

use std::collections::VecDeque;

struct Arc {
    to: usize,
    cap: f64,
}

pub(crate) struct FlowNetwork {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
    eps: f64,
}

impl FlowNetwork {
    /// `eps` is the residual capacity treated as zero.
    pub(crate) fn new(nodes: usize, eps: f64) -> Self {
        Self { arcs: Vec::new(), adj: vec![Vec::new(); nodes], level: vec![0; nodes], next: vec![0; nodes], eps }
    }

    pub(crate) fn add_arc(&mut self, from: usize, to: usize, cap: f64) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.arcs[e].to;
                if self.arcs[e].cap > self.eps && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let e = self.adj[u][self.next[u]];
            let v = self.arcs[e].to;
            if self.arcs[e].cap > self.eps && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.arcs[e].cap));
                if got > 0.0 {
                    self.arcs[e].cap -= got;
                    self.arcs[e ^ 1].cap += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|n| *n = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_network() {
        let mut g = FlowNetwork::new(6, 1e-12);
        for (u, v, c) in [(0, 1, 16.), (0, 2, 13.), (1, 2, 10.), (2, 1, 4.), (1, 3, 12.), (3, 2, 9.), (2, 4, 14.), (4, 3, 7.), (3, 5, 20.), (4, 5, 4.)] {
            g.add_arc(u, v, c);
        }
        assert!((g.max_flow(0, 5) - 23.0).abs() < 1e-12);
    }

    #[test]
    fn bipartite_needs_rerouting() {
        let mut g = FlowNetwork::new(6, 1e-12);
        g.add_arc(0, 1, 1.0);
        g.add_arc(0, 2, 1.0);
        g.add_arc(1, 3, f64::INFINITY);
        g.add_arc(1, 4, f64::INFINITY);
        g.add_arc(2, 3, f64::INFINITY);
        g.add_arc(3, 5, 1.0);
        g.add_arc(4, 5, 1.0);
        assert!((g.max_flow(0, 5) - 2.0).abs() < 1e-12);
    }
}
