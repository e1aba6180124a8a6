//! Exact `F_s(mu, nu)` for finitely supported measures.
//!
//! The supremum over nonnegative 1-Lipschitz test functions vanishing off
//! `B(0, s)` is a finite linear program on the atoms inside the ball. Its
//! dual is a transportation problem: positive net mass either ships to a
//! negative atom at Euclidean cost or leaves through the sphere at cost
//! `s - |p|`; unmatched negative mass is free. Successive shortest paths
//! with Dijkstra on a dense bipartite residual graph solves it exactly.

use std::collections::BTreeMap;

use super::{Ball, DiscreteMeasure};
use crate::geom::Point;

/// `F_s(mu, nu)`, the bounded-Lipschitz distance restricted to `B(0, s)`.
pub fn f_dist(mu: &DiscreteMeasure, nu: &DiscreteMeasure, s: f64) -> f64 {
    assert_eq!(mu.dim(), nu.dim(), "dimension mismatch");
    assert!(s > 0.0, "radius must be positive");
    let atoms = net_atoms(mu, nu, s);
    let forward = transport_cost(&atoms, s, 1.0);
    let backward = transport_cost(&atoms, s, -1.0);
    forward.max(backward)
}

/// `F_{B(x, r)}(mu, nu)`.
pub fn f_dist_ball(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ball: &Ball) -> f64 {
    let a = mu.rescale(&ball.center, ball.radius).expect("ball radius is positive");
    let b = nu.rescale(&ball.center, ball.radius).expect("ball radius is positive");
    ball.radius * f_dist(&a, &b, 1.0)
}

/// Signed net weights `mu - nu` on the distinct atoms strictly inside the ball.
fn net_atoms(mu: &DiscreteMeasure, nu: &DiscreteMeasure, s: f64) -> Vec<(Point, f64)> {
    let mut acc: BTreeMap<[u64; 3], (Point, f64)> = BTreeMap::new();
    let mut add = |p: &Point, w: f64| {
        if p.norm() < s && w != 0.0 {
            // +0.0 and -0.0 are the same location
            let key = p.0.map(|c| (c + 0.0).to_bits());
            acc.entry(key).or_insert((*p, 0.0)).1 += w;
        }
    };
    for (p, w) in mu.iter() {
        add(p, w);
    }
    for (p, w) in nu.iter() {
        add(p, -w);
    }
    acc.into_values().filter(|(_, c)| *c != 0.0).collect()
}

/// Minimum transport cost of the positive part of `sign * c`.
fn transport_cost(atoms: &[(Point, f64)], s: f64, sign: f64) -> f64 {
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for (p, c) in atoms {
        let c = sign * c;
        if c > 0.0 {
            sources.push((*p, c));
        } else if c < 0.0 {
            sinks.push((*p, -c));
        }
    }
    if sources.is_empty() {
        return 0.0;
    }
    Transport::new(&sources, &sinks, s).solve()
}

struct Transport {
    np: usize,
    /// Number of sink columns including the exit column at index `nq - 1`.
    nq: usize,
    /// Row-major `np x nq` cost matrix.
    cost: Vec<f64>,
    /// Per row, the columns worth shipping to: a sink farther away than the
    /// sphere is never used in an optimal plan, since exiting is cheaper and
    /// the freed sink capacity costs nothing.
    arcs: Vec<Vec<usize>>,
    flow: Vec<f64>,
    /// Per column, rows currently shipping to it.
    users: Vec<Vec<usize>>,
    supply: Vec<f64>,
    capacity: Vec<f64>,
}

#[derive(PartialEq)]
struct Label(f64, usize);

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Label {
    // reversed for a min-heap
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl Transport {
    fn new(sources: &[(Point, f64)], sinks: &[(Point, f64)], s: f64) -> Self {
        let np = sources.len();
        let nq = sinks.len() + 1;
        let mut cost = Vec::with_capacity(np * nq);
        let mut arcs = Vec::with_capacity(np);
        for (p, _) in sources {
            let exit = (s - p.norm()).max(0.0);
            let mut row = Vec::new();
            for (j, (q, _)) in sinks.iter().enumerate() {
                let d = p.dist(q);
                if d < exit {
                    row.push(j);
                }
                cost.push(d);
            }
            row.push(nq - 1);
            cost.push(exit);
            arcs.push(row);
        }
        let mut capacity: Vec<f64> = sinks.iter().map(|(_, w)| *w).collect();
        capacity.push(f64::INFINITY);
        Transport {
            np,
            nq,
            cost,
            arcs,
            flow: vec![0.0; np * nq],
            users: vec![Vec::new(); nq],
            supply: sources.iter().map(|(_, w)| *w).collect(),
            capacity,
        }
    }

    fn solve(mut self) -> f64 {
        let total: f64 = self.supply.iter().sum();
        let tiny = total * 1e-15;
        let (np, nq) = (self.np, self.nq);
        // rows, then columns, then the super sink
        let n = np + nq + 1;
        let sink = n - 1;
        // Potentials start at the true shortest distances from a virtual
        // source feeding every row, so all reduced costs are nonnegative.
        let mut phi = vec![0.0; n];
        for v in &mut phi[np..] {
            *v = f64::INFINITY;
        }
        for i in 0..np {
            for &j in &self.arcs[i] {
                let c = self.cost[i * nq + j];
                if c < phi[np + j] {
                    phi[np + j] = c;
                }
            }
        }
        for j in 0..nq {
            // a column no row ships to keeps a finite placeholder potential
            if phi[np + j].is_infinite() {
                phi[np + j] = 0.0;
            }
        }
        phi[sink] = phi[np..np + nq].iter().copied().fold(f64::INFINITY, f64::min);
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut heap = std::collections::BinaryHeap::new();

        while self.supply.iter().any(|&x| x > tiny) {
            for &v in &touched {
                dist[v] = f64::INFINITY;
                prev[v] = usize::MAX;
                done[v] = false;
            }
            touched.clear();
            heap.clear();
            for i in 0..np {
                if self.supply[i] > tiny {
                    // the virtual source arc has cost 0 and reduced cost -phi
                    dist[i] = -phi[i];
                    touched.push(i);
                    heap.push(Label(dist[i], i));
                }
            }
            while let Some(Label(d, u)) = heap.pop() {
                if done[u] || d > dist[u] {
                    continue;
                }
                done[u] = true;
                if u == sink {
                    break;
                }
                let mut relax = |v: usize, nd: f64, dist: &mut Vec<f64>, heap: &mut std::collections::BinaryHeap<Label>| {
                    if nd < dist[v] {
                        if dist[v].is_infinite() {
                            touched.push(v);
                        }
                        dist[v] = nd;
                        prev[v] = u;
                        heap.push(Label(nd, v));
                    }
                };
                if u < np {
                    let row = u * nq;
                    for &j in &self.arcs[u] {
                        let v = np + j;
                        if !done[v] {
                            let nd = d + self.cost[row + j] + phi[u] - phi[v];
                            relax(v, nd, &mut dist, &mut heap);
                        }
                    }
                } else {
                    let j = u - np;
                    if self.capacity[j] > tiny {
                        relax(sink, d + phi[u] - phi[sink], &mut dist, &mut heap);
                    }
                    for &i in &self.users[j] {
                        if !done[i] {
                            let nd = d - self.cost[i * nq + j] + phi[u] - phi[i];
                            relax(i, nd, &mut dist, &mut heap);
                        }
                    }
                }
            }
            // the exit column always has room, so the sink is reachable
            assert!(done[sink], "transport residual graph disconnected");
            let cap_d = dist[sink];
            for v in 0..n {
                phi[v] += dist[v].min(cap_d);
            }
            let target = prev[sink];

            // bottleneck along the path
            let mut delta = self.capacity[target - np];
            let mut v = target;
            loop {
                let u = prev[v];
                if u == usize::MAX {
                    delta = delta.min(self.supply[v]);
                    break;
                }
                if v < np {
                    delta = delta.min(self.flow[v * nq + (u - np)]);
                }
                v = u;
            }
            let mut v = target;
            loop {
                let u = prev[v];
                if u == usize::MAX {
                    self.supply[v] -= delta;
                    break;
                }
                if v >= np {
                    let j = v - np;
                    let f = &mut self.flow[u * nq + j];
                    if *f <= tiny {
                        self.users[j].push(u);
                    }
                    *f += delta;
                } else {
                    let j = u - np;
                    let f = &mut self.flow[v * nq + j];
                    *f -= delta;
                    if *f <= tiny {
                        self.users[j].retain(|&i| i != v);
                    }
                }
                v = u;
            }
            if self.capacity[target - np].is_finite() {
                self.capacity[target - np] -= delta;
            }
        }
        self.flow
            .iter()
            .zip(&self.cost)
            .filter(|(f, _)| **f > 0.0)
            .map(|(f, c)| f * c)
            .sum()
    }
}
