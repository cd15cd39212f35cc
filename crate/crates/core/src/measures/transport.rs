//! Transportation simplex for balanced problems with integer masses.

use crate::error::{Error, Result};

/// Optimal flows of a balanced transportation problem.
#[derive(Clone, Debug)]
pub struct Solution {
    /// `(row, column, mass)` for every basic cell with positive mass.
    pub flows: Vec<(usize, usize, i64)>,
    /// `Σ mass · cost / Σ supply`.
    pub cost: f64,
}

#[derive(Clone, Copy, Debug)]
struct Basic {
    i: usize,
    j: usize,
    flow: i64,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// False if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

struct Tableau<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    basis: Vec<Basic>,
    /// Node → basis slots; rows are nodes `0..n`, columns `n..n+m`.
    adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Tableau<'a> {
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.m + j]
    }

    /// Least-cost starting basis, completed to a spanning tree with empty
    /// cells.
    fn initial(supply: &[i64], demand: &[i64], cost: &'a [f64]) -> Self {
        let (n, m) = (supply.len(), demand.len());
        let mut order: Vec<usize> = (0..n * m).collect();
        order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
        let (mut s, mut d) = (supply.to_vec(), demand.to_vec());
        let (mut row_done, mut col_done) = (vec![false; n], vec![false; m]);
        let mut uf = UnionFind::new(n + m);
        let mut basis = Vec::with_capacity(n + m - 1);
        for &idx in &order {
            if basis.len() == n + m - 1 {
                break;
            }
            let (i, j) = (idx / m, idx % m);
            if row_done[i] || col_done[j] {
                continue;
            }
            let f = s[i].min(d[j]);
            s[i] -= f;
            d[j] -= f;
            basis.push(Basic { i, j, flow: f });
            uf.union(i, n + j);
            if s[i] == 0 {
                row_done[i] = true;
            } else {
                col_done[j] = true;
            }
        }
        for &idx in &order {
            if basis.len() == n + m - 1 {
                break;
            }
            let (i, j) = (idx / m, idx % m);
            if uf.union(i, n + j) {
                basis.push(Basic { i, j, flow: 0 });
            }
        }
        let mut adj = vec![Vec::new(); n + m];
        for (slot, b) in basis.iter().enumerate() {
            adj[b.i].push(slot);
            adj[n + b.j].push(slot);
        }
        Self {
            n,
            m,
            cost,
            basis,
            adj,
            u: vec![0.0; n],
            v: vec![0.0; m],
        }
    }

    fn other_end(&self, slot: usize, node: usize) -> usize {
        let b = self.basis[slot];
        if node == b.i {
            self.n + b.j
        } else {
            b.i
        }
    }

    /// Duals with `u_i + v_j = c_ij` on the basis and `u_0 = 0`.
    fn potentials(&mut self) {
        let mut seen = vec![false; self.n + self.m];
        let mut stack = vec![0];
        seen[0] = true;
        self.u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for k in 0..self.adj[node].len() {
                let slot = self.adj[node][k];
                let next = self.other_end(slot, node);
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let b = self.basis[slot];
                if next >= self.n {
                    self.v[b.j] = self.c(b.i, b.j) - self.u[b.i];
                } else {
                    self.u[b.i] = self.c(b.i, b.j) - self.v[b.j];
                }
                stack.push(next);
            }
        }
    }

    /// Slots on the tree path from node `from` to node `to`, in order.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.n + self.m];
        let mut seen = vec![false; self.n + self.m];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(node) = stack.pop() {
            if node == to {
                break;
            }
            for &slot in &self.adj[node] {
                let next = self.other_end(slot, node);
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, slot));
                    stack.push(next);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = to;
        while node != from {
            let (prev, slot) = parent[node].expect("basis is a spanning tree");
            out.push(slot);
            node = prev;
        }
        out.reverse();
        out
    }

    /// Brings cell `(i, j)` into the basis.
    fn pivot(&mut self, i: usize, j: usize) {
        // cycle: (i, j) gains, then alternating loss/gain along the path from
        // column j back to row i
        let path = self.path(self.n + j, i);
        let theta = path
            .iter()
            .step_by(2)
            .map(|&s| self.basis[s].flow)
            .min()
            .expect("nonempty cycle");
        let leaving = *path
            .iter()
            .step_by(2)
            .find(|&&s| self.basis[s].flow == theta)
            .expect("minimum exists");
        for (k, &slot) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.basis[slot].flow -= theta;
            } else {
                self.basis[slot].flow += theta;
            }
        }
        let old = self.basis[leaving];
        self.adj[old.i].retain(|&s| s != leaving);
        self.adj[self.n + old.j].retain(|&s| s != leaving);
        self.basis[leaving] = Basic { i, j, flow: theta };
        self.adj[i].push(leaving);
        self.adj[self.n + j].push(leaving);
    }
}

/// Minimises `Σ x_ij c_ij` subject to row sums `supply` and column sums
/// `demand`. `cost` is row-major `supply.len() × demand.len()`.
pub fn solve(supply: &[i64], demand: &[i64], cost: &[f64]) -> Result<Solution> {
    let (n, m) = (supply.len(), demand.len());
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(
            "transport problem with an empty side".into(),
        ));
    }
    if cost.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            got: cost.len(),
        });
    }
    if supply.iter().chain(demand).any(|&x| x <= 0) {
        return Err(Error::InvalidParameter(
            "transport masses must be positive".into(),
        ));
    }
    let total: i64 = supply.iter().sum();
    if total != demand.iter().sum::<i64>() {
        return Err(Error::InvalidParameter(
            "unbalanced transport problem".into(),
        ));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("non-finite transport cost".into()));
    }

    let mut t = Tableau::initial(supply, demand, cost);
    let scale = cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    let eps = 1e-12 * scale;
    let cells = n * m;
    let block = (cells / 16).clamp(256.min(cells), cells);
    let max_pivots = 1000 * (n + m) + 10_000;
    let mut cursor = 0;
    let mut pivots = 0;
    loop {
        t.potentials();
        let mut best: Option<(f64, usize)> = None;
        let mut scanned = 0;
        while scanned < cells {
            let idx = cursor;
            cursor = (cursor + 1) % cells;
            scanned += 1;
            let (i, j) = (idx / m, idx % m);
            let rc = cost[idx] - t.u[i] - t.v[j];
            if rc < -eps && best.map_or(true, |(b, _)| rc < b) {
                best = Some((rc, idx));
            }
            if scanned % block == 0 && best.is_some() {
                break;
            }
        }
        let Some((_, idx)) = best else { break };
        if pivots == max_pivots {
            return Err(Error::SolverStalled(pivots));
        }
        t.pivot(idx / m, idx % m);
        pivots += 1;
    }

    let flows: Vec<(usize, usize, i64)> = t
        .basis
        .iter()
        .filter(|b| b.flow > 0)
        .map(|b| (b.i, b.j, b.flow))
        .collect();
    let cost_sum: f64 = flows
        .iter()
        .map(|&(i, j, f)| f as f64 * cost[i * m + j])
        .sum();
    Ok(Solution {
        flows,
        cost: cost_sum / total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum over every vertex of the transportation polytope: each spanning
    /// tree of cells with a nonnegative tree solution.
    pub(crate) fn brute_force(supply: &[i64], demand: &[i64], cost: &[f64]) -> f64 {
        let (n, m) = (supply.len(), demand.len());
        let k = n + m - 1;
        let mut best = f64::INFINITY;
        let mut chosen = Vec::with_capacity(k);
        fn rec(
            start: usize,
            k: usize,
            chosen: &mut Vec<usize>,
            best: &mut f64,
            supply: &[i64],
            demand: &[i64],
            cost: &[f64],
        ) {
            let (n, m) = (supply.len(), demand.len());
            if chosen.len() == k {
                if let Some(c) = tree_cost(chosen, supply, demand, cost) {
                    *best = best.min(c);
                }
                return;
            }
            for idx in start..n * m {
                chosen.push(idx);
                rec(idx + 1, k, chosen, best, supply, demand, cost);
                chosen.pop();
            }
        }
        fn tree_cost(cells: &[usize], supply: &[i64], demand: &[i64], cost: &[f64]) -> Option<f64> {
            let (n, m) = (supply.len(), demand.len());
            let mut uf = UnionFind::new(n + m);
            if !cells.iter().all(|&c| uf.union(c / m, n + c % m)) {
                return None;
            }
            // peel leaves
            let mut rem: Vec<i64> = supply.iter().chain(demand).copied().collect();
            let mut flow = vec![None; cells.len()];
            let mut left = cells.len();
            while left > 0 {
                let mut progressed = false;
                for node in 0..n + m {
                    let open: Vec<usize> = (0..cells.len())
                        .filter(|&e| {
                            flow[e].is_none() && (cells[e] / m == node || n + cells[e] % m == node)
                        })
                        .collect();
                    if open.len() == 1 {
                        let e = open[0];
                        let f = rem[node];
                        let (i, j) = (cells[e] / m, n + cells[e] % m);
                        rem[i] -= f;
                        rem[j] -= f;
                        flow[e] = Some(f);
                        left -= 1;
                        progressed = true;
                    }
                }
                if !progressed {
                    return None;
                }
            }
            if flow.iter().any(|f| f.unwrap() < 0) || rem.iter().any(|&r| r != 0) {
                return None;
            }
            let total: i64 = supply.iter().sum();
            Some(
                cells
                    .iter()
                    .zip(&flow)
                    .map(|(&c, f)| f.unwrap() as f64 * cost[c])
                    .sum::<f64>()
                    / total as f64,
            )
        }
        rec(0, k, &mut chosen, &mut best, supply, demand, cost);
        best
    }

    #[test]
    fn two_by_two_picks_cheaper_matching() {
        let s = solve(&[1, 1], &[1, 1], &[0.0, 1.0, 1.0, 0.5]).unwrap();
        assert_eq!(s.cost, 0.25);
        let s = solve(&[1, 1], &[1, 1], &[3.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(s.cost, 1.0);
    }

    #[test]
    fn unequal_masses() {
        // one source of mass 2 feeding two sinks
        let s = solve(&[2], &[1, 1], &[0.5, 1.5]).unwrap();
        assert_eq!(s.cost, 1.0);
        assert_eq!(s.flows.len(), 2);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(solve(&[1], &[2], &[0.0]).is_err());
        assert!(solve(&[1, 1], &[2], &[0.0]).is_err());
        assert!(solve(&[0, 2], &[2], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn larger_assignment_matches_permutation_search() {
        let n = 6;
        let cost: Vec<f64> = (0..n * n)
            .map(|k| ((k * 37 + 11) % 23) as f64 / 7.0)
            .collect();
        let s = solve(&vec![1; n], &vec![1; n], &cost).unwrap();
        let mut best = f64::INFINITY;
        let mut perm: Vec<usize> = (0..n).collect();
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
            best = best.min(c / n as f64);
        });
        assert!((s.cost - best).abs() < 1e-12);
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matches_vertex_enumeration(
            sup in prop::collection::vec(1i64..5, 1..=4),
            dem in prop::collection::vec(1i64..5, 1..=4),
            raw in prop::collection::vec(0u32..1000, 16),
        ) {
            let (ts, td): (i64, i64) = (sup.iter().sum(), dem.iter().sum());
            let supply: Vec<i64> = sup.iter().map(|s| s * td).collect();
            let demand: Vec<i64> = dem.iter().map(|d| d * ts).collect();
            let cost: Vec<f64> = raw[..supply.len() * demand.len()].iter().map(|&r| r as f64 / 997.0).collect();
            let s = solve(&supply, &demand, &cost).unwrap();
            let b = brute_force(&supply, &demand, &cost);
            prop_assert!((s.cost - b).abs() < 1e-9, "{} vs {}", s.cost, b);
            let mut rows = vec![0i64; supply.len()];
            let mut cols = vec![0i64; demand.len()];
            for &(i, j, f) in &s.flows {
                rows[i] += f;
                cols[j] += f;
            }
            prop_assert_eq!(rows, supply);
            prop_assert_eq!(cols, demand);
        }
    }
}
