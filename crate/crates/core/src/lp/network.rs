//! Primal network simplex for uncapacitated min-cost flow.
//!
//! The spanning tree is stored with parent/thread/successor-count arrays and
//! started from an artificial root joined to every node. Entering arcs are
//! chosen by block search. With integral supplies and costs every flow and
//! potential stays an exactly representable integer.

use super::{LpError, LpStatus};

const NONE: usize = usize::MAX;
const UP: i8 = 1;
const DOWN: i8 = -1;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;

/// An uncapacitated min-cost flow instance. Positive supply marks a source,
/// negative a sink; supplies must balance.
#[derive(Clone, Debug, Default)]
pub struct MinCostFlow {
    supply: Vec<f64>,
    source: Vec<u32>,
    target: Vec<u32>,
    cost: Vec<f64>,
    block_factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    pub status: LpStatus,
    /// Total cost `Σ cost_e · flow_e`.
    pub cost: f64,
    /// Flow per arc, in insertion order.
    pub flow: Vec<f64>,
    /// Node potentials with `cost_e + potential[s] - potential[t] >= 0` on
    /// every arc, with equality on arcs carrying flow.
    pub potential: Vec<f64>,
    pub pivots: usize,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self { supply: vec![0.0; nodes], ..Self::default() }
    }

    pub fn with_capacity(nodes: usize, arcs: usize) -> Self {
        Self {
            supply: vec![0.0; nodes],
            source: Vec::with_capacity(arcs),
            target: Vec::with_capacity(arcs),
            cost: Vec::with_capacity(arcs),
            block_factor: None,
        }
    }

    /// Scales the pivot search block, `factor * sqrt(arcs)` (default 1).
    /// Sparse graphs with many nodes favour small blocks.
    pub fn set_block_factor(&mut self, factor: f64) {
        assert!(factor > 0.0 && factor.is_finite());
        self.block_factor = Some(factor);
    }

    pub fn node_count(&self) -> usize {
        self.supply.len()
    }

    pub fn arc_count(&self) -> usize {
        self.cost.len()
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cost: f64) -> usize {
        assert!(from < self.node_count() && to < self.node_count(), "arc endpoint out of range");
        self.source.push(from as u32);
        self.target.push(to as u32);
        self.cost.push(cost);
        self.cost.len() - 1
    }

    pub fn set_supply(&mut self, node: usize, value: f64) {
        self.supply[node] = value;
    }

    pub fn add_supply(&mut self, node: usize, value: f64) {
        self.supply[node] += value;
    }

    pub fn supply(&self, node: usize) -> f64 {
        self.supply[node]
    }

    pub fn solve(&self) -> Result<FlowSolution, LpError> {
        self.validate()?;
        Solver::new(self).run()
    }

    /// Solves starting from the spanning tree described by `hint` rather
    /// than the artificial star. Falls back to the artificial start when the
    /// hint cannot be oriented into a strongly feasible tree.
    pub fn solve_with_hint(&self, hint: &TreeHint) -> Result<FlowSolution, LpError> {
        self.validate()?;
        let mut s = Solver::new(self);
        if s.install_tree(self, hint)? {
            s.run()
        } else {
            Solver::new(self).run()
        }
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.node_count() >= u32::MAX as usize {
            return Err(LpError::Malformed("too many nodes".into()));
        }
        if let Some(e) = self.cost.iter().position(|c| !c.is_finite()) {
            return Err(LpError::Malformed(format!("arc {e} has a non-finite cost")));
        }
        if let Some(u) = self.supply.iter().position(|s| !s.is_finite()) {
            return Err(LpError::Malformed(format!("node {u} has a non-finite supply")));
        }
        Ok(())
    }
}

/// The two arcs joining a node to its parent in a spanning-tree hint. At
/// least the one matching the sign of the subtree's net supply must exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeLink {
    pub parent: usize,
    /// Arc `node -> parent`.
    pub up: Option<usize>,
    /// Arc `parent -> node`.
    pub down: Option<usize>,
}

/// A spanning tree of the flow network: `links[u]` is `None` only for `root`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeHint {
    pub root: usize,
    pub links: Vec<Option<TreeLink>>,
}

struct Solver {
    node_num: usize,
    arc_num: usize,
    root: usize,
    source: Vec<u32>,
    target: Vec<u32>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,
    block_size: usize,
    next_arc: usize,
    eps: f64,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
    scale: f64,
    art_cost: f64,
}

impl Solver {
    fn new(p: &MinCostFlow) -> Self {
        let node_num = p.node_count();
        let arc_num = p.arc_count();
        let all = arc_num + node_num;
        let root = node_num;

        let mut source = Vec::with_capacity(all);
        let mut target = Vec::with_capacity(all);
        let mut cost = Vec::with_capacity(all);
        source.extend_from_slice(&p.source);
        target.extend_from_slice(&p.target);
        cost.extend_from_slice(&p.cost);
        let mut flow = vec![0.0; all];
        let mut state = vec![STATE_LOWER; all];

        let max_cost = p.cost.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
        let art_cost = (max_cost + 1.0) * node_num as f64;

        let mut pi = vec![0.0; node_num + 1];
        let mut parent = vec![NONE; node_num + 1];
        let mut pred = vec![NONE; node_num + 1];
        let mut pred_dir = vec![UP; node_num + 1];
        let mut thread = vec![0; node_num + 1];
        let mut rev_thread = vec![0; node_num + 1];
        let mut succ_num = vec![1; node_num + 1];
        let mut last_succ = vec![0; node_num + 1];

        for u in 0..node_num {
            let e = arc_num + u;
            parent[u] = root;
            pred[u] = e;
            thread[u] = u + 1;
            rev_thread[u + 1] = u;
            last_succ[u] = u;
            state[e] = STATE_TREE;
            let s = p.supply[u];
            if s >= 0.0 {
                pred_dir[u] = UP;
                source.push(u as u32);
                target.push(root as u32);
                flow[e] = s;
                cost.push(0.0);
            } else {
                pred_dir[u] = DOWN;
                pi[u] = art_cost;
                source.push(root as u32);
                target.push(u as u32);
                flow[e] = -s;
                cost.push(art_cost);
            }
        }
        thread[root] = 0;
        rev_thread[0] = root;
        succ_num[root] = node_num + 1;
        last_succ[root] = if node_num == 0 { root } else { root - 1 };

        let factor = p.block_factor.unwrap_or(1.0);
        let block_size = (((arc_num as f64).sqrt() * factor).ceil() as usize).max(10);
        let scale = p.supply.iter().map(|s| s.abs()).sum::<f64>().max(1.0);
        Self {
            node_num,
            arc_num,
            root,
            source,
            target,
            cost,
            flow,
            state,
            pi,
            parent,
            pred,
            pred_dir,
            thread,
            rev_thread,
            succ_num,
            last_succ,
            dirty_revs: Vec::new(),
            block_size,
            next_arc: 0,
            eps: 1e-12 * (max_cost + 1.0),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
            scale,
            art_cost,
        }
    }

    /// Replaces the artificial star by the hinted tree. Returns `false` if
    /// some tree edge lacks the arc its flow direction needs.
    fn install_tree(&mut self, p: &MinCostFlow, hint: &TreeHint) -> Result<bool, LpError> {
        let n = self.node_num;
        let bad = |msg: String| Err(LpError::Malformed(msg));
        if hint.links.len() != n || hint.root >= n || hint.links[hint.root].is_some() {
            return bad("tree hint does not match the network".into());
        }
        // Children lists in CSR form.
        let mut degree = vec![0usize; n + 1];
        for (u, l) in hint.links.iter().enumerate() {
            match l {
                Some(l) if l.parent < n && l.parent != u => degree[l.parent + 1] += 1,
                None if u == hint.root => {}
                _ => return bad(format!("tree hint has an invalid link at node {u}")),
            }
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let mut fill = degree.clone();
        let mut children = vec![0usize; n.saturating_sub(1)];
        for (u, l) in hint.links.iter().enumerate() {
            if let Some(l) = l {
                for (arc, from, to) in [(l.up, u, l.parent), (l.down, l.parent, u)] {
                    if let Some(e) = arc {
                        if e >= self.arc_num || self.source[e] as usize != from || self.target[e] as usize != to {
                            return bad(format!("tree hint arc {e} does not join {from} to {to}"));
                        }
                    }
                }
                children[fill[l.parent]] = u;
                fill[l.parent] += 1;
            }
        }
        // Preorder from the hint root; a cycle or a detached part leaves nodes unvisited.
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![hint.root];
        while let Some(u) = stack.pop() {
            order.push(u);
            stack.extend(children[degree[u]..degree[u + 1]].iter().rev());
            if order.len() > n {
                break;
            }
        }
        if order.len() != n {
            return bad("tree hint is not a spanning tree".into());
        }
        let mut sub = p.supply.clone();
        for &u in order.iter().rev() {
            if let Some(l) = hint.links[u] {
                sub[l.parent] += sub[u];
            }
        }
        let mut choice = vec![(NONE, UP); n];
        for &u in &order[1..] {
            let l = hint.links[u].expect("non-root");
            let pick = if sub[u] > 0.0 {
                l.up.map(|e| (e, UP))
            } else if sub[u] < 0.0 {
                l.down.map(|e| (e, DOWN))
            } else {
                l.up.map(|e| (e, UP))
            };
            match pick {
                Some(c) => choice[u] = c,
                None => return Ok(false),
            }
        }

        // Detach every node from the artificial root, then hang the hint root there.
        for u in 0..n {
            self.state[self.arc_num + u] = STATE_LOWER;
            self.flow[self.arc_num + u] = 0.0;
        }
        let root = self.root;
        let r = hint.root;
        let er = self.arc_num + r;
        let total = sub[r];
        self.state[er] = STATE_TREE;
        self.parent[r] = root;
        self.pred[r] = er;
        if total >= 0.0 {
            self.source[er] = r as u32;
            self.target[er] = root as u32;
            self.cost[er] = 0.0;
            self.pred_dir[r] = UP;
            self.flow[er] = total;
            self.pi[r] = 0.0;
        } else {
            self.source[er] = root as u32;
            self.target[er] = r as u32;
            self.cost[er] = self.art_cost;
            self.pred_dir[r] = DOWN;
            self.flow[er] = -total;
            self.pi[r] = self.art_cost;
        }
        for &u in &order[1..] {
            let (e, dir) = choice[u];
            let parent = hint.links[u].expect("non-root").parent;
            self.parent[u] = parent;
            self.pred[u] = e;
            self.pred_dir[u] = dir;
            self.state[e] = STATE_TREE;
            self.flow[e] = sub[u].abs();
            self.pi[u] = self.pi[parent] - dir as f64 * self.cost[e];
        }
        // Thread = preorder, with the artificial root first.
        let mut prev = root;
        for &u in &order {
            self.thread[prev] = u;
            self.rev_thread[u] = prev;
            prev = u;
        }
        self.thread[prev] = root;
        self.rev_thread[root] = prev;
        for u in 0..n {
            self.succ_num[u] = 1;
        }
        for &u in order.iter().rev() {
            let par = self.parent[u];
            if par != root {
                self.succ_num[par] += self.succ_num[u];
            }
        }
        self.succ_num[root] = n + 1;
        let mut pos = vec![0usize; n];
        for (i, &u) in order.iter().enumerate() {
            pos[u] = i;
        }
        for &u in &order {
            self.last_succ[u] = order[pos[u] + self.succ_num[u] - 1];
        }
        self.last_succ[root] = order[n - 1];
        #[cfg(test)]
        self.check_tree();
        Ok(true)
    }

    #[inline]
    fn reduced_cost(&self, e: usize) -> f64 {
        self.cost[e] + self.pi[self.source[e] as usize] - self.pi[self.target[e] as usize]
    }

    fn find_entering_arc(&mut self) -> bool {
        let mut min = -self.eps;
        let mut found = false;
        let mut cnt = self.block_size;
        let m = self.arc_num;
        let mut e = self.next_arc;
        for _ in 0..m {
            if self.state[e] == STATE_LOWER {
                let c = self.reduced_cost(e);
                if c < min {
                    min = c;
                    self.in_arc = e;
                    found = true;
                }
            }
            e += 1;
            if e == m {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found {
                    self.next_arc = e;
                    return true;
                }
                cnt = self.block_size;
            }
        }
        if found {
            self.next_arc = e;
        }
        found
    }

    fn find_join_node(&mut self) {
        let mut u = self.source[self.in_arc] as usize;
        let mut v = self.target[self.in_arc] as usize;
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let first = self.source[self.in_arc] as usize;
        let second = self.target[self.in_arc] as usize;
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == UP {
                let d = self.flow[self.pred[u]];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == DOWN {
                let d = self.flow[self.pred[u]];
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0.0 {
            self.flow[self.in_arc] += val;
            let mut u = self.source[self.in_arc] as usize;
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            let mut u = self.target[self.in_arc] as usize;
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.state[out] = STATE_LOWER;
        self.flow[out] = 0.0;
    }

    fn update_tree_structure(&mut self) {
        let (u_in, v_in, u_out, join) = (self.u_in, self.v_in, self.u_out, self.join);
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];
        let in_dir = if u_in == self.source[self.in_arc] as usize { UP } else { DOWN };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue =
                if old_rev_thread == v_in { self.thread[old_last_succ] } else { self.thread[v_in] };

            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let (u_in, v_in) = (self.u_in, self.v_in);
        let c = self.cost[self.in_arc];
        let sigma = self.pi[v_in] - self.pi[u_in] - self.pred_dir[u_in] as f64 * c;
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn pivot_limit(&self) -> usize {
        // Generous: degenerate pivots aside, network simplex typically needs
        // a small multiple of the node count.
        200 * (self.node_num + self.arc_num) + 10_000
    }

    fn run(&mut self) -> Result<FlowSolution, LpError> {
        let limit = self.pivot_limit();
        let mut pivots = 0usize;
        while self.find_entering_arc() {
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Ok(self.finish(LpStatus::Unbounded, pivots));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            pivots += 1;
            #[cfg(test)]
            if self.node_num <= 64 {
                self.check_tree();
            }
            if pivots >= limit {
                let mut basis: Vec<usize> = (0..self.node_num).map(|u| self.pred[u]).collect();
                basis.sort_unstable();
                return Err(LpError::IterationLimit { limit, iterations: pivots, basis });
            }
        }
        let tol = 1e-9 * self.scale;
        let infeasible = (self.arc_num..self.arc_num + self.node_num).any(|e| self.flow[e] > tol);
        let status = if infeasible { LpStatus::Infeasible } else { LpStatus::Optimal };
        Ok(self.finish(status, pivots))
    }

    fn finish(&self, status: LpStatus, pivots: usize) -> FlowSolution {
        let flow = self.flow[..self.arc_num].to_vec();
        let cost = flow.iter().zip(&self.cost).map(|(f, c)| f * c).sum();
        FlowSolution { status, cost, flow, potential: self.pi[..self.node_num].to_vec(), pivots }
    }

    /// Verifies every tree invariant; used after each pivot in tests.
    #[cfg(test)]
    fn check_tree(&self) {
        let n = self.node_num + 1;
        // Thread is a single cycle visiting every node in preorder.
        let mut order = Vec::with_capacity(n);
        let mut u = self.root;
        for _ in 0..n {
            order.push(u);
            assert_eq!(self.rev_thread[self.thread[u]], u);
            u = self.thread[u];
        }
        assert_eq!(u, self.root);
        let mut pos = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let mut sizes = vec![1usize; n];
        for &v in order.iter().rev() {
            if self.parent[v] != NONE {
                sizes[self.parent[v]] += sizes[v];
            }
        }
        for v in 0..n {
            assert_eq!(self.succ_num[v], sizes[v], "succ_num of {v}");
            assert_eq!(self.last_succ[v], order[pos[v] + sizes[v] - 1], "last_succ of {v}");
            if v != self.root {
                let p = self.parent[v];
                assert!(pos[p] < pos[v] && pos[v] < pos[p] + sizes[p]);
                let e = self.pred[v];
                assert_eq!(self.state[e], STATE_TREE);
                let (s, t) = (self.source[e] as usize, self.target[e] as usize);
                if self.pred_dir[v] == UP {
                    assert_eq!((s, t), (v, p));
                } else {
                    assert_eq!((s, t), (p, v));
                }
                assert!(self.reduced_cost(e).abs() <= 1e-9 * (1.0 + self.pi[v].abs()));
                assert!(self.flow[e] >= -1e-9);
            }
        }
    }
}
