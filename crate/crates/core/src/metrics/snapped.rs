use std::collections::BTreeMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::lp::{LpError, LpStatus, MinCostFlow, TreeHint, TreeLink};

/// Largest lattice the king-graph route will build.
pub const LATTICE_NODE_LIMIT: u64 = 1 << 22;

/// Largest bipartite instance (in arcs) solved directly.
const BIPARTITE_ARC_LIMIT: usize = 1 << 24;

/// Nearest opposite-side neighbours seeding the pricing route.
const SEED_NEIGHBOURS: usize = 8;

/// Violated pairs added per source and round on the pricing route.
const PRICED_PER_SOURCE: usize = 8;

/// Largest pair count the pricing route scans; beyond it the king graph is cheaper.
const PRICING_PAIR_LIMIT: usize = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapRoute {
    /// Transport between the two aggregated supports.
    Bipartite,
    /// Flow over the king graph of the whole lattice.
    Lattice,
    /// Transport between the aggregated supports over a candidate arc set,
    /// grown until the duals price every omitted pair.
    Pricing,
}

/// W1 between two snapped empirical measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnappedDistance {
    pub value: f64,
    /// Certified bound on `|value - W1(data, synth)|`: the mean ℓ∞ snapping
    /// displacement of each dataset, summed. Never exceeds one lattice spacing.
    pub error_bound: f64,
    /// Lattice points per unit length; vertices sit at `i / lattice`.
    pub lattice: u64,
    pub route: SnapRoute,
}

/// Vertex lattice used for a snap depth: spacing `2^-ceil(depth/d)`, no
/// coarser than the depth-`depth` partition cells.
pub fn snap_lattice(dim: usize, snap_depth: u32) -> Result<u64> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let e = (snap_depth as usize).div_ceil(dim);
    if e > 40 {
        return Err(invalid(format!("snap depth {snap_depth} too fine for dimension {dim}")));
    }
    Ok(1u64 << e)
}

/// W1 after snapping both datasets to the vertex lattice of the given depth.
pub fn w1_grid_snapped(data: &Dataset, synth: &Dataset, snap_depth: u32) -> Result<SnappedDistance> {
    w1_lattice_snapped(data, synth, snap_lattice(data.dim(), snap_depth)?)
}

/// W1 after snapping both datasets to the nearest points of `{i/lattice}^d`.
pub fn w1_lattice_snapped(data: &Dataset, synth: &Dataset, lattice: u64) -> Result<SnappedDistance> {
    w1_lattice_snapped_with(data, synth, lattice, None)
}

/// As [`w1_lattice_snapped`], optionally forcing the solver route.
pub fn w1_lattice_snapped_with(data: &Dataset, synth: &Dataset, lattice: u64, route: Option<SnapRoute>) -> Result<SnappedDistance> {
    if data.dim() != synth.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), found: synth.dim() });
    }
    if data.is_empty() || synth.is_empty() {
        return Err(invalid("snapped W1 needs two nonempty datasets"));
    }
    if lattice == 0 {
        return Err(invalid("lattice resolution must be positive"));
    }
    data.check_unit_cube()?;
    synth.check_unit_cube()?;
    let dim = data.dim();
    let side = lattice + 1;
    // Vertex ids must fit in a machine word even if the lattice route is not taken.
    let grid = Lattice::new(dim, side, u64::MAX / side.max(2)).map_err(|_| Error::SupportTooLarge {
        size: usize::MAX,
        limit: LATTICE_NODE_LIMIT as usize,
    })?;

    let (count_a, shift_a) = snap(data, &grid, lattice);
    let (count_b, shift_b) = snap(synth, &grid, lattice);
    let error_bound = shift_a + shift_b;

    let (na, nb) = (data.len() as u64, synth.len() as u64);
    let units = na.lcm(&nb);
    let (ua, ub) = ((units / na) as i64, (units / nb) as i64);
    let mut net: BTreeMap<usize, i64> = BTreeMap::new();
    for (&v, &c) in &count_a {
        *net.entry(v).or_default() += ua * c as i64;
    }
    for (&v, &c) in &count_b {
        *net.entry(v).or_default() -= ub * c as i64;
    }
    let sources: Vec<(usize, i64)> = net.iter().filter(|(_, &s)| s > 0).map(|(&v, &s)| (v, s)).collect();
    let sinks: Vec<(usize, i64)> = net.iter().filter(|(_, &s)| s < 0).map(|(&v, &s)| (v, s)).collect();

    let pairs = sources.len() * sinks.len();
    let route = route.unwrap_or(if pairs <= BIPARTITE_ARC_LIMIT && (pairs as f64) <= king_arcs(&grid) {
        SnapRoute::Bipartite
    } else if pairs <= PRICING_PAIR_LIMIT {
        SnapRoute::Pricing
    } else {
        SnapRoute::Lattice
    });
    let cost = if sources.is_empty() {
        0.0
    } else {
        match route {
            SnapRoute::Bipartite => {
                let mut g = MinCostFlow::with_capacity(sources.len() + sinks.len(), pairs);
                for (i, &(u, s)) in sources.iter().enumerate() {
                    g.set_supply(i, s as f64);
                    for (j, &(v, _)) in sinks.iter().enumerate() {
                        g.add_arc(i, sources.len() + j, grid.steps(u, v) as f64);
                    }
                }
                for (j, &(_, s)) in sinks.iter().enumerate() {
                    g.set_supply(sources.len() + j, s as f64);
                }
                solve(&g)?
            }
            SnapRoute::Lattice => {
                let nodes = grid.nodes() as u64;
                if nodes > LATTICE_NODE_LIMIT {
                    return Err(Error::SupportTooLarge { size: nodes as usize, limit: LATTICE_NODE_LIMIT as usize });
                }
                let (mut g, hint) = grid.king_graph_with_hint(0);
                for (&v, &s) in &net {
                    g.set_supply(v, s as f64);
                }
                solve_hinted(&g, &hint)?
            }
            SnapRoute::Pricing => priced_transport(&grid, &sources, &sinks)?,
        }
    };
    Ok(SnappedDistance { value: cost / (lattice as f64 * units as f64), error_bound, lattice, route })
}

/// Arc count of the lattice's king graph.
fn king_arcs(grid: &Lattice) -> f64 {
    (grid.side as f64).powi(grid.dim as i32) * (3f64.powi(grid.dim as i32) - 1.0)
}

fn solve(g: &MinCostFlow) -> Result<f64> {
    let s = g.solve()?;
    match s.status {
        LpStatus::Optimal => Ok(s.cost),
        other => Err(LpError::NotOptimal(other).into()),
    }
}

fn solve_hinted(g: &MinCostFlow, hint: &TreeHint) -> Result<f64> {
    let s = g.solve_with_hint(hint)?;
    match s.status {
        LpStatus::Optimal => Ok(s.cost),
        other => Err(LpError::NotOptimal(other).into()),
    }
}

/// Exact transport between integer supplies on lattice vertices, costs in
/// lattice steps. The restricted problem starts from each point's nearest
/// opposite neighbours plus a hub reachable at the lattice diameter, which
/// keeps it feasible and never undercuts a direct pair. Pairs with negative
/// reduced cost are added until none remain.
fn priced_transport(grid: &Lattice, sources: &[(usize, i64)], sinks: &[(usize, i64)]) -> Result<f64> {
    let (ns, nt) = (sources.len(), sinks.len());
    let src = axis_coords(grid, sources);
    let snk = axis_coords(grid, sinks);
    let dist = |i: usize, j: usize| src.iter().zip(&snk).map(|(s, t)| (s[i] - t[j]).abs()).fold(0.0, f64::max);
    let mut row = vec![0f64; nt];
    let mut point = vec![0f64; grid.dim];
    let mut fill_row = |i: usize, row: &mut [f64]| {
        for (p, s) in point.iter_mut().zip(&src) {
            *p = s[i];
        }
        distance_row(row, &snk, &point);
    };

    let mut near_s: Vec<Vec<(f64, u32)>> = vec![Vec::with_capacity(SEED_NEIGHBOURS); nt];
    let mut cutoff = vec![f64::INFINITY; nt];
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut near_t: Vec<(f64, u32)> = Vec::with_capacity(SEED_NEIGHBOURS);
    for i in 0..ns {
        fill_row(i, &mut row);
        near_t.clear();
        for (j, &c) in row.iter().enumerate() {
            if near_t.len() < SEED_NEIGHBOURS || c < near_t[SEED_NEIGHBOURS - 1].0 {
                keep_smallest(&mut near_t, (c, j as u32), SEED_NEIGHBOURS);
            }
            if c < cutoff[j] {
                keep_smallest(&mut near_s[j], (c, i as u32), SEED_NEIGHBOURS);
                if near_s[j].len() == SEED_NEIGHBOURS {
                    cutoff[j] = near_s[j][SEED_NEIGHBOURS - 1].0;
                }
            }
        }
        pairs.extend(near_t.iter().map(|&(_, j)| (i as u32, j)));
    }
    for (j, near) in near_s.iter().enumerate() {
        pairs.extend(near.iter().map(|&(_, i)| (i, j as u32)));
    }
    pairs.sort_unstable();
    pairs.dedup();

    let hub = ns + nt;
    let diameter = (grid.side - 1) as f64;
    let mut violated = Vec::with_capacity(PRICED_PER_SOURCE);
    let mut hint: Option<TreeHint> = None;
    loop {
        let mut g = MinCostFlow::with_capacity(hub + 1, pairs.len() + hub);
        for (i, &(_, s)) in sources.iter().enumerate() {
            g.set_supply(i, s as f64);
            g.add_arc(i, hub, diameter);
        }
        for (j, &(_, s)) in sinks.iter().enumerate() {
            g.set_supply(ns + j, s as f64);
            g.add_arc(hub, ns + j, 0.0);
        }
        for &(i, j) in &pairs {
            g.add_arc(i as usize, ns + j as usize, dist(i as usize, j as usize) as f64);
        }
        let sol = match &hint {
            Some(h) => g.solve_with_hint(h)?,
            None => g.solve()?,
        };
        if sol.status != LpStatus::Optimal {
            return Err(LpError::NotOptimal(sol.status).into());
        }
        // Costs are integers, so potentials are exact integers too.
        let pi = &sol.potential;
        let pi_sink = &pi[ns..hub];
        let before = pairs.len();
        for i in 0..ns {
            fill_row(i, &mut row);
            violated.clear();
            for (j, (&c, &pj)) in row.iter().zip(pi_sink).enumerate() {
                let rc = c + pi[i] - pj;
                if rc < -0.5 {
                    keep_smallest(&mut violated, (rc, j as u32), PRICED_PER_SOURCE);
                }
            }
            pairs.extend(violated.iter().map(|&(_, j)| (i as u32, j)));
        }
        if pairs.len() == before {
            return Ok(sol.cost);
        }
        hint = Some(support_tree(ns, nt, &pairs[..before], &sol.flow));
    }
}

/// Spanning tree rooted at the hub that carries a basic optimal flow of the
/// pricing network, so the next round starts from that optimum. The flow's
/// support is a forest; each component hangs off the hub by an idle
/// source-to-hub arc, which keeps the tree strongly feasible.
fn support_tree(ns: usize, nt: usize, pairs: &[(u32, u32)], flow: &[f64]) -> TreeHint {
    let hub = ns + nt;
    // Arc order: source i -> hub is arc i, hub -> sink j is arc ns + j, pair k is arc hub + k.
    let ends = |e: usize| -> (usize, usize) {
        if e < ns {
            (e, hub)
        } else if e < hub {
            (hub, e)
        } else {
            let (i, j) = pairs[e - hub];
            (i as usize, ns + j as usize)
        }
    };
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); hub + 1];
    for (e, &f) in flow.iter().enumerate().take(hub + pairs.len()) {
        if f > 0.5 {
            let (a, b) = ends(e);
            adj[a].push(e);
            adj[b].push(e);
        }
    }
    let mut links: Vec<Option<TreeLink>> = vec![None; hub + 1];
    let mut seen = vec![false; hub + 1];
    let mut stack = Vec::new();
    let roots = std::iter::once(hub).chain(0..ns).chain(ns..hub);
    for r in roots {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if r < ns {
            links[r] = Some(TreeLink { parent: hub, up: Some(r), down: None });
        } else if r < hub {
            links[r] = Some(TreeLink { parent: hub, up: None, down: Some(r) });
        }
        stack.push(r);
        while let Some(u) = stack.pop() {
            for &e in &adj[u] {
                let (a, b) = ends(e);
                let v = if a == u { b } else { a };
                if !seen[v] {
                    seen[v] = true;
                    let (up, down) = if a == v { (Some(e), None) } else { (None, Some(e)) };
                    links[v] = Some(TreeLink { parent: u, up, down });
                    stack.push(v);
                }
            }
        }
    }
    TreeHint { root: hub, links }
}

/// Per-axis lattice coordinates of the given vertices.
fn axis_coords(grid: &Lattice, pts: &[(usize, i64)]) -> Vec<Vec<f64>> {
    let mut axes = vec![Vec::with_capacity(pts.len()); grid.dim];
    let mut c = vec![0u64; grid.dim];
    for &(v, _) in pts {
        grid.coords(v, &mut c);
        for (axis, &x) in axes.iter_mut().zip(&c) {
            axis.push(x as f64);
        }
    }
    axes
}

/// ℓ∞ steps from `point` to every vertex in `axes`.
fn distance_row(row: &mut [f64], axes: &[Vec<f64>], point: &[f64]) {
    row.fill(0.0);
    for (axis, &x) in axes.iter().zip(point) {
        for (r, &y) in row.iter_mut().zip(axis) {
            let v = (y - x).abs();
            *r = if v > *r { v } else { *r };
        }
    }
}

/// Inserts into an ascending list holding at most `k` entries.
fn keep_smallest<T: PartialOrd + Copy>(list: &mut Vec<T>, item: T, k: usize) {
    if list.len() == k {
        if list[k - 1] <= item {
            return;
        }
        list.pop();
    }
    let at = list.partition_point(|x| *x <= item);
    list.insert(at, item);
}

/// Vertex multiplicities and the mean ℓ∞ displacement.
fn snap(data: &Dataset, grid: &Lattice, lattice: u64) -> (BTreeMap<usize, u64>, f64) {
    let k = lattice as f64;
    let mut counts = BTreeMap::new();
    let mut coords = vec![0u64; data.dim()];
    let mut shift = 0.0;
    for p in data.points() {
        let mut worst: f64 = 0.0;
        for (c, &x) in coords.iter_mut().zip(p) {
            let i = (x * k).round().min(k) as u64;
            *c = i;
            worst = worst.max((x - i as f64 / k).abs());
        }
        shift += worst;
        *counts.entry(grid.id(&coords)).or_insert(0) += 1;
    }
    (counts, shift / data.len() as f64)
}
