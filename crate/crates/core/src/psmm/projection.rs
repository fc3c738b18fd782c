use crate::dataset::linf;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::lp::{LinearProgram, LpError, LpStatus, Relation, TreeLink};
use crate::metrics::{DiscreteSignedMeasure, Route, LATTICE_NODE_LIMIT};

use super::grid::CellGrid;

/// Grids up to this many cells are projected with the dense simplex.
const DENSE_PROJECTION_CELLS: usize = 24;

/// Closest probability measure on the anchors, with the optimal value.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub tau: DiscreteSignedMeasure,
    /// Optimum of the transport program: `d_BL(ν, τ) + ν(Ω) − 1`.
    pub objective: f64,
    nu_mass: f64,
}

impl Projection {
    /// `d_BL(ν, τ)` recovered from the optimum.
    pub fn distance(&self) -> f64 {
        (self.objective - self.nu_mass + 1.0).max(0.0)
    }
}

/// Probability measure on the grid anchors closest to `ν` in `d_BL`.
pub fn project_to_probability(nu: &DiscreteSignedMeasure, grid: &CellGrid) -> Result<Projection> {
    project_with(nu, grid, Route::Auto)
}

/// Minimises `Σ c_ij f_ij + 2 Σ v_i` over flows `f` between anchors, slacks
/// `v` and probability vectors `τ` subject to
/// `out_i(f) − in_i(f) + v_i + τ_i >= ν_i`.
pub fn project_with(nu: &DiscreteSignedMeasure, grid: &CellGrid, route: Route) -> Result<Projection> {
    if nu.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), found: nu.dim() });
    }
    let m = grid.cells();
    let mut w = vec![0.0; m];
    for (y, &v) in nu.support().points().zip(nu.weights()) {
        w[grid.anchor_cell(y)?] = v;
    }
    let dense = match route {
        Route::Auto => m <= DENSE_PROJECTION_CELLS,
        Route::Dense => true,
        Route::Network => false,
    };
    let (tau, objective) = if dense { dense_projection(grid, &w)? } else { flow_projection(grid, &w)? };
    Ok(Projection {
        tau: DiscreteSignedMeasure::new(grid.anchors(), tau)?,
        objective,
        nu_mass: w.iter().sum(),
    })
}

fn dense_projection(grid: &CellGrid, w: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = w.len();
    let anchors = grid.anchors();
    // Columns: τ_0..τ_m, v_0..v_m, then f_ij for ordered pairs i != j.
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut cost = vec![0.0; 2 * m + pairs.len()];
    cost[m..2 * m].fill(2.0);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        cost[2 * m + k] = linf(anchors.point(i), anchors.point(j));
    }
    let mut lp = LinearProgram::minimize(cost);
    let mut rows: Vec<Vec<(usize, f64)>> = (0..m).map(|i| vec![(i, 1.0), (m + i, 1.0)]).collect();
    for (k, &(i, j)) in pairs.iter().enumerate() {
        rows[i].push((2 * m + k, 1.0));
        rows[j].push((2 * m + k, -1.0));
    }
    for (row, &v) in rows.into_iter().zip(w) {
        lp.add_constraint(row, Relation::Ge, v);
    }
    lp.add_constraint((0..m).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);
    let s = lp.solve()?.into_optimal()?;
    Ok((s.x[..m].iter().map(|t| t.max(0.0)).collect(), s.objective))
}

/// The same program as a flow on the king graph of the anchors: moving mass
/// one king step costs `1/k`, a sink `T` absorbs the unit of `τ`, and a
/// reservoir `Z` takes excess at cost 2 and supplies deficit for free.
fn flow_projection(grid: &CellGrid, w: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = w.len();
    let k = grid.side();
    let lattice = Lattice::new(grid.dim(), k, LATTICE_NODE_LIMIT)?;
    let (mut g, mut hint) = lattice.king_graph_with_hint(2);
    let (t, z) = (m, m + 1);
    let mut to_t = Vec::with_capacity(m);
    let mut to_z = Vec::with_capacity(m);
    let mut from_z = Vec::with_capacity(m);
    for (i, &v) in w.iter().enumerate() {
        g.set_supply(i, v);
        to_t.push(g.add_arc(i, t, 0.0));
        to_z.push(g.add_arc(i, z, 2.0 * k as f64));
        from_z.push(g.add_arc(z, i, 0.0));
    }
    g.set_supply(t, -1.0);
    g.set_supply(z, 1.0 - w.iter().sum::<f64>());
    let r = hint.root;
    hint.links[t] = Some(TreeLink { parent: r, up: None, down: Some(to_t[r]) });
    hint.links[z] = Some(TreeLink { parent: r, up: Some(from_z[r]), down: Some(to_z[r]) });
    let s = g.solve_with_hint(&hint)?;
    if s.status != LpStatus::Optimal {
        return Err(LpError::NotOptimal(s.status).into());
    }
    Ok((to_t.iter().map(|&a| s.flow[a].max(0.0)).collect(), s.cost / k as f64))
}
