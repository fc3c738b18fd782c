use crate::dataset::linf;
use crate::error::{invalid, Error, Result};
use crate::lp::{LinearProgram, LpStatus, MinCostFlow, Relation};

use super::measure::DiscreteSignedMeasure;

/// Largest combined support accepted by [`w1_lp`] and [`d_bl`].
pub const SUPPORT_LIMIT: usize = 2000;

/// Above this many coupling variables the transport LP goes through the
/// network simplex instead of the dense tableau.
const DENSE_TRANSPORT_VARS: usize = 400;

/// Above this support size `d_bl` is solved through its flow dual.
const DENSE_DBL_SUPPORT: usize = 24;

/// Which solver evaluates a transport-type program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Route {
    #[default]
    Auto,
    /// Dense two-phase simplex on the program as stated.
    Dense,
    /// Network simplex on the equivalent flow problem.
    Network,
}

/// Exact W1 between probability measures on `[0,1]` from the integral of
/// the absolute CDF difference.
pub fn w1_1d(mu: &DiscreteSignedMeasure, nu: &DiscreteSignedMeasure) -> Result<f64> {
    for m in [mu, nu] {
        if m.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: m.dim() });
        }
        m.check_probability()?;
    }
    let mut events: Vec<(f64, f64)> = mu
        .support()
        .as_flat()
        .iter()
        .zip(mu.weights())
        .map(|(&x, &w)| (x, w))
        .chain(nu.support().as_flat().iter().zip(nu.weights()).map(|(&x, &w)| (x, -w)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cdf = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        cdf += pair[0].1;
        total += cdf.abs() * (pair[1].0 - pair[0].0);
    }
    Ok(total)
}

fn check_pair(mu: &DiscreteSignedMeasure, nu: &DiscreteSignedMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let size = mu.len() + nu.len();
    if size > SUPPORT_LIMIT {
        return Err(Error::SupportTooLarge { size, limit: SUPPORT_LIMIT });
    }
    Ok(())
}

/// Exact W1 under the ℓ∞ ground metric, by optimal transport.
pub fn w1_lp(mu: &DiscreteSignedMeasure, nu: &DiscreteSignedMeasure) -> Result<f64> {
    w1_lp_with(mu, nu, Route::Auto)
}

pub fn w1_lp_with(mu: &DiscreteSignedMeasure, nu: &DiscreteSignedMeasure, route: Route) -> Result<f64> {
    check_pair(mu, nu)?;
    mu.check_probability()?;
    nu.check_probability()?;
    let (a, b) = (mu.len(), nu.len());
    let cost = |i: usize, j: usize| linf(mu.support().point(i), nu.support().point(j));
    let dense = match route {
        Route::Auto => a * b <= DENSE_TRANSPORT_VARS,
        Route::Dense => true,
        Route::Network => false,
    };
    if dense {
        let mut lp = LinearProgram::minimize((0..a * b).map(|k| cost(k / b, k % b)).collect());
        for (i, &w) in mu.weights().iter().enumerate() {
            lp.add_constraint((0..b).map(|j| (i * b + j, 1.0)).collect(), Relation::Eq, w.max(0.0));
        }
        for (j, &w) in nu.weights().iter().enumerate() {
            lp.add_constraint((0..a).map(|i| (i * b + j, 1.0)).collect(), Relation::Eq, w.max(0.0));
        }
        Ok(lp.solve()?.into_optimal()?.objective)
    } else {
        let mut g = MinCostFlow::with_capacity(a + b, a * b);
        for i in 0..a {
            g.set_supply(i, mu.weights()[i].max(0.0));
            for j in 0..b {
                g.add_arc(i, a + j, cost(i, j));
            }
        }
        for j in 0..b {
            g.set_supply(a + j, -nu.weights()[j].max(0.0));
        }
        let s = g.solve()?;
        match s.status {
            LpStatus::Optimal => Ok(s.cost),
            other => Err(crate::lp::LpError::NotOptimal(other).into()),
        }
    }
}

/// Bounded-Lipschitz distance on `[0,1]^d` (diameter 1): the supremum of
/// `∫f dμ − ∫f dν` over `f` with `|f| <= 1` and Lipschitz constant `<= 1`.
/// Both measures must live on the same support; see [`super::align`].
pub fn d_bl(mu: &DiscreteSignedMeasure, nu: &DiscreteSignedMeasure) -> Result<f64> {
    d_bl_with(mu, nu, Route::Auto)
}

pub fn d_bl_with(mu: &DiscreteSignedMeasure, nu: &DiscreteSignedMeasure, route: Route) -> Result<f64> {
    check_pair(mu, nu)?;
    let wn = mu.weights_on_support_of(nu)?;
    let w: Vec<f64> = mu.weights().iter().zip(&wn).map(|(a, b)| a - b).collect();
    d_bl_weights(mu.support(), &w, route)
}

/// `d_bl` for the signed weight vector `w = μ − ν` on `support`.
pub(crate) fn d_bl_weights(support: &crate::Dataset, w: &[f64], route: Route) -> Result<f64> {
    let m = w.len();
    if m != support.len() {
        return Err(invalid("weight vector does not match the support"));
    }
    let dense = match route {
        Route::Auto => m <= DENSE_DBL_SUPPORT,
        Route::Dense => true,
        Route::Network => false,
    };
    if dense {
        // Shift f = g - 1 so the variables are nonnegative: g in [0, 2].
        let mut lp = LinearProgram::maximize(w.to_vec());
        for i in 0..m {
            for j in (0..m).filter(|&j| j != i) {
                let c = linf(support.point(i), support.point(j));
                if c < 2.0 {
                    lp.add_constraint(vec![(i, 1.0), (j, -1.0)], Relation::Le, c);
                }
            }
            lp.add_constraint(vec![(i, 1.0)], Relation::Le, 2.0);
        }
        let s = lp.solve()?.into_optimal()?;
        Ok((s.objective - w.iter().sum::<f64>()).max(0.0))
    } else {
        // Dual: ship the signed mass along ℓ∞ arcs, or to/from a reservoir
        // at unit cost per unit of mass.
        let z = m;
        let mut g = MinCostFlow::with_capacity(m + 1, m * (m + 1));
        for i in 0..m {
            g.set_supply(i, w[i]);
            for j in (0..m).filter(|&j| j != i) {
                g.add_arc(i, j, linf(support.point(i), support.point(j)));
            }
            g.add_arc(i, z, 1.0);
            g.add_arc(z, i, 1.0);
        }
        g.set_supply(z, -w.iter().sum::<f64>());
        let s = g.solve()?;
        match s.status {
            LpStatus::Optimal => Ok(s.cost),
            other => Err(crate::lp::LpError::NotOptimal(other).into()),
        }
    }
}
