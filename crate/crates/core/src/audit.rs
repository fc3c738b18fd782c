//! Exact privacy audit of the noisy-count release on tiny instances.
//!
//! Both mechanisms publish a count vector plus independent discrete Laplace
//! noise; everything after that is post-processing. For every pair of
//! datasets that differ by adding or removing one point, the audit takes the
//! largest log-ratio of output probabilities over every outcome in the
//! window. The ratio factorises over coordinates and the window is a box, so
//! the maximum over the box is the sum of per-coordinate maxima.

use serde::{Deserialize, Serialize};

use crate::dlaplace::DiscreteLaplace;
use crate::error::{invalid, Error, Result};
use crate::partition::BinaryPartition;
use crate::pmm::{true_counts, NoiseSchedule};
use crate::psmm::{build_grid, cell_counts};
use crate::Dataset;

/// Largest admissible one-sided tail mass beyond the window.
pub const TAIL_LIMIT: f64 = 1e-6;

/// Slack on `e^ε` allowed for floating-point evaluation.
pub const RATIO_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mechanism: String,
    pub epsilon: f64,
    pub window: i64,
    /// Ordered pairs of adjacent datasets examined.
    pub pairs: usize,
    /// Noise coordinates in the released vector.
    pub coordinates: usize,
    pub max_log_ratio: f64,
    /// Count vectors of the worst ordered pair.
    pub worst_pair: (Vec<i64>, Vec<i64>),
    /// Largest one-sided tail mass outside the window over coordinates.
    pub tail_mass: f64,
    pub passed: bool,
}

/// Smallest window whose one-sided tail is within [`TAIL_LIMIT`] for `sigma`.
pub fn required_window(sigma: f64) -> Result<i64> {
    let dist = DiscreteLaplace::new(sigma)?;
    // tail(w) = p^(w+1)/(1+p), solved for w and then nudged.
    let mut w = ((TAIL_LIMIT * (1.0 + dist.p())).ln() / dist.p().ln()).ceil() as i64 - 1;
    w = w.max(0);
    while w > 0 && dist.tail(w - 1) <= TAIL_LIMIT {
        w -= 1;
    }
    while dist.tail(w) > TAIL_LIMIT {
        w += 1;
    }
    Ok(w)
}

/// `max_z ln pmf(z - a) - ln pmf(z - b)` for `z` in `[min-w, max+w]`.
fn coordinate_max(dist: &DiscreteLaplace, a: i64, b: i64, window: i64) -> f64 {
    (a.min(b) - window..=a.max(b) + window)
        .map(|z| dist.ln_pmf(z - a) - dist.ln_pmf(z - b))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Audits count vectors released with per-coordinate scales `sigmas`,
/// over the given ordered adjacent pairs.
pub fn audit_counts(
    mechanism: &str,
    pairs: &[(Vec<i64>, Vec<i64>)],
    sigmas: &[f64],
    epsilon: f64,
    window: i64,
) -> Result<AuditReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    if window < 0 {
        return Err(invalid("window must be nonnegative"));
    }
    let dists = sigmas.iter().map(|&s| DiscreteLaplace::new(s)).collect::<Result<Vec<_>>>()?;
    let tail_mass = dists.iter().map(|d| d.tail(window)).fold(0.0, f64::max);
    if tail_mass > TAIL_LIMIT {
        let required = sigmas.iter().map(|&s| required_window(s)).collect::<Result<Vec<_>>>()?;
        return Err(Error::WindowTooSmall { window, required: required.into_iter().max().unwrap_or(0), tail: tail_mass });
    }
    let mut max_log_ratio = f64::NEG_INFINITY;
    let mut worst_pair = (Vec::new(), Vec::new());
    for (a, b) in pairs {
        if a.len() != dists.len() || b.len() != dists.len() {
            return Err(invalid("count vectors must have one entry per noise scale"));
        }
        let v: f64 = dists.iter().zip(a.iter().zip(b)).map(|(d, (&x, &y))| coordinate_max(d, x, y, window)).sum();
        if v > max_log_ratio {
            max_log_ratio = v;
            worst_pair = (a.clone(), b.clone());
        }
    }
    Ok(AuditReport {
        mechanism: mechanism.to_string(),
        epsilon,
        window,
        pairs: pairs.len(),
        coordinates: dists.len(),
        max_log_ratio,
        worst_pair,
        tail_mass,
        passed: max_log_ratio <= epsilon + RATIO_SLACK,
    })
}

/// Every multiset of `size` anchors, as multiplicity vectors.
fn multisets(anchors: usize, size: usize) -> Vec<Vec<usize>> {
    if anchors == 1 {
        return vec![vec![size]];
    }
    (0..=size)
        .flat_map(|k| multisets(anchors - 1, size - k).into_iter().map(move |mut rest| {
            rest.insert(0, k);
            rest
        }))
        .collect()
}

/// Ordered adjacent pairs: each base dataset of `size` points against each
/// dataset obtained by adding or removing one anchor, in both orders.
fn adjacent_pairs<F>(anchors: &Dataset, size: usize, mut counts: F) -> Result<Vec<(Vec<i64>, Vec<i64>)>>
where
    F: FnMut(&Dataset) -> Result<Vec<i64>>,
{
    let build = |mult: &[usize]| -> Result<Dataset> {
        let mut d = Dataset::new(anchors.dim())?;
        for (i, &k) in mult.iter().enumerate() {
            d.push_repeated(anchors.point(i), k)?;
        }
        Ok(d)
    };
    let mut pairs = Vec::new();
    for base in multisets(anchors.len(), size) {
        let c = counts(&build(&base)?)?;
        for i in 0..anchors.len() {
            let mut grown = base.clone();
            grown[i] += 1;
            let mut shrunk = base.clone();
            let neighbours = std::iter::once(grown).chain((base[i] > 0).then(|| {
                shrunk[i] -= 1;
                shrunk
            }));
            for other in neighbours {
                let o = counts(&build(&other)?)?;
                pairs.push((c.clone(), o.clone()));
                pairs.push((o, c.clone()));
            }
        }
    }
    Ok(pairs)
}

/// Audit of the noisy count tree on `[0,1]` for datasets of `size` points
/// drawn from three anchors, with the given per-level schedule.
pub fn audit_pmm(schedule: &NoiseSchedule, epsilon: f64, size: usize, window: i64) -> Result<AuditReport> {
    let r = schedule.depth();
    if r > 4 || size > 6 {
        return Err(invalid("the exact audit is limited to depth <= 4 and at most 6 points"));
    }
    let partition = BinaryPartition::new(1, r)?;
    let anchors = Dataset::from_points(1, [[1.0 / 6.0], [0.5], [5.0 / 6.0]])?;
    let pairs = adjacent_pairs(&anchors, size, |d| Ok(true_counts(d, &partition)?.levels().concat()))?;
    let sigmas: Vec<f64> = (0..=r).flat_map(|j| std::iter::repeat_n(schedule.sigma(j as usize), 1 << j)).collect();
    audit_counts("pmm", &pairs, &sigmas, epsilon, window)
}

/// Audit of the noisy cell counts on a one-dimensional grid of `cells`
/// cells for datasets of `size` anchor points.
pub fn audit_psmm(epsilon: f64, cells: u64, size: usize, window: i64) -> Result<AuditReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    if cells > 6 || size > 6 {
        return Err(invalid("the exact audit is limited to at most 6 cells and 6 points"));
    }
    let grid = build_grid(1, cells)?;
    let pairs = adjacent_pairs(&grid.anchors(), size, |d| cell_counts(d, &grid))?;
    audit_counts("psmm", &pairs, &vec![1.0 / epsilon; grid.cells()], epsilon, window)
}
