//! Private signed measure mechanism: noisy cell counts as a signed measure,
//! projected to the closest probability measure and rounded to a multiset.

mod grid;
mod projection;
mod rationalize;

pub use grid::{build_grid, cell_counts, perturb_counts, signed_measure, CellGrid, MAX_GRID_CELLS};
pub use projection::{project_to_probability, project_with, Projection};
pub use rationalize::{apportion, rationalize};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::metrics::DiscreteSignedMeasure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsmmConfig {
    pub epsilon: f64,
    /// Requested cell count; `ceil(εn)` when absent.
    #[serde(default)]
    pub target_cells: Option<u64>,
    /// Output size; `max(10m, 10^4)` when absent.
    #[serde(default)]
    pub denominator: Option<u64>,
}

impl PsmmConfig {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, target_cells: None, denominator: None }
    }

    pub fn with_target_cells(mut self, m: u64) -> Self {
        self.target_cells = Some(m);
        self
    }

    pub fn with_denominator(mut self, q: u64) -> Self {
        self.denominator = Some(q);
        self
    }

    /// Grid a run on `n` points of dimension `dim` would use.
    pub fn grid(&self, n: usize, dim: usize) -> Result<CellGrid> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be positive and finite, got {}", self.epsilon)));
        }
        let target = self.target_cells.unwrap_or_else(|| ((self.epsilon * n as f64).ceil() as u64).max(1));
        build_grid(dim, target)
    }

    pub fn denominator_for(&self, cells: usize) -> u64 {
        self.denominator.unwrap_or_else(|| (10 * cells as u64).max(10_000))
    }
}

/// Every intermediate of one mechanism run.
#[derive(Clone, Debug)]
pub struct PsmmRun {
    pub grid: CellGrid,
    pub signed: DiscreteSignedMeasure,
    pub projection: Projection,
    pub denominator: u64,
    pub synthetic: Dataset,
}

pub fn run_psmm<R: Rng + ?Sized>(data: &Dataset, config: &PsmmConfig, rng: &mut R) -> Result<PsmmRun> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let grid = config.grid(data.len(), data.dim())?;
    let signed = perturb_counts(data, &grid, config.epsilon, rng)?;
    let projection = project_to_probability(&signed, &grid)?;
    let denominator = config.denominator_for(grid.cells());
    let synthetic = rationalize(&projection.tau, denominator)?;
    Ok(PsmmRun { grid, signed, projection, denominator, synthetic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::w1_grid_snapped;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn degenerate_noise_accuracy() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        let data = Dataset::uniform(2, 300, &mut rng).unwrap();
        let run = run_psmm(&data, &PsmmConfig::new(1e7).with_target_cells(25), &mut rng).unwrap();
        assert_eq!(run.synthetic.len() as u64, run.denominator);
        let m = run.grid.cells() as f64;
        let w = w1_grid_snapped(&data, &run.synthetic, 8).unwrap();
        assert!(w.value - w.error_bound <= run.grid.diameter() + m / run.denominator as f64);
    }

    #[test]
    fn defaults_and_reproducibility() {
        let data = Dataset::uniform(3, 200, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let a = run_psmm(&data, &PsmmConfig::new(1.0), &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        let b = run_psmm(&data, &PsmmConfig::new(1.0), &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a.synthetic, b.synthetic);
        assert_eq!(a.grid.side(), 6);
        assert_eq!(a.denominator, 10_000);
        assert!(a.projection.tau.is_probability());
    }

    #[test]
    fn errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert!(matches!(run_psmm(&Dataset::new(1).unwrap(), &PsmmConfig::new(1.0), &mut rng), Err(Error::EmptyInput)));
        let data = Dataset::uniform(1, 5, &mut rng).unwrap();
        assert!(run_psmm(&data, &PsmmConfig::new(-1.0), &mut rng).is_err());
    }
}
