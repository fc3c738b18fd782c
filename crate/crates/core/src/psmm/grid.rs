use rand::Rng;

use crate::dataset::{check_point, Dataset};
use crate::dlaplace::DiscreteLaplace;
use crate::error::{invalid, Error, Result};
use crate::metrics::DiscreteSignedMeasure;

/// Largest number of cells [`build_grid`] will create.
pub const MAX_GRID_CELLS: u64 = 1 << 26;

/// Uniform grid of `k^d` cubes of side `1/k`, cells numbered row-major with
/// axis 0 most significant; anchors are the cube centers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellGrid {
    dim: usize,
    side: u64,
}

/// Smallest `k` with `k^d >= target`.
fn side_for(dim: usize, target: u64) -> Option<u64> {
    let pow = |k: u64| (0..dim).try_fold(1u64, |acc, _| acc.checked_mul(k));
    let mut k = ((target as f64).powf(1.0 / dim as f64).ceil() as u64).max(1);
    while k > 1 && pow(k - 1).is_some_and(|p| p >= target) {
        k -= 1;
    }
    while pow(k)? < target {
        k += 1;
    }
    Some(k)
}

/// The `k^d` grid with `k = ceil(target^(1/d))`.
pub fn build_grid(dim: usize, target_cells: u64) -> Result<CellGrid> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if target_cells == 0 {
        return Err(invalid("target cell count must be at least 1"));
    }
    let too_large = |cells: u128| Error::GridTooLarge { cells, limit: MAX_GRID_CELLS };
    let side = side_for(dim, target_cells).ok_or_else(|| too_large(u128::MAX))?;
    CellGrid::new(dim, side).map_err(|_| too_large((side as u128).saturating_pow(dim as u32)))
}

impl CellGrid {
    pub fn new(dim: usize, side: u64) -> Result<Self> {
        if dim == 0 || side == 0 {
            return Err(invalid("grid needs positive dimension and side"));
        }
        let cells = (side as u128).saturating_pow(dim as u32);
        if cells > MAX_GRID_CELLS as u128 {
            return Err(Error::GridTooLarge { cells, limit: MAX_GRID_CELLS });
        }
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis, `k`.
    pub fn side(&self) -> u64 {
        self.side
    }

    pub fn cells(&self) -> usize {
        (self.side as usize).pow(self.dim as u32)
    }

    /// ℓ∞ diameter `1/k` shared by all cells.
    pub fn diameter(&self) -> f64 {
        1.0 / self.side as f64
    }

    pub fn cell_coords(&self, mut cell: usize) -> Vec<u64> {
        let mut c = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            c[a] = cell as u64 % self.side;
            cell /= self.side as usize;
        }
        c
    }

    /// Center of cell `cell`.
    pub fn anchor(&self, cell: usize) -> Vec<f64> {
        let k = self.side as f64;
        self.cell_coords(cell).iter().map(|&i| (i as f64 + 0.5) / k).collect()
    }

    pub fn anchors(&self) -> Dataset {
        let mut out = Dataset::with_capacity(self.dim, self.cells()).expect("dim >= 1");
        for c in 0..self.cells() {
            out.push(&self.anchor(c)).expect("anchors lie in the unit cube");
        }
        out
    }

    /// Cell containing `x`; the upper face of the cube belongs to the last cell.
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        check_point(x).map_err(|(column, value)| Error::OutOfDomain { row: 0, column, value })?;
        Ok(self.locate_unchecked(x))
    }

    fn locate_unchecked(&self, x: &[f64]) -> usize {
        let k = self.side as f64;
        x.iter().fold(0u64, |acc, &v| acc * self.side + ((v * k).floor() as u64).min(self.side - 1)) as usize
    }

    /// Cell of a point that must coincide with an anchor.
    pub(crate) fn anchor_cell(&self, y: &[f64]) -> Result<usize> {
        let c = self.locate(y)?;
        if self.anchor(c).iter().zip(y).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::SupportMismatch);
        }
        Ok(c)
    }
}

/// Number of data points per cell.
pub fn cell_counts(data: &Dataset, grid: &CellGrid) -> Result<Vec<i64>> {
    if data.dim() != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, found: data.dim() });
    }
    let mut counts = vec![0i64; grid.cells()];
    for (row, x) in data.points().enumerate() {
        check_point(x).map_err(|(column, value)| Error::OutOfDomain { row, column, value })?;
        counts[grid.locate_unchecked(x)] += 1;
    }
    Ok(counts)
}

/// Signed measure with weight `(n_i + λ_i)/n` at every anchor, `λ_i` drawn
/// from `Lap_Z(1/ε)` in cell order.
pub fn perturb_counts<R: Rng + ?Sized>(data: &Dataset, grid: &CellGrid, epsilon: f64, rng: &mut R) -> Result<DiscreteSignedMeasure> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    let counts = cell_counts(data, grid)?;
    let dist = DiscreteLaplace::new(1.0 / epsilon)?;
    let noise: Vec<i64> = counts.iter().map(|_| dist.sample(rng)).collect();
    signed_measure(grid, &counts, &noise, data.len())
}

/// The deterministic half of [`perturb_counts`] for a given noise vector.
pub fn signed_measure(grid: &CellGrid, counts: &[i64], noise: &[i64], n: usize) -> Result<DiscreteSignedMeasure> {
    if counts.len() != grid.cells() || noise.len() != grid.cells() {
        return Err(invalid("counts and noise must have one entry per cell"));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let w = counts.iter().zip(noise).map(|(c, l)| (c + l) as f64 / n as f64).collect();
    DiscreteSignedMeasure::new(grid.anchors(), w)
}
