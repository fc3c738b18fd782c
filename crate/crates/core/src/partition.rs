//! Binary hierarchical partition of the unit cube by cyclic halving.
//!
//! Level `j` splits coordinate `j mod d` through the middle. A cell at level
//! `j` is a `j`-bit string whose most significant bit is the first split.

use std::fmt;
use std::str::FromStr;

use crate::dataset::check_point;
use crate::error::{invalid, Error, Result};

pub const MAX_DEPTH: u32 = 62;

/// A node of the partition tree: the first `level` bits of a path from the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    level: u32,
    bits: u64,
}

impl CellIndex {
    pub const ROOT: CellIndex = CellIndex { level: 0, bits: 0 };

    pub fn new(level: u32, bits: u64) -> Result<Self> {
        if level > MAX_DEPTH {
            return Err(Error::DepthTooLarge(level));
        }
        if bits >> level != 0 {
            return Err(invalid(format!("bits {bits:#b} do not fit in {level} levels")));
        }
        Ok(Self { level, bits })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// The bit string read as an integer, which is also the cell's position
    /// within its level.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn child(&self, bit: u8) -> CellIndex {
        debug_assert!(bit < 2 && self.level < MAX_DEPTH);
        CellIndex { level: self.level + 1, bits: (self.bits << 1) | bit as u64 }
    }

    pub fn parent(&self) -> Option<CellIndex> {
        (self.level > 0).then(|| CellIndex { level: self.level - 1, bits: self.bits >> 1 })
    }

    /// The `i`-th split decision on the path, `i < level`.
    pub fn bit(&self, i: u32) -> u8 {
        ((self.bits >> (self.level - 1 - i)) & 1) as u8
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.level {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

impl FromStr for CellIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let level = u32::try_from(s.len()).map_err(|_| Error::DepthTooLarge(u32::MAX))?;
        if level > MAX_DEPTH {
            return Err(Error::DepthTooLarge(level));
        }
        let mut bits = 0u64;
        for ch in s.chars() {
            let b = match ch {
                '0' => 0,
                '1' => 1,
                _ => return Err(invalid(format!("invalid cell string {s:?}"))),
            };
            bits = (bits << 1) | b;
        }
        Ok(Self { level, bits })
    }
}

/// Axis-aligned box `[lower, upper)` (closed at the domain's upper boundary).
#[derive(Clone, Debug, PartialEq)]
pub struct CellBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CellBox {
    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// ℓ∞ diameter.
    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&lo, &hi))| {
            v >= lo && (v < hi || (hi == 1.0 && v == 1.0))
        })
    }
}

/// The canonical depth-`r` partition of `[0,1]^d`. Cells are derived from
/// their index on demand; nothing is stored per cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryPartition {
    dim: usize,
    depth: u32,
}

impl BinaryPartition {
    pub fn new(dim: usize, depth: u32) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthTooLarge(depth));
        }
        Ok(Self { dim, depth })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaf_count(&self) -> u64 {
        1u64 << self.depth
    }

    /// Number of splits of `axis` among the first `level` levels.
    pub fn splits(&self, level: u32, axis: usize) -> u32 {
        let (level, axis, d) = (level as usize, axis, self.dim);
        if level > axis {
            ((level - axis - 1) / d + 1) as u32
        } else {
            0
        }
    }

    /// ℓ∞ diameter of every cell at `level`: `2^-floor(level/d)`.
    pub fn diameter(&self, level: u32) -> f64 {
        (-((level as usize / self.dim) as f64)).exp2()
    }

    /// Leaf diameter, the partition's resolution.
    pub fn resolution(&self) -> f64 {
        self.diameter(self.depth)
    }

    /// `Δ_j`, the summed diameter of the `2^j` cells of level `j`.
    pub fn delta(&self, level: u32) -> f64 {
        (level as f64 - (level as usize / self.dim) as f64).exp2()
    }

    /// `[Δ_{-1}, Δ_0, ..., Δ_r]` with the convention `Δ_{-1} = Δ_0 = 1`.
    pub fn delta_levels(&self) -> Vec<f64> {
        std::iter::once(1.0).chain((0..=self.depth).map(|j| self.delta(j))).collect()
    }

    /// Per-axis integer coordinates of a cell on its level's grid.
    fn axis_indices(&self, cell: CellIndex) -> Vec<u64> {
        let mut idx = vec![0u64; self.dim];
        for i in 0..cell.level {
            let a = i as usize % self.dim;
            idx[a] = (idx[a] << 1) | cell.bit(i) as u64;
        }
        idx
    }

    pub fn cell_box(&self, cell: CellIndex) -> Result<CellBox> {
        self.check_cell(cell)?;
        let idx = self.axis_indices(cell);
        let mut lower = Vec::with_capacity(self.dim);
        let mut upper = Vec::with_capacity(self.dim);
        for (a, &i) in idx.iter().enumerate() {
            let w = (-(self.splits(cell.level, a) as f64)).exp2();
            lower.push(i as f64 * w);
            upper.push((i + 1) as f64 * w);
        }
        Ok(CellBox { lower, upper })
    }

    /// Center of the cell.
    pub fn representative(&self, cell: CellIndex) -> Result<Vec<f64>> {
        Ok(self.cell_box(cell)?.center())
    }

    /// The leaf containing `x`.
    pub fn locate(&self, x: &[f64]) -> Result<CellIndex> {
        self.locate_at(x, self.depth)
    }

    /// The level-`level` cell containing `x`.
    pub fn locate_at(&self, x: &[f64], level: u32) -> Result<CellIndex> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        if level > self.depth {
            return Err(invalid(format!("level {level} exceeds depth {}", self.depth)));
        }
        check_point(x).map_err(|(column, value)| Error::OutOfDomain { row: 0, column, value })?;
        Ok(self.locate_unchecked(x, level))
    }

    /// Leaf location without validation; `x` must lie in `[0,1]^d`.
    pub(crate) fn locate_unchecked(&self, x: &[f64], level: u32) -> CellIndex {
        let d = self.dim;
        let mut bits = 0u64;
        for i in 0..level {
            let a = i as usize % d;
            let k = self.splits(level, a);
            let t = i / d as u32;
            let scaled = (x[a] * (k as f64).exp2()).floor() as u64;
            let idx = scaled.min((1u64 << k) - 1);
            let bit = (idx >> (k - 1 - t)) & 1;
            bits = (bits << 1) | bit;
        }
        CellIndex { level, bits }
    }

    fn check_cell(&self, cell: CellIndex) -> Result<()> {
        if cell.level > self.depth {
            return Err(invalid(format!("cell level {} exceeds depth {}", cell.level, self.depth)));
        }
        Ok(())
    }
}
