use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{check_point, Dataset};
use crate::dlaplace::DiscreteLaplace;
use crate::error::{invalid, Error, Result};
use crate::partition::{BinaryPartition, CellIndex};

use super::schedule::NoiseSchedule;

/// Deepest tree for which counts are materialised (`2^(r+1)` integers).
pub const MAX_COUNT_DEPTH: u32 = 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountKind {
    True,
    Noisy,
    Consistent,
}

/// Integer counts on every node of a depth-`r` partition, stored level by
/// level; entry `b` of level `j` belongs to the cell whose bit string is `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTree {
    kind: CountKind,
    levels: Vec<Vec<i64>>,
}

impl CountTree {
    /// Validates shape, sign, and (for true and consistent trees) that every
    /// node equals the sum of its children.
    pub fn from_levels(kind: CountKind, levels: Vec<Vec<i64>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(invalid("count tree needs at least the root level"));
        }
        let depth = levels.len() as u32 - 1;
        if depth > MAX_COUNT_DEPTH {
            return Err(Error::DepthTooLarge(depth));
        }
        for (j, level) in levels.iter().enumerate() {
            if level.len() != 1 << j {
                return Err(invalid(format!("level {j} has {} entries, expected {}", level.len(), 1u64 << j)));
            }
            if let Some(b) = level.iter().position(|&c| c < 0) {
                return Err(invalid(format!("negative count at level {j}, index {b}")));
            }
        }
        let tree = Self { kind, levels };
        if kind != CountKind::Noisy && !tree.is_consistent() {
            return Err(invalid(format!("{kind:?} count tree is not consistent")));
        }
        Ok(tree)
    }

    pub fn kind(&self) -> CountKind {
        self.kind
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn levels(&self) -> &[Vec<i64>] {
        &self.levels
    }

    pub fn level(&self, j: u32) -> &[i64] {
        &self.levels[j as usize]
    }

    pub fn get(&self, cell: CellIndex) -> i64 {
        self.levels[cell.level() as usize][cell.bits() as usize]
    }

    pub fn root(&self) -> i64 {
        self.levels[0][0]
    }

    pub fn leaves(&self) -> &[i64] {
        self.levels.last().expect("nonempty")
    }

    /// Counts of the two children of an internal cell.
    pub fn children(&self, cell: CellIndex) -> (i64, i64) {
        let next = &self.levels[cell.level() as usize + 1];
        let b = cell.bits() as usize;
        (next[2 * b], next[2 * b + 1])
    }

    pub fn is_consistent(&self) -> bool {
        self.levels.windows(2).all(|w| {
            w[0].iter().enumerate().all(|(b, &c)| w[1][2 * b] + w[1][2 * b + 1] == c)
        })
    }
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_COUNT_DEPTH {
        return Err(invalid(format!(
            "depth {depth} would materialise 2^{} counts; the limit is depth {MAX_COUNT_DEPTH}",
            depth + 1
        )));
    }
    Ok(())
}

/// Number of data points in every cell, by leaf location and upward sums.
pub fn true_counts(data: &Dataset, partition: &BinaryPartition) -> Result<CountTree> {
    if data.dim() != partition.dim() {
        return Err(Error::DimensionMismatch { expected: partition.dim(), found: data.dim() });
    }
    let r = partition.depth();
    check_depth(r)?;
    let mut leaves = vec![0i64; 1 << r];
    for (row, x) in data.points().enumerate() {
        check_point(x).map_err(|(column, value)| Error::OutOfDomain { row, column, value })?;
        leaves[partition.locate_unchecked(x, r).bits() as usize] += 1;
    }
    let mut levels = vec![leaves];
    for _ in 0..r {
        let below = levels.last().expect("nonempty");
        let above: Vec<i64> = below.chunks_exact(2).map(|c| c[0] + c[1]).collect();
        levels.push(above);
    }
    levels.reverse();
    Ok(CountTree { kind: CountKind::True, levels })
}

/// Noisy counts `(n + λ)_+` together with the raw noise `λ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoisyCounts {
    pub counts: CountTree,
    pub noise: Vec<Vec<i64>>,
}

impl NoisyCounts {
    /// Pre-clamp values `n_θ + λ_θ` at level `j`.
    pub fn unclamped(&self, truth: &CountTree, j: u32) -> Vec<i64> {
        truth.level(j).iter().zip(&self.noise[j as usize]).map(|(n, l)| n + l).collect()
    }
}

/// Adds independent `Lap_Z(σ_j)` noise to every level-`j` count, drawing in
/// breadth-first order (level by level, left to right), then clamps at zero.
pub fn add_noise<R: Rng + ?Sized>(truth: &CountTree, schedule: &NoiseSchedule, rng: &mut R) -> Result<NoisyCounts> {
    if schedule.len() != truth.levels.len() {
        return Err(invalid(format!(
            "schedule has {} levels but the tree has {}",
            schedule.len(),
            truth.levels.len()
        )));
    }
    let noise = truth
        .levels
        .iter()
        .enumerate()
        .map(|(j, level)| {
            let dist = DiscreteLaplace::new(schedule.sigma(j))?;
            Ok(level.iter().map(|_| dist.sample(rng)).collect())
        })
        .collect::<Result<Vec<Vec<i64>>>>()?;
    apply_noise(truth, noise)
}

/// Applies a given noise vector; the deterministic half of [`add_noise`].
pub fn apply_noise(truth: &CountTree, noise: Vec<Vec<i64>>) -> Result<NoisyCounts> {
    if truth.kind != CountKind::True {
        return Err(invalid("noise must be added to true counts"));
    }
    if noise.len() != truth.levels.len() || noise.iter().zip(&truth.levels).any(|(a, b)| a.len() != b.len()) {
        return Err(invalid("noise shape does not match the count tree"));
    }
    let levels = truth
        .levels
        .iter()
        .zip(&noise)
        .map(|(n, l)| n.iter().zip(l).map(|(a, b)| (a + b).max(0)).collect())
        .collect();
    Ok(NoisyCounts { counts: CountTree { kind: CountKind::Noisy, levels }, noise })
}
