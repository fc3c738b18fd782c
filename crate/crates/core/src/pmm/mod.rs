//! Private measure mechanism: noisy hierarchical counts made consistent and
//! emitted as copies of leaf centers.

mod consistency;
mod counts;
mod schedule;

pub use consistency::{comparable, enforce_consistency, flux, transform_pair, ConsistencyPolicy};
pub use counts::{add_noise, apply_noise, true_counts, CountKind, CountTree, NoisyCounts, MAX_COUNT_DEPTH};
pub use schedule::{choose_depth, optimal_schedule, NoiseSchedule};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::partition::{BinaryPartition, CellIndex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmmConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub policy: ConsistencyPolicy,
    /// Partition depth; chosen from `ε`, `n` and `d` when absent.
    #[serde(default)]
    pub depth: Option<u32>,
    /// Explicit per-level scales. Overrides the budget-optimal schedule, so
    /// the run's privacy cost is the schedule's own budget, not `epsilon`.
    #[serde(default)]
    pub schedule: Option<NoiseSchedule>,
}

impl PmmConfig {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, policy: ConsistencyPolicy::Uniform, depth: None, schedule: None }
    }

    pub fn with_policy(mut self, policy: ConsistencyPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = Some(depth);
        self
    }

    pub fn with_schedule(mut self, schedule: NoiseSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    /// Partition and schedule a run on `n` points of dimension `dim` would use.
    pub fn resolve(&self, n: usize, dim: usize) -> Result<(BinaryPartition, NoiseSchedule)> {
        if let Some(s) = &self.schedule {
            let r = s.depth();
            if let Some(d) = self.depth.filter(|&d| d != r) {
                return Err(invalid(format!("depth {d} disagrees with a schedule of {} levels", s.len())));
            }
            return Ok((BinaryPartition::new(dim, r)?, s.clone()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be positive and finite, got {}", self.epsilon)));
        }
        let r = match self.depth {
            Some(r) => r,
            None => choose_depth(self.epsilon, n, dim)?,
        };
        let partition = BinaryPartition::new(dim, r)?;
        let schedule = optimal_schedule(&partition.delta_levels()[..=r as usize], self.epsilon)?;
        Ok((partition, schedule))
    }
}

/// Every intermediate of one mechanism run.
#[derive(Clone, Debug)]
pub struct PmmRun {
    pub partition: BinaryPartition,
    pub schedule: NoiseSchedule,
    pub true_counts: CountTree,
    pub noisy: NoisyCounts,
    pub consistent: CountTree,
    pub synthetic: Dataset,
}

impl PmmRun {
    /// Expected-W1 bound for this run's partition, schedule and input size.
    pub fn accuracy_bound(&self) -> f64 {
        accuracy_bound(&self.partition, &self.schedule, self.true_counts.root() as usize)
    }
}

/// `(2√2/n) Σ_j σ_j Δ_{j-1} + δ`, with `δ` the leaf diameter.
pub fn accuracy_bound(partition: &BinaryPartition, schedule: &NoiseSchedule, n: usize) -> f64 {
    let deltas = partition.delta_levels();
    let s: f64 = schedule.sigmas().iter().zip(&deltas).map(|(sg, dl)| sg * dl).sum();
    2.0 * std::f64::consts::SQRT_2 * s / n as f64 + partition.resolution()
}

/// Runs the mechanism and keeps every intermediate.
pub fn run_pmm<R: Rng + ?Sized>(data: &Dataset, config: &PmmConfig, rng: &mut R) -> Result<PmmRun> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (partition, schedule) = config.resolve(data.len(), data.dim())?;
    let truth = true_counts(data, &partition)?;
    let noisy = add_noise(&truth, &schedule, rng)?;
    let consistent = enforce_consistency(&noisy.counts, config.policy)?;
    let synthetic = emit(&partition, &consistent)?;
    Ok(PmmRun { partition, schedule, true_counts: truth, noisy, consistent, synthetic })
}

/// `m_θ` copies of the center of every leaf `θ`, leaves in index order.
pub fn emit(partition: &BinaryPartition, consistent: &CountTree) -> Result<Dataset> {
    if consistent.root() == 0 {
        return Err(Error::EmptySynthetic);
    }
    let r = partition.depth();
    if consistent.depth() != r {
        return Err(invalid("count tree depth does not match the partition"));
    }
    let mut out = Dataset::with_capacity(partition.dim(), consistent.root() as usize)?;
    for (b, &m) in consistent.leaves().iter().enumerate() {
        if m > 0 {
            let center = partition.representative(CellIndex::new(r, b as u64)?)?;
            out.push_repeated(&center, m as usize)?;
        }
    }
    Ok(out)
}
