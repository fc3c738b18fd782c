use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::counts::MAX_COUNT_DEPTH;

/// Per-level noise scales `σ_0..σ_r`; the privacy cost is `Σ 1/σ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NoiseSchedule {
    sigmas: Vec<f64>,
}

impl TryFrom<Vec<f64>> for NoiseSchedule {
    type Error = crate::Error;

    fn try_from(sigmas: Vec<f64>) -> Result<Self> {
        Self::new(sigmas)
    }
}

impl From<NoiseSchedule> for Vec<f64> {
    fn from(s: NoiseSchedule) -> Self {
        s.sigmas
    }
}

impl NoiseSchedule {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(invalid("noise schedule needs at least one level"));
        }
        if let Some(j) = sigmas.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(invalid(format!("sigma_{j} = {} is not positive and finite", sigmas[j])));
        }
        Ok(Self { sigmas })
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn sigma(&self, j: usize) -> f64 {
        self.sigmas[j]
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    /// Depth of the partition this schedule covers.
    pub fn depth(&self) -> u32 {
        self.sigmas.len() as u32 - 1
    }

    /// Privacy budget `Σ 1/σ_j`.
    pub fn budget(&self) -> f64 {
        self.sigmas.iter().map(|s| 1.0 / s).sum()
    }

    /// Copy with level `j` rescaled by `factor`.
    pub fn scaled_level(&self, j: usize, factor: f64) -> Result<Self> {
        let mut sigmas = self.sigmas.clone();
        *sigmas.get_mut(j).ok_or_else(|| invalid(format!("no level {j}")))? *= factor;
        Self::new(sigmas)
    }
}

/// Budget-optimal scales `σ_j = S / (ε sqrt(Δ_{j-1}))` with
/// `S = Σ_j sqrt(Δ_{j-1})`, given `deltas = [Δ_{-1}, .., Δ_{r-1}]`.
pub fn optimal_schedule(deltas: &[f64], epsilon: f64) -> Result<NoiseSchedule> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(invalid("level diameters must be positive and finite"));
    }
    let roots: Vec<f64> = deltas.iter().map(|d| d.sqrt()).collect();
    let s: f64 = roots.iter().sum();
    NoiseSchedule::new(roots.iter().map(|r| s / (epsilon * r)).collect())
}

/// Depth `round(log2(εn))`, one less for `d = 1`, floored at zero.
pub fn choose_depth(epsilon: f64, n: usize, dim: usize) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let en = epsilon * n as f64;
    if en <= 1.0 {
        return Err(invalid(format!(
            "epsilon * n = {en} must exceed 1 for a useful partition; supply a depth explicitly"
        )));
    }
    let base = en.log2().round() as i64;
    let r = if dim == 1 { base - 1 } else { base }.max(0) as u32;
    if r > MAX_COUNT_DEPTH {
        return Err(invalid(format!("chosen depth {r} exceeds the limit {MAX_COUNT_DEPTH}")));
    }
    Ok(r)
}
