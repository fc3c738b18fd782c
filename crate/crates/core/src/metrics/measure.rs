use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};

/// Tolerance on total mass when a probability measure is required.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Finitely supported signed measure: distinct support points with real weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSignedMeasure {
    support: Dataset,
    weights: Vec<f64>,
}

pub(crate) fn point_key(p: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same point.
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl DiscreteSignedMeasure {
    pub fn new(support: Dataset, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(invalid(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(invalid(format!("weight {i} is not finite")));
        }
        let mut seen = HashMap::with_capacity(support.len());
        for (i, p) in support.points().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("support point {i} is not finite")));
            }
            if let Some(j) = seen.insert(point_key(p), i) {
                return Err(invalid(format!("support points {j} and {i} coincide")));
            }
        }
        Ok(Self { support, weights })
    }

    /// The empirical measure `1/n Σ δ_x`, with repeated points merged in
    /// first-occurrence order.
    pub fn empirical(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(invalid("empirical measure of an empty dataset"));
        }
        let w = 1.0 / data.len() as f64;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut support = Dataset::new(data.dim())?;
        let mut counts: Vec<usize> = Vec::new();
        for p in data.points() {
            match index.entry(point_key(p)) {
                std::collections::hash_map::Entry::Occupied(e) => counts[*e.get()] += 1,
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(counts.len());
                    counts.push(1);
                    support.push(p)?;
                }
            }
        }
        let weights = counts.into_iter().map(|c| c as f64 * w).collect();
        Ok(Self { support, weights })
    }

    pub fn support(&self) -> &Dataset {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same support, new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(invalid("weight vector length does not match the support"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        Ok(Self { support: self.support.clone(), weights })
    }

    pub fn is_probability(&self) -> bool {
        self.check_probability().is_ok()
    }

    pub fn check_probability(&self) -> Result<()> {
        let mass = self.total_mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE || self.weights.iter().any(|&w| w < -MASS_TOLERANCE) {
            return Err(Error::NotProbability(mass));
        }
        Ok(())
    }

    /// Weights of `other` re-indexed onto this measure's support order.
    /// Fails unless both supports are the same point set.
    pub(crate) fn weights_on_support_of(&self, other: &Self) -> Result<Vec<f64>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        if self.len() != other.len() {
            return Err(Error::SupportMismatch);
        }
        let index: HashMap<Vec<u64>, usize> =
            self.support.points().enumerate().map(|(i, p)| (point_key(p), i)).collect();
        let mut out = vec![0.0; self.len()];
        for (p, &w) in other.support.points().zip(&other.weights) {
            let i = *index.get(&point_key(p)).ok_or(Error::SupportMismatch)?;
            out[i] = w;
        }
        Ok(out)
    }
}

/// Extends both measures with zero weights to the union of their supports.
pub fn align(
    a: &DiscreteSignedMeasure,
    b: &DiscreteSignedMeasure,
) -> Result<(DiscreteSignedMeasure, DiscreteSignedMeasure)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let mut support = a.support.clone();
    let mut index: HashMap<Vec<u64>, usize> =
        a.support.points().enumerate().map(|(i, p)| (point_key(p), i)).collect();
    let mut wa = a.weights.clone();
    let mut wb = vec![0.0; a.len()];
    for (p, &w) in b.support.points().zip(&b.weights) {
        match index.get(&point_key(p)) {
            Some(&i) => wb[i] = w,
            None => {
                index.insert(point_key(p), wa.len());
                support.push(p)?;
                wa.push(0.0);
                wb.push(w);
            }
        }
    }
    Ok((
        DiscreteSignedMeasure { support: support.clone(), weights: wa },
        DiscreteSignedMeasure { support, weights: wb },
    ))
}
