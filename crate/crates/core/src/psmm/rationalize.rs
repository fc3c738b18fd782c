use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::metrics::DiscreteSignedMeasure;

/// Largest-remainder apportionment of `q` units to probability weights:
/// floors first, then one extra unit each to the largest fractional parts
/// (earlier index wins ties).
pub fn apportion(weights: &[f64], q: u64) -> Result<Vec<u64>> {
    if q == 0 {
        return Err(invalid("denominator must be positive"));
    }
    if weights.is_empty() {
        return Err(invalid("cannot apportion over an empty support"));
    }
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(invalid("weights must have positive finite total mass"));
    }
    let quota: Vec<f64> = weights.iter().map(|w| w.max(0.0) / total * q as f64).collect();
    let mut counts: Vec<u64> = quota.iter().map(|v| v.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (quota[b] - quota[b].floor()).total_cmp(&(quota[a] - quota[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(q.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    // Rounding in the quotas can overshoot by a unit or two.
    let mut excess = assigned.saturating_sub(q);
    for &i in order.iter().rev() {
        if excess == 0 {
            break;
        }
        if counts[i] > 0 {
            counts[i] -= 1;
            excess -= 1;
        }
    }
    Ok(counts)
}

/// Multiset with `count_i` copies of each support point, where the counts
/// apportion `q` to `τ`.
pub fn rationalize(tau: &DiscreteSignedMeasure, q: u64) -> Result<Dataset> {
    tau.check_probability()?;
    if q < tau.len() as u64 {
        return Err(invalid(format!("denominator {q} is smaller than the support size {}", tau.len())));
    }
    let counts = apportion(tau.weights(), q)?;
    let mut out = Dataset::with_capacity(tau.dim(), q as usize)?;
    for (y, &c) in tau.support().points().zip(&counts) {
        out.push_repeated(y, c as usize)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{align, d_bl};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn examples() {
        assert_eq!(apportion(&[0.5, 0.5], 4).unwrap(), vec![2, 2]);
        let c = apportion(&[1.0 / 3.0; 3], 10).unwrap();
        assert_eq!(c, vec![4, 3, 3]);
        assert!(apportion(&[1.0], 0).is_err());
        let tau = DiscreteSignedMeasure::new(Dataset::from_points(1, [[0.25], [0.75]]).unwrap(), vec![0.5, 0.5]).unwrap();
        assert_eq!(rationalize(&tau, 4).unwrap().len(), 4);
        assert!(rationalize(&tau, 1).is_err());
    }

    #[test]
    fn bl_error_within_m_over_q() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        for _ in 0..20 {
            let m = rng.random_range(1..=12);
            let pts: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
            let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            let tau = DiscreteSignedMeasure::new(Dataset::from_flat(1, pts).unwrap(), raw.iter().map(|v| v / s).collect()).unwrap();
            let q = 10_000;
            let emp = DiscreteSignedMeasure::empirical(&rationalize(&tau, q).unwrap()).unwrap();
            let (a, b) = align(&tau, &emp).unwrap();
            assert!(d_bl(&a, &b).unwrap() <= m as f64 / q as f64 + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn counts_sum_and_stay_close(raw in proptest::collection::vec(0.0f64..1.0, 1..60), q in 1u64..100_000) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-6);
            let s: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let c = apportion(&w, q).unwrap();
            prop_assert_eq!(c.iter().sum::<u64>(), q);
            for (ci, wi) in c.iter().zip(&w) {
                prop_assert!((*ci as f64 / q as f64 - wi).abs() <= 1.0 / q as f64 + 1e-12);
            }
        }
    }
}
