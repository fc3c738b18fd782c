//! The discrete Laplacian distribution on the integers.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{invalid, Result};

/// `Lap_Z(sigma)`: integer-valued, symmetric, with mass proportional to `exp(-|z|/sigma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteLaplace {
    sigma: f64,
    p: f64,
    /// `ln((1-p)/(1+p))`, the log-mass at zero.
    ln_norm: f64,
}

/// Beyond this value of `|z|/sigma` the pmf is evaluated in log space.
const LOG_SPACE_THRESHOLD: f64 = 30.0;

impl DiscreteLaplace {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("discrete Laplace scale must be positive and finite, got {sigma}")));
        }
        let p = (-1.0 / sigma).exp();
        // 1 - p computed without cancellation for large sigma.
        let one_minus_p = -(-1.0 / sigma).exp_m1();
        let ln_norm = one_minus_p.ln() - p.ln_1p();
        Ok(Self { sigma, p, ln_norm })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn ln_pmf(&self, z: i64) -> f64 {
        self.ln_norm - z.unsigned_abs() as f64 / self.sigma
    }

    pub fn pmf(&self, z: i64) -> f64 {
        let a = z.unsigned_abs() as f64 / self.sigma;
        if a > LOG_SPACE_THRESHOLD {
            self.ln_pmf(z).exp()
        } else {
            self.ln_norm.exp() * (-a).exp()
        }
    }

    /// `P(Z <= z)`.
    pub fn cdf(&self, z: i64) -> f64 {
        if z < 0 {
            self.tail(-z - 1)
        } else {
            1.0 - self.tail(z)
        }
    }

    /// One-sided tail `P(Z > w)` for `w >= 0`, equal to `p^(w+1)/(1+p)`.
    pub fn tail(&self, w: i64) -> f64 {
        let k = (w.max(-1) + 1) as f64;
        (-k / self.sigma - self.p.ln_1p()).exp()
    }

    pub fn mean(&self) -> f64 {
        0.0
    }

    /// `2p/(1-p)^2`.
    pub fn variance(&self) -> f64 {
        let one_minus_p = -(-1.0 / self.sigma).exp_m1();
        2.0 * self.p / (one_minus_p * one_minus_p)
    }

    /// Draws `G1 - G2` with `G1, G2` i.i.d. geometric on `{0,1,..}` with
    /// `P(G >= k) = p^k`; each geometric is `floor(sigma * E)` for `E ~ Exp(1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let g1 = self.geometric(rng);
        let g2 = self.geometric(rng);
        g1 - g2
    }

    fn geometric<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let e: f64 = Exp1.sample(rng);
        (self.sigma * e).floor() as i64
    }
}

impl Distribution<i64> for DiscreteLaplace {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        DiscreteLaplace::sample(self, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn lap(sigma: f64) -> DiscreteLaplace {
        DiscreteLaplace::new(sigma).unwrap()
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(DiscreteLaplace::new(0.0).is_err());
        assert!(DiscreteLaplace::new(-1.0).is_err());
        assert!(DiscreteLaplace::new(f64::NAN).is_err());
        assert!(DiscreteLaplace::new(f64::INFINITY).is_err());
    }

    #[test]
    fn pmf_at_zero_and_symmetry() {
        let d = lap(1.0);
        let e = (-1.0f64).exp();
        assert_relative_eq!(d.pmf(0), (1.0 - e) / (1.0 + e), max_relative = 1e-15);
        assert_relative_eq!(d.pmf(0), 0.462_117_157_260_009_7, max_relative = 1e-12);
        for z in 0..200 {
            assert_eq!(d.pmf(z), d.pmf(-z));
        }
    }

    #[test]
    fn pmf_sums_to_one() {
        let total: f64 = (-200..=200).map(|z| lap(2.0).pmf(z)).sum();
        assert!((total - 1.0).abs() <= 1e-12, "{total}");
        for sigma in [0.25, 0.5, 1.0, 2.0, 8.0] {
            let d = lap(sigma);
            let w = (60.0 * sigma).ceil() as i64;
            let total: f64 = (-w..=w).map(|z| d.pmf(z)).sum();
            assert!((1.0 - 1e-10..=1.0 + 1e-15).contains(&total), "sigma {sigma}: {total}");
        }
    }

    #[test]
    fn log_space_branch_is_continuous() {
        let d = lap(0.5);
        let z = 15; // |z|/sigma = 30
        let direct = d.ln_norm.exp() * (-(z as f64) / 0.5).exp();
        assert_relative_eq!(d.pmf(z), direct, max_relative = 1e-13);
        assert_relative_eq!(d.pmf(z + 1), d.pmf(z) * d.p(), max_relative = 1e-12);
        assert!(d.pmf(2000) > 0.0 || d.ln_pmf(2000) < -700.0);
    }

    #[test]
    fn cdf_matches_partial_sums() {
        let d = lap(1.5);
        let mut acc: f64 = (-300..-20).map(|z| d.pmf(z)).sum();
        for z in -20..=20 {
            acc += d.pmf(z);
            assert!((d.cdf(z) - acc).abs() < 1e-13, "z={z}");
        }
    }

    #[test]
    fn tail_matches_sum() {
        let d = lap(3.0);
        for w in [0i64, 5, 40] {
            let s: f64 = (w + 1..w + 400).map(|z| d.pmf(z)).sum();
            assert_relative_eq!(d.tail(w), s, max_relative = 1e-10);
        }
    }

    #[test]
    fn variance_values() {
        let v = lap(1.0).variance();
        let e = (-1.0f64).exp();
        assert_relative_eq!(v, 2.0 * e / ((1.0 - e) * (1.0 - e)), max_relative = 1e-14);
        assert_relative_eq!(v, 1.841_347_188_415_584_8, max_relative = 1e-12);
        assert!(v < 2.0);

        let d = lap(0.5);
        let m2: f64 = (-100..=100i64).map(|z| (z * z) as f64 * d.pmf(z)).sum();
        assert!((d.variance() - m2).abs() <= 1e-10);

        for sigma in [0.1, 0.25, 0.5, 1.0, 2.0, 8.0, 100.0, 1e4] {
            let d = lap(sigma);
            assert!(d.variance() < 2.0 * sigma * sigma, "sigma {sigma}");
        }
        let ratio = lap(1e4).variance() / (2.0 * 1e8);
        assert!((ratio - 1.0).abs() < 1e-6, "{ratio}");
    }

    /// The difference of two i.i.d. geometrics, convolved by brute force,
    /// reproduces the pmf.
    #[test]
    fn geometric_difference_convolution() {
        for sigma in [0.3, 1.0, 2.5] {
            let d = lap(sigma);
            let p = d.p();
            let geo = |k: i64| (1.0 - p) * p.powi(k as i32);
            for z in -15i64..=15 {
                let conv: f64 = (0..2000i64)
                    .filter(|g2| g2 + z >= 0)
                    .map(|g2| geo(g2 + z) * geo(g2))
                    .sum();
                assert_relative_eq!(conv, d.pmf(z), max_relative = 1e-10);
            }
            // floor(sigma * E) has the same law: P(floor(sigma E) >= k) = exp(-k/sigma) = p^k.
            for k in 0..10 {
                let surv = (-(k as f64) / sigma).exp();
                assert_relative_eq!(surv, p.powi(k), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let d = lap(1.7);
        let a: Vec<i64> = {
            let mut rng = ChaCha20Rng::seed_from_u64(9);
            (0..1000).map(|_| d.sample(&mut rng)).collect()
        };
        let b: Vec<i64> = {
            let mut rng = ChaCha20Rng::seed_from_u64(9);
            (0..1000).map(|_| d.sample(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_moments() {
        let d = lap(1.0);
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let n = 1_000_000usize;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = d.variance();
        assert!(mean.abs() <= 3.0 * (var / n as f64).sqrt(), "mean {mean}");

        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let m4: f64 = (-200..=200i64).map(|z| (z as f64).powi(4) * d.pmf(z)).sum();
        let se = ((m4 - var * var) / n as f64).sqrt();
        assert!((m2 - var).abs() <= 3.0 * se, "m2 {m2} var {var} se {se}");
    }

    #[test]
    fn chi_squared_goodness_of_fit() {
        for (sigma, seed) in [(1.0, 11u64), (0.5, 12), (3.0, 13)] {
            let d = lap(sigma);
            let b = (10.0 * sigma).ceil() as i64;
            let n = 1_000_000usize;
            let mut counts = vec![0u64; (2 * b + 3) as usize];
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for _ in 0..n {
                let z = d.sample(&mut rng).clamp(-b - 1, b + 1);
                counts[(z + b + 1) as usize] += 1;
            }
            let mut probs: Vec<f64> = (-b..=b).map(|z| d.pmf(z)).collect();
            probs.insert(0, d.cdf(-b - 1));
            probs.push(d.tail(b));
            let stat: f64 = counts
                .iter()
                .zip(&probs)
                .map(|(&o, &p)| {
                    let e = p * n as f64;
                    (o as f64 - e).powi(2) / e
                })
                .sum();
            let df = (probs.len() - 1) as f64;
            let crit = ChiSquared::new(df).unwrap().inverse_cdf(0.999);
            assert!(stat < crit, "sigma {sigma}: chi2 {stat} >= {crit}");
        }
    }
}
