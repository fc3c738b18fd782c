//! Experiment manifests, seeded trial streams, single runs and rate sweeps.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::metrics::{w1_1d, w1_grid_snapped, w1_lattice_snapped, DiscreteSignedMeasure, SnappedDistance};
use crate::pmm::{run_pmm, ConsistencyPolicy, PmmConfig};
use crate::psmm::{run_psmm, PsmmConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Pmm,
    Psmm,
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pmm" => Ok(Self::Pmm),
            "psmm" => Ok(Self::Psmm),
            other => Err(invalid(format!("unknown mechanism {other:?}"))),
        }
    }
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pmm => "pmm",
            Self::Psmm => "psmm",
        })
    }
}

/// Everything needed to reproduce a run or a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub mechanism: Mechanism,
    pub dim: usize,
    pub epsilon: f64,
    pub n: Vec<usize>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: ConsistencyPolicy,
    #[serde(default)]
    pub depth: Option<u32>,
    #[serde(default)]
    pub snap_depth: Option<u32>,
    #[serde(default)]
    pub target_cells: Option<u64>,
    #[serde(default)]
    pub denominator: Option<u64>,
    /// Source data; uniform points are drawn when absent.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl ExperimentManifest {
    pub fn new(mechanism: Mechanism, dim: usize, epsilon: f64, n: Vec<usize>) -> Self {
        Self {
            mechanism,
            dim,
            epsilon,
            n,
            trials: 1,
            seed: 0,
            policy: ConsistencyPolicy::Uniform,
            depth: None,
            snap_depth: None,
            target_cells: None,
            denominator: None,
            input: None,
            normalize: false,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be positive and finite, got {}", self.epsilon)));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(invalid("n must list at least one positive size"));
        }
        Ok(())
    }

    fn pmm_config(&self) -> PmmConfig {
        PmmConfig { epsilon: self.epsilon, policy: self.policy, depth: self.depth, schedule: None }
    }

    fn psmm_config(&self) -> PsmmConfig {
        PsmmConfig { epsilon: self.epsilon, target_cells: self.target_cells, denominator: self.denominator }
    }
}

/// Stream `n·2^32 + 2·trial + kind` of the manifest seed; kind 0 draws
/// source data and kind 1 drives the mechanism.
pub fn trial_rng(seed: u64, n: usize, trial: usize, kind: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) + 2 * trial as u64 + kind);
    rng
}

/// `n` points: uniform on the cube, or resampled with replacement from `source`.
pub fn source_data<R: Rng + ?Sized>(dim: usize, n: usize, source: Option<&Dataset>, rng: &mut R) -> Result<Dataset> {
    match source {
        None => Dataset::uniform(dim, n, rng),
        Some(src) => {
            if src.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: src.dim() });
            }
            if src.is_empty() {
                return Err(Error::EmptyInput);
            }
            let mut out = Dataset::with_capacity(dim, n)?;
            for _ in 0..n {
                out.push(src.point(rng.random_range(0..src.len())))?;
            }
            Ok(out)
        }
    }
}

/// Parameters and sizes of one mechanism run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mechanism: Mechanism,
    pub dim: usize,
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub synthetic_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<ConsistencyPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_bound: Option<f64>,
    /// PSMM grid: cells per axis `k`, cells `m = k^d`, denominator `q`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_side: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<u64>,
}

/// A mechanism run on `data` with its own randomness.
pub fn run_mechanism<R: Rng + ?Sized>(manifest: &ExperimentManifest, data: &Dataset, rng: &mut R) -> Result<(Dataset, RunSummary)> {
    let mut summary = RunSummary {
        mechanism: manifest.mechanism,
        dim: data.dim(),
        n: data.len(),
        epsilon: manifest.epsilon,
        seed: manifest.seed,
        synthetic_size: 0,
        policy: None,
        depth: None,
        schedule: None,
        accuracy_bound: None,
        grid_side: None,
        cells: None,
        denominator: None,
    };
    let synthetic = match manifest.mechanism {
        Mechanism::Pmm => {
            let run = run_pmm(data, &manifest.pmm_config(), rng)?;
            summary.policy = Some(manifest.policy);
            summary.depth = Some(run.partition.depth());
            summary.accuracy_bound = Some(run.accuracy_bound());
            summary.schedule = Some(run.schedule.sigmas().to_vec());
            run.synthetic
        }
        Mechanism::Psmm => {
            let run = run_psmm(data, &manifest.psmm_config(), rng)?;
            summary.grid_side = Some(run.grid.side());
            summary.cells = Some(run.grid.cells());
            summary.denominator = Some(run.denominator);
            run.synthetic
        }
    };
    summary.synthetic_size = synthetic.len();
    Ok((synthetic, summary))
}

/// Single run at `n[0]` (or on the whole `source`), seeded as trial 0.
pub fn generate(manifest: &ExperimentManifest, source: Option<&Dataset>) -> Result<(Dataset, RunSummary)> {
    manifest.validate()?;
    let n = source.map_or(manifest.n[0], Dataset::len);
    let data = match source {
        Some(src) if src.dim() != manifest.dim => return Err(Error::DimensionMismatch { expected: manifest.dim, found: src.dim() }),
        Some(src) => src.clone(),
        None => source_data(manifest.dim, n, None, &mut trial_rng(manifest.seed, n, 0, 0))?,
    };
    run_mechanism(manifest, &data, &mut trial_rng(manifest.seed, n, 0, 1))
}

/// W1 between the empirical measures, exact in one dimension and snapped
/// otherwise. PMM output is snapped at `depth + 4` unless overridden; PSMM
/// output on a `k`-grid is evaluated on the lattice of spacing `1/(2k)`,
/// which contains every anchor.
pub fn evaluate(manifest: &ExperimentManifest, data: &Dataset, synthetic: &Dataset, summary: &RunSummary) -> Result<SnappedDistance> {
    if data.dim() == 1 {
        let a = DiscreteSignedMeasure::empirical(data)?;
        let b = DiscreteSignedMeasure::empirical(synthetic)?;
        return Ok(SnappedDistance { value: w1_1d(&a, &b)?, error_bound: 0.0, lattice: 0, route: crate::metrics::SnapRoute::Bipartite });
    }
    match (manifest.snap_depth, summary.depth, summary.grid_side) {
        (Some(s), _, _) => w1_grid_snapped(data, synthetic, s),
        (None, Some(r), _) => w1_grid_snapped(data, synthetic, r + 4),
        (None, None, Some(k)) => w1_lattice_snapped(data, synthetic, 2 * k),
        _ => Err(invalid("no snapping depth available")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    /// `None` when the run produced no synthetic points.
    pub w1: Option<f64>,
    pub error_bound: f64,
    pub accuracy_bound: Option<f64>,
    pub synthetic_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    pub mean: f64,
    pub stderr: f64,
    pub mean_error_bound: f64,
    /// Mean of `w1 - error_bound`, a lower estimate of the unsnapped W1.
    pub mean_corrected: f64,
    pub stderr_corrected: f64,
    pub mean_accuracy_bound: Option<f64>,
    /// `mean·εn/log2²(εn)` for `d = 1`, `mean·(εn)^(1/d)` otherwise.
    pub scaled: f64,
}

/// Least-squares line through `(log2 εn, log2 W1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub manifest: ExperimentManifest,
    pub points: Vec<RatePoint>,
    pub fit: SlopeFit,
    /// Fit on the snapping-corrected means; absent when every bound is zero.
    pub corrected_fit: Option<SlopeFit>,
    /// `max/min` of the scaled column across `n`.
    pub constant_spread: f64,
    pub trials: Vec<TrialRecord>,
}

/// Ordinary least squares with a 95% t interval on the slope.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    let k = x.len();
    if k < 3 || y.len() != k {
        return Err(invalid("a slope fit needs at least three points"));
    }
    let mx = x.iter().sum::<f64>() / k as f64;
    let my = y.iter().sum::<f64>() / k as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return Err(invalid("slope fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let se = (sse / (k - 2) as f64 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, (k - 2) as f64).map_err(|e| invalid(e.to_string()))?.inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        intercept,
        ci_low: slope - t * se,
        ci_high: slope + t * se,
        r_squared: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
    })
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let m = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

fn run_trial(manifest: &ExperimentManifest, n: usize, trial: usize, source: Option<&Dataset>) -> Result<TrialRecord> {
    let data = source_data(manifest.dim, n, source, &mut trial_rng(manifest.seed, n, trial, 0))?;
    match run_mechanism(manifest, &data, &mut trial_rng(manifest.seed, n, trial, 1)) {
        Err(Error::EmptySynthetic) => Ok(TrialRecord { n, trial, w1: None, error_bound: 0.0, accuracy_bound: None, synthetic_size: 0 }),
        Err(e) => Err(e),
        Ok((synthetic, summary)) => {
            let w = evaluate(manifest, &data, &synthetic, &summary)?;
            Ok(TrialRecord {
                n,
                trial,
                w1: Some(w.value),
                error_bound: w.error_bound,
                accuracy_bound: summary.accuracy_bound,
                synthetic_size: synthetic.len(),
            })
        }
    }
}

/// Runs `trials` independent runs per size (concurrently, collected in
/// trial order) and fits the log-log rate.
pub fn rate(manifest: &ExperimentManifest, source: Option<&Dataset>) -> Result<RateReport> {
    manifest.validate()?;
    let mut sizes = manifest.n.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 4 {
        return Err(invalid("a rate sweep needs at least four distinct sizes"));
    }
    let mut points = Vec::with_capacity(sizes.len());
    let mut records = Vec::new();
    for &n in &sizes {
        let recs = (0..manifest.trials)
            .into_par_iter()
            .map(|t| run_trial(manifest, n, t, source))
            .collect::<Result<Vec<_>>>()?;
        let ok: Vec<&TrialRecord> = recs.iter().filter(|r| r.w1.is_some()).collect();
        let failures = recs.len() - ok.len();
        if failures * 5 > manifest.trials || ok.is_empty() {
            return Err(Error::TooManyFailures { n, failures, trials: manifest.trials });
        }
        let w: Vec<f64> = ok.iter().map(|r| r.w1.unwrap_or_default()).collect();
        let c: Vec<f64> = ok.iter().map(|r| r.w1.unwrap_or_default() - r.error_bound).collect();
        let (mean, stderr) = mean_stderr(&w);
        let (mean_corrected, stderr_corrected) = mean_stderr(&c);
        let bounds: Vec<f64> = ok.iter().filter_map(|r| r.accuracy_bound).collect();
        let en = manifest.epsilon * n as f64;
        let scaled = if manifest.dim == 1 { mean * en / en.log2().powi(2) } else { mean * en.powf(1.0 / manifest.dim as f64) };
        points.push(RatePoint {
            n,
            trials: recs.len(),
            failures,
            mean,
            stderr,
            mean_error_bound: ok.iter().map(|r| r.error_bound).sum::<f64>() / ok.len() as f64,
            mean_corrected,
            stderr_corrected,
            mean_accuracy_bound: (!bounds.is_empty()).then(|| bounds.iter().sum::<f64>() / bounds.len() as f64),
            scaled,
        });
        records.extend(recs);
    }
    let x: Vec<f64> = points.iter().map(|p| (manifest.epsilon * p.n as f64).log2()).collect();
    let fit = fit_slope(&x, &points.iter().map(|p| p.mean.log2()).collect::<Vec<_>>())?;
    let corrected_fit = if points.iter().any(|p| p.mean_error_bound > 0.0) {
        if points.iter().all(|p| p.mean_corrected > 0.0) {
            Some(fit_slope(&x, &points.iter().map(|p| p.mean_corrected.log2()).collect::<Vec<_>>())?)
        } else {
            None
        }
    } else {
        None
    };
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(l, h), p| (l.min(p.scaled), h.max(p.scaled)));
    Ok(RateReport { manifest: manifest.clone(), points, fit, corrected_fit, constant_spread: hi / lo, trials: records })
}
