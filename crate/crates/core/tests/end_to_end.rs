use privsynth::audit::{audit_pmm, audit_psmm};
use privsynth::experiment::{generate, rate, trial_rng};
use privsynth::io::{read_csv, write_csv};
use privsynth::metrics::{w1_1d, w1_lattice_snapped};
use privsynth::pmm::{run_pmm, PmmConfig};
use privsynth::psmm::{run_psmm, PsmmConfig};
use privsynth::{Dataset, DiscreteSignedMeasure, ExperimentManifest, Mechanism};

fn uniform(dim: usize, n: usize, trial: usize) -> Dataset {
    Dataset::uniform(dim, n, &mut trial_rng(7, n, trial, 0)).unwrap()
}

#[test]
fn pmm_line_mean_error_stays_under_bound() {
    let n = 2048;
    let config = PmmConfig::new(1.0);
    let mut total = 0.0;
    let mut bound = 0.0;
    for trial in 0..20 {
        let data = uniform(1, n, trial);
        let run = run_pmm(&data, &config, &mut trial_rng(7, n, trial, 1)).unwrap();
        assert!(run.consistent.is_consistent());
        assert_eq!(run.synthetic.len() as i64, run.consistent.root());
        let a = DiscreteSignedMeasure::empirical(&data).unwrap();
        let b = DiscreteSignedMeasure::empirical(&run.synthetic).unwrap();
        total += w1_1d(&a, &b).unwrap();
        bound = run.accuracy_bound();
    }
    let mean = total / 20.0;
    assert!(mean <= bound, "mean W1 {mean} exceeds bound {bound}");
}

#[test]
fn psmm_output_lives_on_the_grid() {
    let n = 1024;
    let data = uniform(2, n, 0);
    let run = run_psmm(&data, &PsmmConfig::new(1.0), &mut trial_rng(7, n, 0, 1)).unwrap();
    assert_eq!(run.synthetic.len() as u64, run.denominator);
    assert!(run.projection.tau.is_probability());
    let k = run.grid.side() as f64;
    for p in run.synthetic.points() {
        for &x in p {
            let scaled = x * k - 0.5;
            assert!((scaled - scaled.round()).abs() < 1e-9, "{x} is not a cell anchor");
        }
    }
    let d = w1_lattice_snapped(&data, &run.synthetic, 2 * run.grid.side()).unwrap();
    assert!(d.value < 0.25, "W1 {} on 1024 points", d.value);
}

#[test]
fn csv_round_trip_is_exact() {
    let data = uniform(3, 200, 1);
    let mut buf = Vec::new();
    write_csv(&mut buf, &data).unwrap();
    assert_eq!(read_csv(buf.as_slice(), false).unwrap(), data);
}

#[test]
fn generate_replays_from_manifest() {
    for mechanism in [Mechanism::Pmm, Mechanism::Psmm] {
        let mut m = ExperimentManifest::new(mechanism, 2, 0.5, vec![3000]);
        m.seed = 99;
        let (a, sa) = generate(&m, None).unwrap();
        let (b, sb) = generate(&m, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        m.seed = 100;
        assert_ne!(generate(&m, None).unwrap().0, a);
    }
}

#[test]
fn audits_separate_sound_and_broken_schedules() {
    let (_, schedule) = PmmConfig::new(1.0).with_depth(2).resolve(100, 1).unwrap();
    assert!(audit_pmm(&schedule, 1.0, 2, 40).unwrap().passed);
    let broken = schedule.scaled_level(1, 0.5).unwrap();
    let report = audit_pmm(&broken, 1.0, 2, 40).unwrap();
    assert!(!report.passed);
    assert!(report.max_log_ratio > 1.0 + 1e-6);
    assert!(audit_psmm(1.0, 3, 2, 40).unwrap().passed);
}

#[test]
fn small_rate_sweep_decays() {
    let mut m = ExperimentManifest::new(Mechanism::Pmm, 1, 1.0, vec![256, 1024, 4096, 16384]);
    m.trials = 8;
    m.seed = 3;
    let report = rate(&m, None).unwrap();
    assert_eq!(report.points.len(), 4);
    assert_eq!(report.trials.len(), 32);
    assert!(report.fit.slope < -0.5, "slope {}", report.fit.slope);
    assert!(report.points.windows(2).all(|w| w[1].mean < w[0].mean));
}
