use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use privsynth::audit::{audit_pmm, audit_psmm, AuditReport};
use privsynth::experiment::{self, ExperimentManifest, RatePoint};
use privsynth::io::{read_csv_file, write_csv, write_csv_file};
use privsynth::metrics::{d_bl, w1_1d, w1_grid_snapped, w1_lp, DiscreteSignedMeasure, SUPPORT_LIMIT};
use privsynth::pmm::{optimal_schedule, NoiseSchedule};
use privsynth::{BinaryPartition, Dataset, Error, Mechanism};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{AuditArgs, EvalArgs, Format, Method, RunArgs};

/// How a command failed, which decides the exit code.
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    AuditFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Failure::Usage(e.into()),
            other => Failure::Data(other.into()),
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

type CmdResult = Result<(), Failure>;

/// Reads a manifest, unwrapping `{"manifest": ..}` metadata documents.
fn load_manifest(path: &Path) -> Result<ExperimentManifest, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(data)?;
    let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).map_err(usage)?;
    if let Some(inner) = value.get_mut("manifest") {
        value = inner.take();
    }
    serde_json::from_value(value).with_context(|| format!("invalid manifest {}", path.display())).map_err(usage)
}

fn build_manifest(args: &RunArgs) -> Result<ExperimentManifest, Failure> {
    let mut m = match &args.manifest {
        Some(p) => load_manifest(p)?,
        None => {
            let mechanism = args.mechanism.ok_or_else(|| usage("--mechanism is required"))?;
            let eps = args.eps.ok_or_else(|| usage("--eps is required"))?;
            let n = args.n.clone().unwrap_or_default();
            ExperimentManifest::new(mechanism.into(), args.dim.unwrap_or(1), eps, n)
        }
    };
    if let Some(v) = args.mechanism {
        m.mechanism = v.into();
    }
    if let Some(v) = args.dim {
        m.dim = v;
    }
    if let Some(v) = args.eps {
        m.epsilon = v;
    }
    if let Some(v) = &args.n {
        m.n = v.clone();
    }
    if let Some(v) = args.trials {
        m.trials = v;
    }
    if let Some(v) = args.seed {
        m.seed = v;
    }
    if let Some(v) = args.policy {
        m.policy = v.into();
    }
    if args.depth.is_some() {
        m.depth = args.depth;
    }
    if args.snap_depth.is_some() {
        m.snap_depth = args.snap_depth;
    }
    if args.cells.is_some() {
        m.target_cells = args.cells;
    }
    if args.denominator.is_some() {
        m.denominator = args.denominator;
    }
    if args.input.is_some() {
        m.input = args.input.clone();
    }
    if args.normalize {
        m.normalize = true;
    }
    if args.output.is_some() {
        m.output = args.output.clone();
    }
    if m.input.is_some() && m.n.is_empty() {
        m.n = vec![1];
    }
    m.validate()?;
    Ok(m)
}

fn load_source(m: &ExperimentManifest) -> Result<Option<Dataset>, Failure> {
    m.input
        .as_deref()
        .map(|p| read_csv_file(p, m.normalize).map_err(|e| data(anyhow::Error::from(e).context(format!("reading {}", p.display())))))
        .transpose()
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &[u8]) -> CmdResult {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(data)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn generate(args: RunArgs) -> CmdResult {
    let format = args.format;
    let m = build_manifest(&args)?;
    let source = load_source(&m)?;
    let (synthetic, result) = experiment::generate(&m, source.as_ref())?;
    let meta = to_json(&json!({ "manifest": m, "result": result }));
    match &m.output {
        Some(path) => {
            write_csv_file(path, &synthetic).map_err(|e| data(anyhow::Error::from(e).context(format!("writing {}", path.display()))))?;
            write_file(&with_suffix(path, ".json"), meta.as_bytes())?;
            if format == Format::Json {
                print!("{meta}");
            }
        }
        None => {
            if format == Format::Csv {
                write_csv(io::stdout().lock(), &synthetic)?;
            } else {
                print!("{meta}");
            }
        }
    }
    Ok(())
}

fn rate_table(points: &[RatePoint]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p).map_err(data)?;
    }
    w.into_inner().map_err(|e| data(anyhow!("{e}")))
}

pub fn rate(args: RunArgs) -> CmdResult {
    let format = args.format;
    let m = build_manifest(&args)?;
    let source = load_source(&m)?;
    let report = experiment::rate(&m, source.as_ref())?;
    let json = to_json(&report);
    let table = rate_table(&report.points)?;
    if let Some(stem) = &m.output {
        write_file(&with_suffix(stem, ".json"), json.as_bytes())?;
        write_file(&with_suffix(stem, ".csv"), &table)?;
    }
    let mut out = io::stdout().lock();
    let res = if format == Format::Csv { out.write_all(&table) } else { out.write_all(json.as_bytes()) };
    res.map_err(data)
}

fn print_audit(report: &AuditReport, format: Format) {
    if format == Format::Csv {
        println!("mechanism,epsilon,window,pairs,max_log_ratio,tail_mass,passed");
        println!(
            "{},{},{},{},{},{},{}",
            report.mechanism, report.epsilon, report.window, report.pairs, report.max_log_ratio, report.tail_mass, report.passed
        );
    } else {
        print!("{}", to_json(report));
    }
    eprintln!(
        "{}: max log-ratio {:.12} vs epsilon {} over {} adjacent pairs",
        if report.passed { "PASS" } else { "FAIL" },
        report.max_log_ratio,
        report.epsilon,
        report.pairs
    );
}

pub fn audit(args: AuditArgs) -> CmdResult {
    if !(args.eps > 0.0 && args.eps.is_finite()) {
        return Err(usage(format!("--eps must be positive and finite, got {}", args.eps)));
    }
    let report = match Mechanism::from(args.mechanism) {
        Mechanism::Pmm => {
            let schedule = match args.sigmas {
                Some(s) => NoiseSchedule::new(s)?,
                None => {
                    let p = BinaryPartition::new(1, args.depth)?;
                    optimal_schedule(&p.delta_levels()[..=args.depth as usize], args.eps)?
                }
            };
            audit_pmm(&schedule, args.eps, args.n.unwrap_or(3), args.window)
        }
        Mechanism::Psmm => audit_psmm(args.eps, args.cells, args.n.unwrap_or(2), args.window),
    }
    .map_err(|e| match e {
        Error::WindowTooSmall { .. } => usage(e),
        other => other.into(),
    })?;
    print_audit(&report, args.format);
    if report.passed {
        Ok(())
    } else {
        Err(Failure::AuditFailed)
    }
}

pub fn eval(args: EvalArgs) -> CmdResult {
    let read = |p: &Path| read_csv_file(p, args.normalize).map_err(|e| data(anyhow::Error::from(e).context(format!("reading {}", p.display()))));
    let a = read(&args.file_a)?;
    let b = read(&args.file_b)?;
    if a.dim() != b.dim() {
        return Err(data(Error::DimensionMismatch { expected: a.dim(), found: b.dim() }));
    }
    if let Some(d) = args.dim.filter(|&d| d != a.dim()) {
        return Err(data(Error::DimensionMismatch { expected: d, found: a.dim() }));
    }
    let ma = DiscreteSignedMeasure::empirical(&a)?;
    let mb = DiscreteSignedMeasure::empirical(&b)?;
    let method = match args.method {
        Method::Auto if a.dim() == 1 => Method::OneD,
        Method::Auto if ma.len() + mb.len() <= SUPPORT_LIMIT => Method::Lp,
        Method::Auto => Method::Snapped,
        m => m,
    };
    let (name, value, bound) = match method {
        Method::OneD => ("1d", w1_1d(&ma, &mb)?, None),
        Method::Lp => ("lp", w1_lp(&ma, &mb)?, None),
        Method::Bl => {
            let (x, y) = privsynth::metrics::align(&ma, &mb)?;
            ("bl", d_bl(&x, &y)?, None)
        }
        _ => {
            let s = w1_grid_snapped(&a, &b, args.snap_depth.unwrap_or(12))?;
            ("snapped", s.value, Some(s.error_bound))
        }
    };
    if args.format == Format::Csv {
        println!("method,value,error_bound");
        println!("{name},{value},{}", bound.map_or(String::new(), |b| b.to_string()));
    } else {
        print!("{}", to_json(&json!({ "method": name, "dim": a.dim(), "value": value, "error_bound": bound })));
    }
    Ok(())
}
