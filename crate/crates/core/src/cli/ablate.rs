use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use super::dist::prepare_pair;
use super::flow::{FlowScenario, FlowScenarioArgs};
use super::manifest::RunManifest;
use super::{CliError, CliResult, EstimatorArgs};
use crate::cloud::{fmt17, pad_to_common, PointCloud};
use crate::error::{Error, Result};
use crate::estimators;
use crate::linalg::mean_and_std;
use crate::rng::RngStream;
use crate::spec::{EstimatorSpec, Method};
use crate::synthetic;

pub const CSV_HEADER: &str = "param,value,metric_mean,metric_std,time_mean_s,time_std_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblateParam {
    Kappa,
    Projections,
}

impl AblateParam {
    pub fn name(self) -> &'static str {
        match self {
            AblateParam::Kappa => "kappa",
            AblateParam::Projections => "projections",
        }
    }

    /// `spec` with this parameter set to `value`. `projections` sets the
    /// per-evaluation direction count of the method: M for sgw, rpsgw and
    /// rasgw, L for iwrasgw, ebsgw and dsgw.
    pub fn apply(self, spec: &EstimatorSpec, value: f64) -> Result<EstimatorSpec> {
        let mut s = spec.clone();
        match self {
            AblateParam::Kappa => s.scale.kappa = value,
            AblateParam::Projections => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= usize::MAX as f64) {
                    return Err(Error::Domain(format!(
                        "projections must be a positive integer, got {value}"
                    )));
                }
                let m = value as usize;
                match s.method {
                    Method::Sgw | Method::Rpsgw | Method::Rasgw => s.projections = m,
                    Method::Iwrasgw | Method::Ebsgw | Method::Dsgw => s.inner = m,
                    Method::MaxSgw => return Err(Error::Domain("max-sgw has no projection count".into())),
                }
            }
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    Dist,
    Flow,
}

/// What each repeat measures.
#[derive(Debug, Clone)]
pub enum Scenario {
    /// Estimator value between two fixed clouds.
    Dist { a: PointCloud, b: PointCloud },
    /// Final reference score of a flow.
    Flow(FlowScenario),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub param: AblateParam,
    pub value: f64,
    /// One entry per repeat, in repeat order.
    pub metrics: Vec<f64>,
    pub times: Vec<f64>,
}

impl AblationRow {
    pub fn metric_mean_std(&self) -> (f64, f64) {
        mean_and_std(&self.metrics)
    }

    pub fn time_mean_std(&self) -> (f64, f64) {
        mean_and_std(&self.times)
    }
}

/// Repeat `r` uses seed `seed + r` for every setting, so repeats with the
/// same index form matched blocks across settings.
pub fn run_one(scenario: &Scenario, spec: &EstimatorSpec, seed: u64) -> Result<f64> {
    match scenario {
        Scenario::Dist { a, b } => Ok(estimators::estimate(a, b, spec, RngStream::new(seed, 0))?.value),
        Scenario::Flow(f) => {
            let (_, trace) = f.run(spec, seed)?;
            trace
                .last()
                .map(|r| r.reference)
                .ok_or_else(|| Error::Numeric("flow produced an empty trace".into()))
        }
    }
}

pub fn sweep(
    scenario: &Scenario,
    base: &EstimatorSpec,
    param: AblateParam,
    values: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Vec<AblationRow>> {
    if repeats == 0 {
        return Err(Error::Domain("repeats must be at least 1".into()));
    }
    values
        .iter()
        .map(|&v| {
            let spec = param.apply(base, v)?;
            let mut metrics = Vec::with_capacity(repeats);
            let mut times = Vec::with_capacity(repeats);
            for r in 0..repeats as u64 {
                let t0 = Instant::now();
                metrics.push(run_one(scenario, &spec, seed.wrapping_add(r))?);
                times.push(t0.elapsed().as_secs_f64());
            }
            Ok(AblationRow {
                param,
                value: v,
                metrics,
                times,
            })
        })
        .collect()
}

pub fn write_table<W: Write>(rows: &[AblationRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let (mm, ms) = r.metric_mean_std();
        let (tm, ts) = r.time_mean_std();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.param.name(),
            r.value,
            fmt17(mm),
            fmt17(ms),
            fmt17(tm),
            fmt17(ts)
        )?;
    }
    Ok(())
}

fn parse_value(t: &str) -> std::result::Result<f64, String> {
    let t = t.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("not a finite number: {t:?}"))
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    #[arg(long, value_enum)]
    pub param: AblateParam,
    /// Comma-separated settings, e.g. 1,5,10,50.
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_value)]
    pub values: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, value_enum, default_value = "flow")]
    pub scenario: ScenarioKind,
    /// First cloud for the dist scenario (default: synthetic Gaussian-4 in 3D).
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Second cloud for the dist scenario (default: synthetic Gaussian-8).
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[command(flatten)]
    pub flow: FlowScenarioArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV table; the manifest is written next to it as PATH.manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn dist_scenario(args: &AblateArgs) -> Result<Scenario> {
    let (a, b) = match (&args.a, &args.b) {
        (Some(a), Some(b)) => (PointCloud::load_csv(a)?, PointCloud::load_csv(b)?),
        (None, None) => (
            synthetic::gaussian4(3, args.flow.n, RngStream::new(args.seed, 3))?,
            synthetic::gaussian8(args.flow.n, RngStream::new(args.seed, 6))?,
        ),
        _ => return Err(Error::Domain("give both --a and --b or neither".into())),
    };
    let (a, b) = prepare_pair(&a, &b, args.seed).map_err(|e| Error::Domain(e.message))?;
    let (a, b) = pad_to_common(&a, &b);
    Ok(Scenario::Dist { a, b })
}

pub fn run(args: &AblateArgs, recorded: Vec<String>) -> CliResult<()> {
    let started = Instant::now();
    let spec = args.estimator.to_spec()?;
    if args.values.is_empty() {
        return Err(CliError::usage("--values must list at least one setting"));
    }
    if args.repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    for &v in &args.values {
        args.param.apply(&spec, v).map_err(CliError::usage)?;
    }
    let scenario = match args.scenario {
        ScenarioKind::Dist => dist_scenario(args)?,
        ScenarioKind::Flow => {
            let f = FlowScenario::from(&args.flow);
            f.validate(&spec).map_err(CliError::usage)?;
            Scenario::Flow(f)
        }
    };
    let rows = sweep(&scenario, &spec, args.param, &args.values, args.repeats, args.seed)?;
    let f = std::fs::File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_table(&rows, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&args.out, e))?;
    let manifest_path = sidecar(&args.out);
    let mut manifest = RunManifest::new(recorded, spec, args.seed);
    manifest.outputs = vec![args.out.display().to_string(), manifest_path.display().to_string()];
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.save(&manifest_path)?;
    write_table(&rows, std::io::stdout().lock()).map_err(|e| Error::io("<stdout>", e))?;
    Ok(())
}
