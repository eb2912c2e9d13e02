use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use super::manifest::{write_json, RunManifest};
use super::{CliError, CliResult, EstimatorArgs};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::gradflow::{run_flow, FlowConfig, FlowTrace, ReferenceMetric};
use crate::rng::RngStream;
use crate::spec::{EstimatorSpec, Method};
use crate::synthetic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetSpec {
    Gaussian4,
    Gaussian8,
    Csv(PathBuf),
}

impl FromStr for TargetSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian4" => Ok(TargetSpec::Gaussian4),
            "gaussian8" => Ok(TargetSpec::Gaussian8),
            _ => match s.strip_prefix("csv:") {
                Some(p) if !p.is_empty() => Ok(TargetSpec::Csv(PathBuf::from(p))),
                _ => Err(format!("expected gaussian4, gaussian8 or csv:PATH, got {s:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    PermGw,
    RasgwProbe,
}

impl From<ReferenceArg> for ReferenceMetric {
    fn from(r: ReferenceArg) -> Self {
        match r {
            ReferenceArg::PermGw => ReferenceMetric::PermGw,
            ReferenceArg::RasgwProbe => ReferenceMetric::RasgwProbe,
        }
    }
}

/// Flow flags shared by `flow` and `ablate --scenario flow`.
#[derive(Debug, Clone, Args)]
pub struct FlowScenarioArgs {
    /// Dimension of the moving Gaussian source cloud.
    #[arg(long, default_value_t = 3)]
    pub source_dim: usize,
    /// gaussian4, gaussian8 or csv:PATH.
    #[arg(long, default_value = "gaussian4")]
    pub target: TargetSpec,
    /// Dimension of the gaussian4 target (2 or 3).
    #[arg(long, default_value_t = 2)]
    pub target_dim: usize,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub eval_every: usize,
    #[arg(long, value_enum, default_value = "perm-gw")]
    pub reference: ReferenceArg,
}

/// A reproducible flow experiment: a standard normal source of dimension
/// `source_dim` flowing onto `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowScenario {
    pub source_dim: usize,
    pub target: TargetSpec,
    pub target_dim: usize,
    pub n: usize,
    pub steps: usize,
    pub lr: f64,
    pub eval_every: usize,
    pub reference: ReferenceMetric,
}

impl From<&FlowScenarioArgs> for FlowScenario {
    fn from(a: &FlowScenarioArgs) -> Self {
        Self {
            source_dim: a.source_dim,
            target: a.target.clone(),
            target_dim: a.target_dim,
            n: a.n,
            steps: a.steps,
            lr: a.lr,
            eval_every: a.eval_every,
            reference: a.reference.into(),
        }
    }
}

impl FlowScenario {
    pub fn config(&self, spec: EstimatorSpec) -> FlowConfig {
        FlowConfig {
            estimator: spec,
            steps: self.steps,
            learning_rate: self.lr,
            eval_every: self.eval_every,
            reference_metric: self.reference,
        }
    }

    /// Checks everything that does not need data.
    pub fn validate(&self, spec: &EstimatorSpec) -> Result<()> {
        if !matches!(spec.method, Method::Sgw | Method::Rasgw | Method::Iwrasgw) {
            return Err(Error::Domain(format!(
                "flows support sgw, rasgw and iwrasgw, not {}",
                spec.method
            )));
        }
        if self.source_dim == 0 {
            return Err(Error::Domain("source dimension must be at least 1".into()));
        }
        self.config(spec.clone()).validate()
    }

    /// Source and target clouds for `seed`, with equal point counts.
    pub fn build(&self, seed: u64) -> Result<(PointCloud, PointCloud)> {
        let target = match &self.target {
            TargetSpec::Gaussian4 => synthetic::gaussian4(self.target_dim, self.n, RngStream::new(seed, 3))?,
            TargetSpec::Gaussian8 => synthetic::gaussian8(self.n, RngStream::new(seed, 3))?,
            TargetSpec::Csv(p) => {
                let t = PointCloud::load_csv(p)?;
                let k = self.n.min(t.n());
                t.subsample(k, RngStream::new(seed, 5))?
            }
        };
        let source = synthetic::standard_normal(target.n(), self.source_dim, RngStream::new(seed, 2))?;
        Ok((source, target))
    }

    pub fn run(&self, spec: &EstimatorSpec, seed: u64) -> Result<(PointCloud, FlowTrace)> {
        let (source, target) = self.build(seed)?;
        run_flow(&source, &target, &self.config(spec.clone()), RngStream::new(seed, 4))
    }
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub scenario: FlowScenarioArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for trace.jsonl, final.csv and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &FlowArgs, recorded: Vec<String>) -> CliResult<()> {
    let started = Instant::now();
    let spec = args.estimator.to_spec()?;
    let scenario = FlowScenario::from(&args.scenario);
    scenario.validate(&spec).map_err(CliError::usage)?;
    let (final_cloud, trace) = scenario.run(&spec, args.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let trace_path = args.out.join("trace.jsonl");
    let final_path = args.out.join("final.csv");
    let manifest_path = args.out.join("manifest.json");
    trace.save_jsonl(&trace_path)?;
    final_cloud.save_csv(&final_path)?;
    let mut manifest = RunManifest::new(recorded, spec, args.seed);
    manifest.outputs = [&trace_path, &final_path, &manifest_path]
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_json(&manifest_path, &manifest)?;
    if let (Some(first), Some(last)) = (trace.first(), trace.last()) {
        println!(
            "step {}: value {:.11e} ref {:.11e}; step {}: value {:.11e} ref {:.11e}",
            first.step, first.value, first.reference, last.step, last.value, last.reference
        );
    }
    Ok(())
}
